#include "igamass/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "igamass/assembly.hpp"
#include "igamass/multipatch.hpp"
#include "igamass/precond.hpp"
#include "igamass/solver.hpp"
#include "igamass/splines.hpp"

namespace igm {

namespace {

std::string fmt_i(std::int64_t v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%lld", static_cast<long long>(v));
    return b;
}

std::string fmt_time(double s) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.4f", s);
    return b;
}

std::string fmt_sci(double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.3e", v);
    return b;
}

std::string fmt_val(double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.6g", v);
    return b;
}

double median3(double a, double b, double c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

double now_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool is_known_precond(const std::string& p) {
    return p == "mass" || p == "chan-evans" || p == "jacobi" || p == "none" ||
           p == "additive-schwarz";
}

double projection_target(const std::array<double, 3>& x, int d) {
    double v = 1.0;
    for (int k = 0; k < d; ++k) v *= std::cos(M_PI * x[static_cast<std::size_t>(k)]);
    return v;
}

// Whatever preconditioner the row asked for, reduced to inverse/forward
// operators plus its measured per-apply cost. Owns the instance.
struct PrecondBundle {
    LinOp inv;
    bool has_forward = false;
    LinOp forward;
    std::uint64_t flops_per_apply = 0;
    double setup_seconds = 0.0;

    std::unique_ptr<MassPreconditioner> mass;
    std::unique_ptr<ChanEvansPreconditioner> ce;
    std::unique_ptr<JacobiPreconditioner> jac;
    std::unique_ptr<AdditiveSchwarzPreconditioner> as;
};

PrecondBundle make_precond(const std::string& kind, const MultipatchSpace& ms, const SparseSym& M,
                           int points_per_span) {
    PrecondBundle b;
    const auto t0 = std::chrono::steady_clock::now();
    if (kind == "mass" || kind == "chan-evans") {
        if (ms.num_patches() != 1)
            throw ConfigError("preconditioner '" + kind +
                              "' needs a single-patch geometry; use additive-schwarz");
        const TensorBasis& sp = ms.spaces[0];
        const Patch& patch = ms.geo.patches[0];
        const QuadGrid grid = make_quad_grid(sp, points_per_span);
        if (kind == "mass") {
            std::vector<Banded> factors = assemble_parametric_mass(sp, grid);
            b.mass = std::make_unique<MassPreconditioner>(factors, DiagonalMatrix{M.diagonal()});
            b.inv = b.mass->inverse_op();
            b.forward = b.mass->forward_op();
            b.has_forward = true;
        } else {
            if (!patch.regular)
                throw ConfigError("preconditioner 'chan-evans' needs a regular geometry map");
            b.ce = std::make_unique<ChanEvansPreconditioner>(
                setup_chan_evans_preconditioner(sp, patch, grid));
            b.inv = b.ce->inverse_op();
        }
    } else if (kind == "jacobi") {
        b.jac = std::make_unique<JacobiPreconditioner>(DiagonalMatrix{M.diagonal()});
        b.inv = b.jac->inverse_op();
    } else if (kind == "none") {
        b.inv = identity_op(M.n);
    } else if (kind == "additive-schwarz") {
        b.as = std::make_unique<AdditiveSchwarzPreconditioner>(ms, points_per_span);
        b.inv = b.as->inverse_op();
    } else {
        throw ConfigError("unknown preconditioner '" + kind + "'");
    }
    b.setup_seconds = now_seconds(t0);

    if (kind != "none") {
        std::vector<double> probe(static_cast<std::size_t>(M.n), 1.0),
            out(static_cast<std::size_t>(M.n));
        if (b.mass) b.flops_per_apply = b.mass->apply_inverse(probe.data(), out.data());
        if (b.ce) b.flops_per_apply = b.ce->apply_inverse(probe.data(), out.data());
        if (b.jac) b.flops_per_apply = b.jac->apply_inverse(probe.data(), out.data());
        if (b.as) b.flops_per_apply = b.as->apply_inverse(probe.data(), out.data());
    }
    return b;
}

struct Assembled {
    MultipatchSpace ms;
    SparseSym M;
    std::vector<double> rhs;
    double seconds = 0.0;
};

Assembled assemble_problem(const MultipatchGeometry& geo, int degree, int n_sub) {
    const auto t0 = std::chrono::steady_clock::now();
    Assembled a;
    a.ms = build_multipatch_space(geo, degree, n_sub);
    const int q = degree + 1;
    a.M = assemble_global_mass(a.ms, q);
    const int d = geo.dim();
    a.rhs = assemble_global_l2_rhs(a.ms, q,
                                   [d](const std::array<double, 3>& x) {
                                       return projection_target(x, d);
                                   });
    a.seconds = now_seconds(t0);
    return a;
}

std::int64_t estimate_nnz(const MultipatchGeometry& geo, int degree, int n_sub) {
    const int d = geo.dim();
    std::int64_t dofs = 0;
    std::int64_t per_dir = n_sub + degree;
    std::int64_t per_patch = 1;
    for (int k = 0; k < d; ++k) per_patch *= per_dir;
    dofs = per_patch * geo.num_patches();
    std::int64_t band = 1;
    for (int k = 0; k < d; ++k) band *= 2 * degree + 1;
    return dofs * band;
}

LinOp matvec_op(const SparseSym& M) {
    return {M.n, [&M](const double* x, double* y) { spmv(M, x, y); }};
}

}  // namespace

void validate_config(const BenchmarkConfig& cfg) {
    if (cfg.degrees.empty()) throw ConfigError("no degrees given");
    for (int p : cfg.degrees)
        if (p < 1 || p > max_degree)
            throw ConfigError("degree " + std::to_string(p) + " out of range [1, " +
                              std::to_string(max_degree) + "]");
    if (cfg.n_subs.empty()) throw ConfigError("no subdivision counts given");
    for (int n : cfg.n_subs)
        if (n < 4) throw ConfigError("n_sub " + std::to_string(n) + " below the minimum of 4");
    if (!is_known_precond(cfg.precond)) throw ConfigError("unknown preconditioner '" + cfg.precond + "'");
    if (cfg.format != "csv" && cfg.format != "markdown")
        throw ConfigError("unknown format '" + cfg.format + "' (csv or markdown)");
    if (!(cfg.tol > 0.0) || cfg.tol >= 1.0) throw ConfigError("tolerance must be in (0, 1)");
    if (cfg.max_iter < 1) throw ConfigError("max_iter must be positive");
    if (cfg.threads < 0) throw ConfigError("threads must be non-negative");
}

MultipatchGeometry resolve_geometry(const std::string& name_or_path) {
    for (const std::string& name : catalog_names())
        if (name == name_or_path) return catalog(name_or_path);
    if (name_or_path.size() > 5 &&
        name_or_path.compare(name_or_path.size() - 5, 5, ".json") == 0) {
        try {
            return load_geometry_json(name_or_path);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    throw ConfigError("unknown geometry '" + name_or_path +
                      "' (not a catalog name, and not a .json file)");
}

TableWriter::TableWriter(std::ostream& os, const std::string& format,
                         std::vector<std::string> headers)
    : os_(os), markdown_(format == "markdown"), ncols_(headers.size()) {
    if (markdown_) {
        widths_.resize(ncols_);
        for (std::size_t c = 0; c < ncols_; ++c) widths_[c] = std::max<std::size_t>(headers[c].size(), 10);
        os_ << "|";
        for (std::size_t c = 0; c < ncols_; ++c) {
            os_ << " " << headers[c] << std::string(widths_[c] - headers[c].size(), ' ') << " |";
        }
        os_ << "\n|";
        for (std::size_t c = 0; c < ncols_; ++c) os_ << std::string(widths_[c] + 2, '-') << "|";
        os_ << "\n";
    } else {
        for (std::size_t c = 0; c < ncols_; ++c) os_ << (c ? "," : "") << headers[c];
        os_ << "\n";
    }
    os_.flush();
}

void TableWriter::row(const std::vector<std::string>& cells) {
    if (markdown_) {
        os_ << "|";
        for (std::size_t c = 0; c < ncols_; ++c) {
            const std::string& v = c < cells.size() ? cells[c] : std::string();
            const std::size_t pad = widths_[c] > v.size() ? widths_[c] - v.size() : 0;
            os_ << " " << v << std::string(pad, ' ') << " |";
        }
        os_ << "\n";
    } else {
        for (std::size_t c = 0; c < ncols_; ++c)
            os_ << (c ? "," : "") << (c < cells.size() ? cells[c] : std::string());
        os_ << "\n";
    }
    os_.flush();
}

namespace {

// One benchmark row; never throws (errors land in the status column).
std::vector<std::string> bench_row(const BenchmarkConfig& cfg, const MultipatchGeometry& geo,
                                   int p, int n_sub, bool timings, int& failed) {
    std::vector<std::string> cells = {cfg.geometry, cfg.precond, fmt_i(p), fmt_i(n_sub)};
    if (estimate_nnz(geo, p, n_sub) > cfg.nnz_cap) {
        for (int c = 0; c < 8; ++c) cells.push_back("*");
        return cells;
    }
    try {
        Assembled a = assemble_problem(geo, p, n_sub);
        PrecondBundle pc = make_precond(cfg.precond, a.ms, a.M, p + 1);
        const LinOp A = matvec_op(a.M);

        PcgOptions opt;
        opt.tol = cfg.tol;
        opt.max_iter = cfg.max_iter;
        opt.flops_per_matvec = 2 * static_cast<std::uint64_t>(a.M.nnz());
        opt.flops_per_precond = pc.flops_per_apply;

        PcgResult res = pcg(A, pc.inv, a.rhs, opt);
        double solve_s = res.report.seconds;
        if (timings) {
            const double s2 = pcg(A, pc.inv, a.rhs, opt).report.seconds;
            const double s3 = pcg(A, pc.inv, a.rhs, opt).report.seconds;
            solve_s = median3(res.report.seconds, s2, s3);
        }

        std::string kappa_cell;
        if (cfg.compute_kappa && a.M.n <= cfg.dense_guard) {
            if (cfg.precond == "none")
                kappa_cell = fmt_val(condition_number_dense(A));
            else
                kappa_cell = fmt_val(condition_number_dense(A, pc.inv));
        }

        cells.push_back(fmt_i(a.M.n));
        cells.push_back(fmt_i(a.M.nnz()));
        cells.push_back(timings ? fmt_time(pc.setup_seconds) : "");
        cells.push_back(timings ? fmt_time(solve_s) : "");
        cells.push_back(fmt_i(res.report.iterations));
        cells.push_back(fmt_sci(res.report.rel_residual));
        cells.push_back(kappa_cell);
        cells.push_back(to_string(res.report.status));
        if (res.report.status != PcgStatus::converged) ++failed;
    } catch (const ConfigError&) {
        throw;  // configuration problems abort the run
    } catch (const std::exception& e) {
        cells.resize(4);
        for (int c = 0; c < 7; ++c) cells.push_back("");
        cells.push_back(std::string("error: ") + e.what());
        ++failed;
    }
    return cells;
}

}  // namespace

RunSummary run_benchmark(const BenchmarkConfig& cfg, std::ostream& os) {
    validate_config(cfg);
    const MultipatchGeometry geo = resolve_geometry(cfg.geometry);
    TableWriter w(os, cfg.format,
                  {"geometry", "precond", "p", "n_sub", "dofs", "nnz", "setup_s", "solve_s",
                   "iters", "relres", "kappa", "status"});
    RunSummary sum;

    std::vector<std::pair<int, int>> combos;
    for (int p : cfg.degrees)
        for (int n : cfg.n_subs) combos.emplace_back(p, n);

    if (cfg.parallel_rows) {
        std::vector<std::vector<std::string>> rows(combos.size());
        int failed = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : failed)
        for (std::size_t i = 0; i < combos.size(); ++i) {
            int f = 0;
            rows[i] = bench_row(cfg, geo, combos[i].first, combos[i].second, false, f);
            failed += f;
        }
        for (const auto& r : rows) w.row(r);
        sum.rows = static_cast<int>(rows.size());
        sum.solver_failures = failed;
    } else {
        for (const auto& [p, n] : combos) {
            int f = 0;
            w.row(bench_row(cfg, geo, p, n, true, f));
            ++sum.rows;
            sum.solver_failures += f;
        }
    }
    return sum;
}

RunSummary run_kappa(const BenchmarkConfig& cfg, std::ostream& os) {
    validate_config(cfg);
    const MultipatchGeometry geo = resolve_geometry(cfg.geometry);
    TableWriter w(os, cfg.format,
                  {"geometry", "precond", "p", "n_sub", "dofs", "kappa", "lambda_min",
                   "lambda_max", "q", "method"});
    RunSummary sum;
    for (int p : cfg.degrees)
        for (int n : cfg.n_subs) {
            ++sum.rows;
            std::vector<std::string> cells = {cfg.geometry, cfg.precond, fmt_i(p), fmt_i(n)};
            if (estimate_nnz(geo, p, n) > cfg.nnz_cap) {
                for (int c = 0; c < 6; ++c) cells.push_back("*");
                w.row(cells);
                continue;
            }
            try {
                Assembled a = assemble_problem(geo, p, n);
                PrecondBundle pc = make_precond(cfg.precond, a.ms, a.M, p + 1);
                const LinOp A = matvec_op(a.M);
                EigRange r;
                const char* method;
                if (a.M.n <= cfg.dense_cutoff) {
                    r = cfg.precond == "none" ? eigenvalue_range_dense(A)
                                              : eigenvalue_range_dense(A, pc.inv);
                    method = "dense";
                } else {
                    const LanczosResult lr = cfg.precond == "none"
                                                 ? condition_number_lanczos(A, identity_op(A.n))
                                                 : condition_number_lanczos(A, pc.inv);
                    r = {lr.lambda_min, lr.lambda_max};
                    method = "lanczos";
                }
                const double kappa = r.max / r.min;
                cells.push_back(fmt_i(a.M.n));
                cells.push_back(fmt_val(kappa));
                cells.push_back(fmt_sci(r.min));
                cells.push_back(fmt_sci(r.max));
                cells.push_back(fmt_val(reduction_factor(kappa)));
                cells.push_back(method);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                cells.resize(4);
                for (int c = 0; c < 5; ++c) cells.push_back("");
                cells.push_back(std::string("error: ") + e.what());
                ++sum.solver_failures;
            }
            w.row(cells);
        }
    return sum;
}

RunSummary run_compare(const BenchmarkConfig& cfg, std::ostream& os) {
    validate_config(cfg);
    const MultipatchGeometry geo = resolve_geometry(cfg.geometry);
    if (geo.num_patches() != 1)
        throw ConfigError("compare needs a single-patch geometry");
    if (!geo.patches[0].regular)
        throw ConfigError("compare needs a regular geometry map (chan-evans requirement)");
    TableWriter w(os, cfg.format,
                  {"geometry", "p", "n_sub", "dofs", "kappa_mass", "kappa_ce", "q_mass", "q_ce",
                   "q_mass_sq"});
    RunSummary sum;
    for (int p : cfg.degrees)
        for (int n : cfg.n_subs) {
            ++sum.rows;
            std::vector<std::string> cells = {cfg.geometry, fmt_i(p), fmt_i(n)};
            if (estimate_nnz(geo, p, n) > cfg.nnz_cap) {
                for (int c = 0; c < 6; ++c) cells.push_back("*");
                w.row(cells);
                continue;
            }
            try {
                Assembled a = assemble_problem(geo, p, n);
                PrecondBundle pm = make_precond("mass", a.ms, a.M, p + 1);
                PrecondBundle pe = make_precond("chan-evans", a.ms, a.M, p + 1);
                const LinOp A = matvec_op(a.M);
                const bool dense = a.M.n <= cfg.dense_cutoff;
                const double km = dense ? condition_number_dense(A, pm.inv)
                                        : condition_number_lanczos(A, pm.inv).kappa;
                const double ke = dense ? condition_number_dense(A, pe.inv)
                                        : condition_number_lanczos(A, pe.inv).kappa;
                const double qm = reduction_factor(km), qe = reduction_factor(ke);
                cells.push_back(fmt_i(a.M.n));
                cells.push_back(fmt_val(km));
                cells.push_back(fmt_val(ke));
                cells.push_back(fmt_val(qm));
                cells.push_back(fmt_val(qe));
                cells.push_back(fmt_val(qm * qm));
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                cells.resize(3);
                for (int c = 0; c < 5; ++c) cells.push_back("");
                cells.push_back(std::string("error: ") + e.what());
                ++sum.solver_failures;
            }
            w.row(cells);
        }
    return sum;
}

void list_geometries(const BenchmarkConfig& cfg, std::ostream& os) {
    TableWriter w(os, cfg.format, {"name", "dim", "patches", "regular", "interfaces"});
    for (const std::string& name : catalog_names()) {
        const MultipatchGeometry g = catalog(name);
        bool regular = true;
        for (const Patch& p : g.patches) regular = regular && p.regular;
        w.row({name, fmt_i(g.dim()), fmt_i(g.num_patches()), regular ? "yes" : "no",
               fmt_i(static_cast<std::int64_t>(g.interfaces.size()))});
    }
}

}  // namespace igm
