#include "igamass/solver.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace igm {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// true residual r = b - A x
void true_residual(const LinOp& A, const std::vector<double>& b, const std::vector<double>& x,
                   std::vector<double>& r, std::vector<double>& scratch) {
    A.apply(x.data(), scratch.data());
    for (std::size_t i = 0; i < b.size(); ++i) r[i] = b[i] - scratch[i];
}

// extreme eigenvalues of the CG tridiagonal built from alpha/beta
void ritz_extremes(const std::vector<double>& alpha, const std::vector<double>& beta, double& lo,
                   double& hi) {
    const int k = static_cast<int>(alpha.size());
    if (k == 0) {
        lo = hi = 1.0;
        return;
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    T(0, 0) = 1.0 / alpha[0];
    for (int j = 1; j < k; ++j) {
        T(j, j) = 1.0 / alpha[static_cast<std::size_t>(j)] +
                  beta[static_cast<std::size_t>(j) - 1] / alpha[static_cast<std::size_t>(j) - 1];
        const double off =
            std::sqrt(beta[static_cast<std::size_t>(j) - 1]) / alpha[static_cast<std::size_t>(j) - 1];
        T(j, j - 1) = T(j - 1, j) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    lo = es.eigenvalues()(0);
    hi = es.eigenvalues()(k - 1);
}

constexpr std::int64_t kDenseGuard = 4096;

Eigen::MatrixXd materialize_eigen(const LinOp& A) {
    if (A.n > kDenseGuard)
        throw std::runtime_error("dense condition number limited to order 4096");
    const std::int64_t n = A.n;
    Eigen::MatrixXd M(n, n);
    std::vector<double> e(static_cast<std::size_t>(n), 0.0), col(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j) {
        e[static_cast<std::size_t>(j)] = 1.0;
        A.apply(e.data(), col.data());
        for (std::int64_t i = 0; i < n; ++i) M(i, j) = col[static_cast<std::size_t>(i)];
        e[static_cast<std::size_t>(j)] = 0.0;
    }
    return M;
}

}  // namespace

const char* to_string(PcgStatus s) {
    switch (s) {
        case PcgStatus::converged: return "converged";
        case PcgStatus::max_iterations: return "max_iterations";
        case PcgStatus::breakdown: return "breakdown";
    }
    return "unknown";
}

PcgResult pcg(const LinOp& A, const LinOp& P_inv, const std::vector<double>& b,
              const PcgOptions& opt) {
    if (A.n != P_inv.n) throw std::invalid_argument("pcg: operator orders differ");
    if (b.size() != static_cast<std::size_t>(A.n))
        throw std::invalid_argument("pcg: right-hand side length mismatch");
    const std::size_t n = b.size();
    const auto t0 = std::chrono::steady_clock::now();

    PcgResult out;
    out.x.assign(n, 0.0);
    PcgReport& rep = out.report;

    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        rep.status = PcgStatus::converged;
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

    std::vector<double> r = b, z(n), p(n), Ap(n), scratch(n);
    std::vector<double> alpha_hist, beta_hist;

    P_inv.apply(r.data(), z.data());
    double rz = dot(r, z);
    if (!(rz > 0.0)) {
        rep.status = PcgStatus::breakdown;
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }
    p = z;

    for (int k = 1; k <= opt.max_iter; ++k) {
        A.apply(p.data(), Ap.data());
        const double pAp = dot(p, Ap);
        if (!(pAp > 0.0)) {
            rep.status = PcgStatus::breakdown;
            break;
        }
        const double alpha = rz / pAp;
        for (std::size_t i = 0; i < n; ++i) out.x[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
        if (opt.estimate_condition) alpha_hist.push_back(alpha);

        double relres = norm2(r) / bnorm;
        bool trued = false;
        if (k % 50 == 0) {
            true_residual(A, b, out.x, r, scratch);
            relres = norm2(r) / bnorm;
            trued = true;
        }
        if (relres <= opt.tol) {
            if (!trued) {
                true_residual(A, b, out.x, r, scratch);
                relres = norm2(r) / bnorm;
            }
            if (relres <= opt.tol) {
                rep.history.push_back(relres);
                rep.iterations = k;
                rep.rel_residual = relres;
                rep.status = PcgStatus::converged;
                break;
            }
        }
        rep.history.push_back(relres);
        rep.iterations = k;
        rep.rel_residual = relres;

        P_inv.apply(r.data(), z.data());
        const double rz_new = dot(r, z);
        if (!(rz_new > 0.0)) {
            rep.status = PcgStatus::breakdown;
            break;
        }
        const double beta = rz_new / rz;
        rz = rz_new;
        if (opt.estimate_condition) beta_hist.push_back(beta);
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    if (rep.status != PcgStatus::converged && rep.status != PcgStatus::breakdown)
        rep.status = PcgStatus::max_iterations;
    rep.flops = static_cast<std::uint64_t>(rep.iterations) *
                (opt.flops_per_matvec + opt.flops_per_precond);
    if (opt.estimate_condition) {
        // use only the betas that pair with a completed next step
        if (beta_hist.size() >= alpha_hist.size() && !alpha_hist.empty())
            beta_hist.resize(alpha_hist.size() - 1);
        ritz_extremes(alpha_hist, beta_hist, rep.ritz_min, rep.ritz_max);
        rep.kappa_estimate = rep.ritz_min > 0.0 ? rep.ritz_max / rep.ritz_min : 0.0;
        rep.have_condition = true;
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

double reduction_factor(double kappa) {
    if (kappa < 1.0 - 1e-9) throw std::invalid_argument("reduction_factor: condition number below 1");
    const double s = std::sqrt(std::max(kappa, 1.0));
    return (s - 1.0) / (s + 1.0);
}

DenseMatrix materialize(const LinOp& A) {
    Eigen::MatrixXd M = materialize_eigen(A);
    DenseMatrix out(static_cast<int>(A.n), static_cast<int>(A.n));
    for (std::int64_t i = 0; i < A.n; ++i)
        for (std::int64_t j = 0; j < A.n; ++j)
            out(static_cast<int>(i), static_cast<int>(j)) = M(i, j);
    return out;
}

EigRange eigenvalue_range_dense(const LinOp& A) {
    Eigen::MatrixXd M = materialize_eigen(A);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    return {es.eigenvalues()(0), es.eigenvalues()(A.n - 1)};
}

double condition_number_dense(const LinOp& A) {
    const EigRange r = eigenvalue_range_dense(A);
    if (!(r.min > 0.0)) throw std::runtime_error("condition number: operator not positive definite");
    return r.max / r.min;
}

EigRange eigenvalue_range_dense(const LinOp& A, const LinOp& P_inv) {
    if (A.n != P_inv.n) throw std::invalid_argument("condition number: operator orders differ");
    Eigen::MatrixXd Ad = materialize_eigen(A);
    Eigen::MatrixXd Bd = materialize_eigen(P_inv);
    Eigen::LLT<Eigen::MatrixXd> llt(Bd);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("condition number: preconditioner not positive definite");
    Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd C = L.transpose() * Ad * L;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    return {es.eigenvalues()(0), es.eigenvalues()(A.n - 1)};
}

double condition_number_dense(const LinOp& A, const LinOp& P_inv) {
    const EigRange r = eigenvalue_range_dense(A, P_inv);
    if (!(r.min > 0.0)) throw std::runtime_error("condition number: operator not positive definite");
    return r.max / r.min;
}

LanczosResult condition_number_lanczos(const LinOp& A, const LinOp& P_inv, int max_iter,
                                       unsigned seed) {
    if (A.n != P_inv.n)
        throw std::invalid_argument("condition number: operator orders differ");
    const std::size_t n = static_cast<std::size_t>(A.n);
    const int iters = static_cast<int>(std::min<std::int64_t>(max_iter, A.n));

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = uni(rng);

    // q_j are orthonormal in the P^{-1} inner product; t_j = P^{-1} q_j
    std::vector<std::vector<double>> Q, T;
    std::vector<double> alpha, beta;
    std::vector<double> t(n), w(n), u(n);

    P_inv.apply(v.data(), t.data());
    double nb2 = dot(v, t);
    if (!(nb2 > 0.0))
        throw std::runtime_error("condition number: preconditioner not positive definite");
    double inv = 1.0 / std::sqrt(nb2);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] *= inv;
        t[i] *= inv;
    }
    Q.push_back(v);
    T.push_back(t);

    for (int j = 0; j < iters; ++j) {
        A.apply(T[static_cast<std::size_t>(j)].data(), w.data());
        const double aj = dot(w, T[static_cast<std::size_t>(j)]);
        alpha.push_back(aj);
        for (std::size_t i = 0; i < n; ++i) w[i] -= aj * Q[static_cast<std::size_t>(j)][i];
        if (j > 0) {
            const double bj = beta[static_cast<std::size_t>(j) - 1];
            for (std::size_t i = 0; i < n; ++i) w[i] -= bj * Q[static_cast<std::size_t>(j) - 1][i];
        }
        // full reorthogonalization, two passes
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) {
                const double c = dot(w, T[static_cast<std::size_t>(i)]);
                for (std::size_t l = 0; l < n; ++l) w[l] -= c * Q[static_cast<std::size_t>(i)][l];
            }
        if (j + 1 == iters) break;
        P_inv.apply(w.data(), u.data());
        const double b2 = dot(w, u);
        const double scale = std::abs(aj) + (j > 0 ? beta[static_cast<std::size_t>(j) - 1] : 0.0);
        if (!(b2 > scale * scale * 1e-28)) break;  // invariant subspace reached
        const double bj = std::sqrt(b2);
        beta.push_back(bj);
        inv = 1.0 / bj;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= inv;
            u[i] *= inv;
        }
        Q.push_back(w);
        T.push_back(u);
    }

    const int k = static_cast<int>(alpha.size());
    Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(k, k);
    for (int j = 0; j < k; ++j) {
        Tm(j, j) = alpha[static_cast<std::size_t>(j)];
        if (j + 1 < k) Tm(j, j + 1) = Tm(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
    LanczosResult out;
    out.lambda_min = es.eigenvalues()(0);
    out.lambda_max = es.eigenvalues()(k - 1);
    out.iterations = k;
    if (!(out.lambda_min > 0.0))
        throw std::runtime_error("condition number: operator not positive definite");
    out.kappa = out.lambda_max / out.lambda_min;
    return out;
}

double estimate_condition_number(const LinOp& A, const LinOp& P_inv, std::int64_t dense_cutoff) {
    if (A.n <= dense_cutoff) return condition_number_dense(A, P_inv);
    return condition_number_lanczos(A, P_inv).kappa;
}

}  // namespace igm
