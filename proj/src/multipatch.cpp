#include "igamass/multipatch.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace igm {

namespace {

struct UnionFind {
    std::vector<std::int64_t> parent;

    explicit UnionFind(std::int64_t n) : parent(static_cast<std::size_t>(n)) {
        for (std::int64_t i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    }
    std::int64_t find(std::int64_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

// b-side face-local index for a-side (u,v); mirrors the interface detection
std::array<int, 2> orient_index(int orientation, int u, int v, const std::array<int, 2>& size_b) {
    int s1 = u, s2 = v;
    if (orientation & 4) std::swap(s1, s2);
    if (orientation & 1) s1 = size_b[0] - 1 - s1;
    if (orientation & 2) s2 = size_b[1] - 1 - s2;
    return {s1, s2};
}

bool knots_equal(const KnotVector& a, const KnotVector& b, bool reversed) {
    if (a.degree != b.degree || a.knots.size() != b.knots.size()) return false;
    const std::size_t n = a.knots.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double tb = reversed ? 1.0 - b.knots[n - 1 - i] : b.knots[i];
        if (std::abs(a.knots[i] - tb) > 1e-12) return false;
    }
    return true;
}

[[noreturn]] void conformity_error(const MultipatchGeometry& geo, int a, int b) {
    throw std::runtime_error("multipatch conformity: patches " + std::to_string(a) + " ('" +
                             geo.patches[static_cast<std::size_t>(a)].label + "') and " +
                             std::to_string(b) + " ('" +
                             geo.patches[static_cast<std::size_t>(b)].label +
                             "') have mismatched discretizations along a shared interface");
}

}  // namespace

MultipatchSpace build_multipatch_space(const MultipatchGeometry& geo,
                                       std::vector<TensorBasis> spaces) {
    geo.validate();
    if (spaces.size() != geo.patches.size())
        throw std::invalid_argument("multipatch space: one space per patch required");
    const int d = geo.dim();
    const int R = geo.num_patches();
    for (int r = 0; r < R; ++r) {
        spaces[static_cast<std::size_t>(r)].validate();
        if (spaces[static_cast<std::size_t>(r)].dim() != d)
            throw std::invalid_argument("multipatch space: space dimension mismatch on patch " +
                                        std::to_string(r));
    }
    const int degree = spaces[0].kv[0].degree;
    for (const TensorBasis& tb : spaces)
        for (const KnotVector& kv : tb.kv)
            if (kv.degree != degree)
                throw std::invalid_argument("multipatch space: mixed degrees across patches");

    std::vector<std::int64_t> off(static_cast<std::size_t>(R) + 1, 0);
    for (int r = 0; r < R; ++r)
        off[static_cast<std::size_t>(r) + 1] =
            off[static_cast<std::size_t>(r)] + spaces[static_cast<std::size_t>(r)].total_dof();
    UnionFind uf(off[static_cast<std::size_t>(R)]);

    for (const Interface& f : geo.interfaces) {
        const int a = f.patch_a, b = f.patch_b;
        const TensorBasis& sa = spaces[static_cast<std::size_t>(a)];
        const TensorBasis& sb = spaces[static_cast<std::size_t>(b)];
        const auto ma = sa.sizes(), mb = sb.sizes();
        const int ka = f.face_a / 2, side_a = f.face_a % 2;
        const int kb = f.face_b / 2, side_b = f.face_b % 2;
        std::array<int, 2> ta = {-1, -1}, tb = {-1, -1};
        int nt = 0;
        for (int c = 0; c < d; ++c)
            if (c != ka) ta[nt++] = c;
        nt = 0;
        for (int c = 0; c < d; ++c)
            if (c != kb) tb[nt++] = c;

        // conformity along each tangential direction, honoring the
        // orientation's axis swap and reversals
        for (int t = 0; t < nt; ++t) {
            const int bc = (f.orientation & 4) ? 1 - t : t;
            const bool reversed = (f.orientation >> bc) & 1;
            const KnotVector& kva = sa.kv[static_cast<std::size_t>(ta[t])];
            const KnotVector& kvb = sb.kv[static_cast<std::size_t>(tb[bc])];
            if (ma[ta[t]] != mb[tb[bc]] || !knots_equal(kva, kvb, reversed))
                conformity_error(geo, a, b);
        }

        const int ua = nt > 0 ? ma[ta[0]] : 1;
        const int va = nt > 1 ? ma[ta[1]] : 1;
        const std::array<int, 2> size_b = {nt > 0 ? mb[tb[0]] : 1, nt > 1 ? mb[tb[1]] : 1};
        for (int v = 0; v < va; ++v)
            for (int u = 0; u < ua; ++u) {
                std::array<int, 3> mia = {0, 0, 0}, mib = {0, 0, 0};
                mia[ka] = side_a == 0 ? 0 : ma[ka] - 1;
                if (nt > 0) mia[ta[0]] = u;
                if (nt > 1) mia[ta[1]] = v;
                const auto s = orient_index(f.orientation, u, v, size_b);
                mib[kb] = side_b == 0 ? 0 : mb[kb] - 1;
                if (nt > 0) mib[tb[0]] = s[0];
                if (nt > 1) mib[tb[1]] = s[1];
                uf.unite(off[static_cast<std::size_t>(a)] + sa.linear_index(mia),
                         off[static_cast<std::size_t>(b)] + sb.linear_index(mib));
            }
    }

    MultipatchSpace ms;
    ms.geo = geo;
    ms.spaces = std::move(spaces);
    ms.gmap.resize(static_cast<std::size_t>(R));
    std::vector<std::int64_t> root_id(static_cast<std::size_t>(off[static_cast<std::size_t>(R)]),
                                      -1);
    std::int64_t next = 0;
    for (int r = 0; r < R; ++r) {
        const std::int64_t nloc = ms.spaces[static_cast<std::size_t>(r)].total_dof();
        auto& gm = ms.gmap[static_cast<std::size_t>(r)];
        gm.resize(static_cast<std::size_t>(nloc));
        for (std::int64_t i = 0; i < nloc; ++i) {
            const std::int64_t root = uf.find(off[static_cast<std::size_t>(r)] + i);
            if (root_id[static_cast<std::size_t>(root)] < 0)
                root_id[static_cast<std::size_t>(root)] = next++;
            gm[static_cast<std::size_t>(i)] = root_id[static_cast<std::size_t>(root)];
        }
    }
    ms.total_dof = next;
    ms.multiplicity.assign(static_cast<std::size_t>(next), 0);
    for (const auto& gm : ms.gmap)
        for (std::int64_t g : gm) ++ms.multiplicity[static_cast<std::size_t>(g)];
    ms.n_adj = 1;
    for (int m : ms.multiplicity) ms.n_adj = std::max(ms.n_adj, m);
    return ms;
}

MultipatchSpace build_multipatch_space(const MultipatchGeometry& geo, int degree, int n_sub) {
    std::vector<TensorBasis> spaces;
    spaces.reserve(geo.patches.size());
    for (const Patch& p : geo.patches) spaces.push_back(make_uniform_space(p.dim(), degree, n_sub));
    return build_multipatch_space(geo, std::move(spaces));
}

std::vector<double> patch_restrict(const MultipatchSpace& ms, int r,
                                   const std::vector<double>& global) {
    if (global.size() != static_cast<std::size_t>(ms.total_dof))
        throw std::invalid_argument("patch_restrict: global vector length mismatch");
    const auto& gm = ms.gmap[static_cast<std::size_t>(r)];
    std::vector<double> local(gm.size());
    for (std::size_t i = 0; i < gm.size(); ++i)
        local[i] = global[static_cast<std::size_t>(gm[i])];
    return local;
}

void patch_prolong_add(const MultipatchSpace& ms, int r, const std::vector<double>& local,
                       std::vector<double>& global) {
    const auto& gm = ms.gmap[static_cast<std::size_t>(r)];
    if (local.size() != gm.size() || global.size() != static_cast<std::size_t>(ms.total_dof))
        throw std::invalid_argument("patch_prolong_add: vector length mismatch");
    for (std::size_t i = 0; i < gm.size(); ++i)
        global[static_cast<std::size_t>(gm[i])] += local[i];
}

SparseSym assemble_global_mass(const MultipatchSpace& ms, int points_per_span) {
    const int R = ms.num_patches();
    std::vector<SparseSym> local(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        const TensorBasis& sp = ms.spaces[static_cast<std::size_t>(r)];
        const QuadGrid grid = make_quad_grid(sp, points_per_span);
        const WeightField w = weight_from_geometry(ms.geo.patches[static_cast<std::size_t>(r)], grid);
        local[static_cast<std::size_t>(r)] = assemble_physical_mass(sp, grid, w);
    }

    SparseSym A;
    A.n = ms.total_dof;
    std::vector<std::vector<std::int32_t>> cols(static_cast<std::size_t>(A.n));
    for (int r = 0; r < R; ++r) {
        const SparseSym& Ml = local[static_cast<std::size_t>(r)];
        const auto& gm = ms.gmap[static_cast<std::size_t>(r)];
        for (std::int64_t i = 0; i < Ml.n; ++i) {
            auto& row = cols[static_cast<std::size_t>(gm[static_cast<std::size_t>(i)])];
            for (std::int64_t t = Ml.row_ptr[static_cast<std::size_t>(i)];
                 t < Ml.row_ptr[static_cast<std::size_t>(i) + 1]; ++t)
                row.push_back(static_cast<std::int32_t>(gm[static_cast<std::size_t>(Ml.col[static_cast<std::size_t>(t)])]));
        }
    }
    A.row_ptr.assign(static_cast<std::size_t>(A.n) + 1, 0);
    for (std::int64_t i = 0; i < A.n; ++i) {
        auto& row = cols[static_cast<std::size_t>(i)];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        A.row_ptr[static_cast<std::size_t>(i) + 1] =
            A.row_ptr[static_cast<std::size_t>(i)] + static_cast<std::int64_t>(row.size());
    }
    A.col.resize(static_cast<std::size_t>(A.row_ptr[static_cast<std::size_t>(A.n)]));
    for (std::int64_t i = 0; i < A.n; ++i)
        std::copy(cols[static_cast<std::size_t>(i)].begin(), cols[static_cast<std::size_t>(i)].end(),
                  A.col.begin() + A.row_ptr[static_cast<std::size_t>(i)]);
    A.val.assign(A.col.size(), 0.0);

    for (int r = 0; r < R; ++r) {
        const SparseSym& Ml = local[static_cast<std::size_t>(r)];
        const auto& gm = ms.gmap[static_cast<std::size_t>(r)];
        for (std::int64_t i = 0; i < Ml.n; ++i) {
            const std::int64_t gi = gm[static_cast<std::size_t>(i)];
            const std::int64_t lo = A.row_ptr[static_cast<std::size_t>(gi)];
            const std::int64_t hi = A.row_ptr[static_cast<std::size_t>(gi) + 1];
            for (std::int64_t t = Ml.row_ptr[static_cast<std::size_t>(i)];
                 t < Ml.row_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
                const std::int32_t gj =
                    static_cast<std::int32_t>(gm[static_cast<std::size_t>(Ml.col[static_cast<std::size_t>(t)])]);
                const auto* base = A.col.data();
                const auto* it = std::lower_bound(base + lo, base + hi, gj);
                A.val[static_cast<std::size_t>(it - base)] += Ml.val[static_cast<std::size_t>(t)];
            }
        }
    }
    return A;
}

std::vector<double> assemble_global_l2_rhs(
    const MultipatchSpace& ms, int points_per_span,
    const std::function<double(const std::array<double, 3>&)>& f) {
    std::vector<double> b(static_cast<std::size_t>(ms.total_dof), 0.0);
    for (int r = 0; r < ms.num_patches(); ++r) {
        const TensorBasis& sp = ms.spaces[static_cast<std::size_t>(r)];
        const QuadGrid grid = make_quad_grid(sp, points_per_span);
        const Patch& patch = ms.geo.patches[static_cast<std::size_t>(r)];
        const WeightField w = weight_from_geometry(patch, grid);
        const std::vector<double> pts = sample_points(patch, grid);
        patch_prolong_add(ms, r, assemble_l2_rhs(sp, grid, w, pts, f), b);
    }
    return b;
}

AdditiveSchwarzPreconditioner::AdditiveSchwarzPreconditioner(const MultipatchSpace& ms,
                                                             int points_per_span)
    : n_(ms.total_dof), gmap_(ms.gmap) {
    locals_.reserve(ms.spaces.size());
    for (int r = 0; r < ms.num_patches(); ++r) {
        const TensorBasis& sp = ms.spaces[static_cast<std::size_t>(r)];
        const QuadGrid grid = make_quad_grid(sp, points_per_span);
        locals_.push_back(
            setup_mass_preconditioner(sp, ms.geo.patches[static_cast<std::size_t>(r)], grid));
    }
}

std::uint64_t AdditiveSchwarzPreconditioner::apply_inverse(const double* x, double* y) const {
    const int R = num_patches();
    std::vector<std::vector<double>> part(static_cast<std::size_t>(R));
    std::uint64_t total = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : total)
    for (int r = 0; r < R; ++r) {
        const auto& gm = gmap_[static_cast<std::size_t>(r)];
        std::vector<double> z(gm.size());
        for (std::size_t i = 0; i < gm.size(); ++i)
            z[i] = x[static_cast<std::size_t>(gm[i])];
        total += locals_[static_cast<std::size_t>(r)].apply_inverse(z.data(), z.data());
        total += static_cast<std::uint64_t>(gm.size());
        part[static_cast<std::size_t>(r)] = std::move(z);
    }
    std::memset(y, 0, static_cast<std::size_t>(n_) * sizeof(double));
    for (int r = 0; r < R; ++r) {
        const auto& gm = gmap_[static_cast<std::size_t>(r)];
        const auto& z = part[static_cast<std::size_t>(r)];
        for (std::size_t i = 0; i < gm.size(); ++i) y[static_cast<std::size_t>(gm[i])] += z[i];
    }
    flops_.add(total);
    return total;
}

std::vector<double> AdditiveSchwarzPreconditioner::apply_inverse(
    const std::vector<double>& z) const {
    if (z.size() != static_cast<std::size_t>(n_))
        throw std::invalid_argument("additive schwarz apply: vector length mismatch");
    std::vector<double> y(z.size());
    apply_inverse(z.data(), y.data());
    return y;
}

LinOp AdditiveSchwarzPreconditioner::inverse_op() const {
    return {n_, [this](const double* x, double* y) { apply_inverse(x, y); }};
}

}  // namespace igm
