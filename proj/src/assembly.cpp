#include "igamass/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace igm {

Banded assemble_univariate_mass(const KnotVector& kv, const GaussRule1D& rule) {
    kv.validate();
    const int p = kv.degree;
    const int q = rule.points_per_span;
    Banded M(kv.num_basis(), p);
    const BasisTable tab = tabulate_basis(kv, rule);
    for (int s = 0; s < rule.num_spans(); ++s) {
        const int first = tab.first[s];
        for (int g = 0; g < q; ++g) {
            const double w = rule.weights[static_cast<std::size_t>(s) * q + g];
            const double* v = tab.at(s, g);
            for (int b = 0; b <= p; ++b)
                for (int a = b; a <= p; ++a) M.lower(a - b, first + b) += w * v[a] * v[b];
        }
    }
    return M;
}

std::vector<Banded> assemble_parametric_mass(const TensorBasis& space, const QuadGrid& grid) {
    space.validate();
    std::vector<Banded> factors;
    for (int k = 0; k < space.dim(); ++k)
        factors.push_back(assemble_univariate_mass(space.kv[k], grid.rules[k]));
    return factors;
}

namespace {

struct ElementContext {
    int d = 0, p = 0, nloc = 0;
    std::array<int, 3> E = {1, 1, 1};  // elements per direction
    std::array<int, 3> Q = {1, 1, 1};  // nodes per span per direction
    std::array<int, 3> m = {1, 1, 1};  // basis counts
    std::array<BasisTable, 3> tabs;
    std::array<const GaussRule1D*, 3> rules = {nullptr, nullptr, nullptr};
    std::int64_t npe = 1;
};

ElementContext make_context(const TensorBasis& space, const QuadGrid& grid) {
    ElementContext cx;
    cx.d = space.dim();
    cx.p = space.degree();
    cx.E = grid.elements();
    cx.Q = grid.nodes_per_dir();
    cx.m = space.sizes();
    cx.nloc = 1;
    for (int k = 0; k < cx.d; ++k) {
        cx.tabs[k] = tabulate_basis(space.kv[k], grid.rules[k]);
        cx.rules[k] = &grid.rules[k];
        cx.nloc *= cx.p + 1;
    }
    cx.npe = grid.nodes_per_element();
    return cx;
}

// dense symmetric local block of one element, upper triangle (a <= b) filled
void element_block(const ElementContext& cx, const WeightField& weight, std::int64_t el,
                   const std::array<int, 3>& e, double* local, double* bval) {
    const int p = cx.p, d = cx.d;
    std::fill(local, local + static_cast<std::size_t>(cx.nloc) * cx.nloc, 0.0);
    std::int64_t node = 0;
    for (int g3 = 0; g3 < cx.Q[2]; ++g3)
        for (int g2 = 0; g2 < cx.Q[1]; ++g2)
            for (int g1 = 0; g1 < cx.Q[0]; ++g1, ++node) {
                const double ws = weight.w[node + cx.npe * el];
                double wq = ws * cx.rules[0]->weights[static_cast<std::size_t>(e[0]) * cx.Q[0] + g1];
                if (d > 1) wq *= cx.rules[1]->weights[static_cast<std::size_t>(e[1]) * cx.Q[1] + g2];
                if (d > 2) wq *= cx.rules[2]->weights[static_cast<std::size_t>(e[2]) * cx.Q[2] + g3];
                const double* v1 = cx.tabs[0].at(e[0], g1);
                const double* v2 = d > 1 ? cx.tabs[1].at(e[1], g2) : nullptr;
                const double* v3 = d > 2 ? cx.tabs[2].at(e[2], g3) : nullptr;
                int a = 0;
                for (int k3 = 0; k3 <= (d > 2 ? p : 0); ++k3)
                    for (int k2 = 0; k2 <= (d > 1 ? p : 0); ++k2)
                        for (int k1 = 0; k1 <= p; ++k1, ++a)
                            bval[a] = v1[k1] * (d > 1 ? v2[k2] : 1.0) * (d > 2 ? v3[k3] : 1.0);
                for (int bi = 0; bi < cx.nloc; ++bi) {
                    const double wb = wq * bval[bi];
                    double* row = local + static_cast<std::size_t>(bi) * cx.nloc;
                    for (int ai = bi; ai < cx.nloc; ++ai) row[ai] += wb * bval[ai];
                }
            }
}

SparseSym build_pattern(const ElementContext& cx) {
    SparseSym A;
    const auto& m = cx.m;
    const int p = cx.p, d = cx.d;
    A.n = static_cast<std::int64_t>(m[0]) * m[1] * m[2];
    A.row_ptr.assign(A.n + 1, 0);
    auto overlap = [p](int i, int mm) {
        return std::min(mm - 1, i + p) - std::max(0, i - p) + 1;
    };
    std::int64_t row = 0;
    for (int i3 = 0; i3 < m[2]; ++i3)
        for (int i2 = 0; i2 < m[1]; ++i2)
            for (int i1 = 0; i1 < m[0]; ++i1) {
                std::int64_t cnt = overlap(i1, m[0]);
                if (d > 1) cnt *= overlap(i2, m[1]);
                if (d > 2) cnt *= overlap(i3, m[2]);
                A.row_ptr[row + 1] = A.row_ptr[row] + cnt;
                ++row;
            }
    A.col.resize(A.row_ptr[A.n]);
    A.val.assign(A.row_ptr[A.n], 0.0);
    std::int64_t pos = 0;
    for (int i3 = 0; i3 < m[2]; ++i3)
        for (int i2 = 0; i2 < m[1]; ++i2)
            for (int i1 = 0; i1 < m[0]; ++i1) {
                const int j3a = d > 2 ? std::max(0, i3 - p) : 0,
                          j3b = d > 2 ? std::min(m[2] - 1, i3 + p) : 0;
                const int j2a = d > 1 ? std::max(0, i2 - p) : 0,
                          j2b = d > 1 ? std::min(m[1] - 1, i2 + p) : 0;
                const int j1a = std::max(0, i1 - p), j1b = std::min(m[0] - 1, i1 + p);
                for (int j3 = j3a; j3 <= j3b; ++j3)
                    for (int j2 = j2a; j2 <= j2b; ++j2)
                        for (int j1 = j1a; j1 <= j1b; ++j1)
                            A.col[pos++] = static_cast<std::int32_t>(
                                j1 + static_cast<std::int64_t>(m[0]) * (j2 + static_cast<std::int64_t>(m[1]) * j3));
            }
    return A;
}

void scatter_block(const ElementContext& cx, SparseSym& A, const std::array<int, 3>& e,
                   const double* local) {
    const int p = cx.p, d = cx.d;
    std::array<int, 3> first = {0, 0, 0};
    for (int k = 0; k < d; ++k) first[k] = cx.tabs[k].first[e[k]];
    // local index a runs co-lex over the (p+1)^d active functions
    std::vector<std::int64_t> gidx(cx.nloc);
    int a = 0;
    for (int k3 = 0; k3 <= (d > 2 ? p : 0); ++k3)
        for (int k2 = 0; k2 <= (d > 1 ? p : 0); ++k2)
            for (int k1 = 0; k1 <= p; ++k1, ++a)
                gidx[a] = (first[0] + k1) +
                          static_cast<std::int64_t>(cx.m[0]) *
                              ((d > 1 ? first[1] + k2 : 0) +
                               static_cast<std::int64_t>(cx.m[1]) * (d > 2 ? first[2] + k3 : 0));
    for (int bi = 0; bi < cx.nloc; ++bi) {
        const std::int64_t gi = gidx[bi];
        const auto* cb = A.col.data() + A.row_ptr[gi];
        const auto* ce = A.col.data() + A.row_ptr[gi + 1];
        for (int ai = bi; ai < cx.nloc; ++ai) {
            const std::int64_t gj = gidx[ai];
            // upper triangle in global indices: co-lex local order is monotone
            const auto* it = std::lower_bound(cb, ce, static_cast<std::int32_t>(gj));
            A.val[A.row_ptr[gi] + (it - cb)] += local[static_cast<std::size_t>(bi) * cx.nloc + ai];
        }
    }
}

void mirror_upper(SparseSym& A) {
    for (std::int64_t i = 0; i < A.n; ++i)
        for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const std::int64_t j = A.col[k];
            if (j <= i) continue;
            const auto* cb = A.col.data() + A.row_ptr[j];
            const auto* ce = A.col.data() + A.row_ptr[j + 1];
            const auto* it = std::lower_bound(cb, ce, static_cast<std::int32_t>(i));
            A.val[A.row_ptr[j] + (it - cb)] = A.val[k];
        }
}

std::array<int, 3> element_multi(const ElementContext& cx, std::int64_t el) {
    std::array<int, 3> e = {0, 0, 0};
    e[0] = static_cast<int>(el % cx.E[0]);
    el /= cx.E[0];
    e[1] = static_cast<int>(el % cx.E[1]);
    e[2] = static_cast<int>(el / cx.E[1]);
    return e;
}

SparseSym assemble_impl(const TensorBasis& space, const QuadGrid& grid, const WeightField& weight,
                        bool parallel) {
    space.validate();
    const ElementContext cx = make_context(space, grid);
    if (weight.w.size() != static_cast<std::size_t>(grid.num_nodes()))
        throw std::invalid_argument("assemble_physical_mass: weight sample count mismatch");
    for (double ws : weight.w)
        if (ws < 0.0) throw std::runtime_error("assemble_physical_mass: negative weight sample");
    SparseSym A = build_pattern(cx);
    const std::int64_t nel = grid.num_elements();
    const std::size_t lsz = static_cast<std::size_t>(cx.nloc) * cx.nloc;
    if (!parallel) {
        std::vector<double> local(lsz), bval(cx.nloc);
        for (std::int64_t el = 0; el < nel; ++el) {
            const auto e = element_multi(cx, el);
            element_block(cx, weight, el, e, local.data(), bval.data());
            scatter_block(cx, A, e, local.data());
        }
    } else {
        // blocks are computed in parallel chunk by chunk; the scatter stays
        // in element order so the result matches the serial path bitwise
        const std::int64_t chunk = 256;
        std::vector<double> locals(static_cast<std::size_t>(chunk) * lsz);
        for (std::int64_t base = 0; base < nel; base += chunk) {
            const std::int64_t cnt = std::min(chunk, nel - base);
#pragma omp parallel
            {
                std::vector<double> bval(cx.nloc);
#pragma omp for schedule(static)
                for (std::int64_t t = 0; t < cnt; ++t) {
                    const auto e = element_multi(cx, base + t);
                    element_block(cx, weight, base + t, e,
                                  locals.data() + static_cast<std::size_t>(t) * lsz, bval.data());
                }
            }
            for (std::int64_t t = 0; t < cnt; ++t)
                scatter_block(cx, A, element_multi(cx, base + t),
                              locals.data() + static_cast<std::size_t>(t) * lsz);
        }
    }
    mirror_upper(A);
    return A;
}

}  // namespace

SparseSym assemble_physical_mass(const TensorBasis& space, const QuadGrid& grid,
                                 const WeightField& weight) {
    return assemble_impl(space, grid, weight, true);
}

SparseSym assemble_physical_mass_serial(const TensorBasis& space, const QuadGrid& grid,
                                        const WeightField& weight) {
    return assemble_impl(space, grid, weight, false);
}

DiagonalMatrix assemble_mass_diagonal(const TensorBasis& space, const QuadGrid& grid,
                                      const WeightField& weight) {
    space.validate();
    const ElementContext cx = make_context(space, grid);
    if (weight.w.size() != static_cast<std::size_t>(grid.num_nodes()))
        throw std::invalid_argument("assemble_mass_diagonal: weight sample count mismatch");
    for (double ws : weight.w)
        if (ws < 0.0) throw std::runtime_error("assemble_mass_diagonal: negative weight sample");
    DiagonalMatrix D;
    D.d.assign(static_cast<std::size_t>(cx.m[0]) * cx.m[1] * cx.m[2], 0.0);
    const std::int64_t nel = grid.num_elements();
    const int p = cx.p, d = cx.d;
    for (std::int64_t el = 0; el < nel; ++el) {
        const auto e = element_multi(cx, el);
        std::array<int, 3> first = {0, 0, 0};
        for (int k = 0; k < d; ++k) first[k] = cx.tabs[k].first[e[k]];
        std::int64_t node = 0;
        for (int g3 = 0; g3 < cx.Q[2]; ++g3)
            for (int g2 = 0; g2 < cx.Q[1]; ++g2)
                for (int g1 = 0; g1 < cx.Q[0]; ++g1, ++node) {
                    const double ws = weight.w[node + cx.npe * el];
                    double wq =
                        ws * cx.rules[0]->weights[static_cast<std::size_t>(e[0]) * cx.Q[0] + g1];
                    if (d > 1)
                        wq *= cx.rules[1]->weights[static_cast<std::size_t>(e[1]) * cx.Q[1] + g2];
                    if (d > 2)
                        wq *= cx.rules[2]->weights[static_cast<std::size_t>(e[2]) * cx.Q[2] + g3];
                    const double* v1 = cx.tabs[0].at(e[0], g1);
                    const double* v2 = d > 1 ? cx.tabs[1].at(e[1], g2) : nullptr;
                    const double* v3 = d > 2 ? cx.tabs[2].at(e[2], g3) : nullptr;
                    for (int k3 = 0; k3 <= (d > 2 ? p : 0); ++k3)
                        for (int k2 = 0; k2 <= (d > 1 ? p : 0); ++k2)
                            for (int k1 = 0; k1 <= p; ++k1) {
                                const double b = v1[k1] * (d > 1 ? v2[k2] : 1.0) *
                                                 (d > 2 ? v3[k3] : 1.0);
                                const std::int64_t gi =
                                    (first[0] + k1) +
                                    static_cast<std::int64_t>(cx.m[0]) *
                                        ((d > 1 ? first[1] + k2 : 0) +
                                         static_cast<std::int64_t>(cx.m[1]) *
                                             (d > 2 ? first[2] + k3 : 0));
                                D.d[gi] += wq * b * b;
                            }
                }
    }
    return D;
}

std::vector<double> assemble_l2_rhs(const TensorBasis& space, const QuadGrid& grid,
                                    const WeightField& weight, const std::vector<double>& points,
                                    const std::function<double(const std::array<double, 3>&)>& f) {
    space.validate();
    const ElementContext cx = make_context(space, grid);
    if (weight.w.size() != static_cast<std::size_t>(grid.num_nodes()) ||
        points.size() != static_cast<std::size_t>(grid.num_nodes()) * cx.d)
        throw std::invalid_argument("assemble_l2_rhs: sample count mismatch");
    std::vector<double> b(static_cast<std::size_t>(cx.m[0]) * cx.m[1] * cx.m[2], 0.0);
    const std::int64_t nel = grid.num_elements();
    const int p = cx.p, d = cx.d;
    for (std::int64_t el = 0; el < nel; ++el) {
        const auto e = element_multi(cx, el);
        std::array<int, 3> first = {0, 0, 0};
        for (int k = 0; k < d; ++k) first[k] = cx.tabs[k].first[e[k]];
        std::int64_t node = 0;
        for (int g3 = 0; g3 < cx.Q[2]; ++g3)
            for (int g2 = 0; g2 < cx.Q[1]; ++g2)
                for (int g1 = 0; g1 < cx.Q[0]; ++g1, ++node) {
                    const std::int64_t idx = node + cx.npe * el;
                    std::array<double, 3> x = {0, 0, 0};
                    for (int c = 0; c < d; ++c) x[c] = points[static_cast<std::size_t>(idx) * d + c];
                    double wq = weight.w[idx] * f(x) *
                                cx.rules[0]->weights[static_cast<std::size_t>(e[0]) * cx.Q[0] + g1];
                    if (d > 1)
                        wq *= cx.rules[1]->weights[static_cast<std::size_t>(e[1]) * cx.Q[1] + g2];
                    if (d > 2)
                        wq *= cx.rules[2]->weights[static_cast<std::size_t>(e[2]) * cx.Q[2] + g3];
                    const double* v1 = cx.tabs[0].at(e[0], g1);
                    const double* v2 = d > 1 ? cx.tabs[1].at(e[1], g2) : nullptr;
                    const double* v3 = d > 2 ? cx.tabs[2].at(e[2], g3) : nullptr;
                    for (int k3 = 0; k3 <= (d > 2 ? p : 0); ++k3)
                        for (int k2 = 0; k2 <= (d > 1 ? p : 0); ++k2)
                            for (int k1 = 0; k1 <= p; ++k1) {
                                const double bx = v1[k1] * (d > 1 ? v2[k2] : 1.0) *
                                                  (d > 2 ? v3[k3] : 1.0);
                                const std::int64_t gi =
                                    (first[0] + k1) +
                                    static_cast<std::int64_t>(cx.m[0]) *
                                        ((d > 1 ? first[1] + k2 : 0) +
                                         static_cast<std::int64_t>(cx.m[1]) *
                                             (d > 2 ? first[2] + k3 : 0));
                                b[gi] += wq * bx;
                            }
                }
    }
    return b;
}

}  // namespace igm
