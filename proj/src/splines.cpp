#include "igamass/splines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace igm {

int KnotVector::num_spans() const {
    int count = 0;
    for (int i = degree; i < num_basis(); ++i)
        if (knots[i] < knots[i + 1]) ++count;
    return count;
}

double KnotVector::max_span() const {
    double h = 0.0;
    for (int i = degree; i < num_basis(); ++i) h = std::max(h, knots[i + 1] - knots[i]);
    return h;
}

double KnotVector::min_span() const {
    double h = std::numeric_limits<double>::infinity();
    for (int i = degree; i < num_basis(); ++i)
        if (knots[i + 1] > knots[i]) h = std::min(h, knots[i + 1] - knots[i]);
    return h;
}

std::vector<int> KnotVector::span_offsets() const {
    std::vector<int> offs;
    for (int i = degree; i < num_basis(); ++i)
        if (knots[i] < knots[i + 1]) offs.push_back(i);
    return offs;
}

void KnotVector::validate() const {
    const int p = degree;
    if (p < 0 || p > max_degree)
        throw std::invalid_argument("knot vector: degree " + std::to_string(p) + " out of range");
    const auto n = static_cast<int>(knots.size()) - p - 1;
    if (n < p + 1)
        throw std::invalid_argument("knot vector: too few knots for degree " + std::to_string(p));
    if (!std::is_sorted(knots.begin(), knots.end()))
        throw std::invalid_argument("knot vector: knots must be non-decreasing");
    for (int i = 0; i <= p; ++i) {
        if (knots[i] != 0.0)
            throw std::invalid_argument("knot vector: first degree+1 knots must equal 0");
        if (knots[knots.size() - 1 - i] != 1.0)
            throw std::invalid_argument("knot vector: last degree+1 knots must equal 1");
    }
    if (knots[p + 1] <= 0.0 || knots[n - 1] >= 1.0)
        throw std::invalid_argument("knot vector: boundary knot multiplicity exceeds degree+1");
    // interior multiplicity cap keeps every basis function continuous
    int run = 1;
    for (int i = p + 2; i < n; ++i) {
        run = (knots[i] == knots[i - 1]) ? run + 1 : 1;
        if (p > 0 && run > p)
            throw std::invalid_argument("knot vector: interior knot multiplicity exceeds degree");
    }
    if (num_spans() == 0) throw std::invalid_argument("knot vector: no nonempty span");
}

bool operator==(const KnotVector& a, const KnotVector& b) {
    return a.degree == b.degree && a.knots == b.knots;
}

KnotVector make_uniform_knots(int degree, int n_sub) {
    if (degree < 0 || degree > max_degree) throw std::invalid_argument("make_uniform_knots: bad degree");
    if (n_sub < 1) throw std::invalid_argument("make_uniform_knots: n_sub must be >= 1");
    KnotVector kv;
    kv.degree = degree;
    kv.knots.reserve(2 * degree + n_sub + 1);
    for (int i = 0; i < degree; ++i) kv.knots.push_back(0.0);
    for (int i = 0; i <= n_sub; ++i) kv.knots.push_back(static_cast<double>(i) / n_sub);
    for (int i = 0; i < degree; ++i) kv.knots.push_back(1.0);
    return kv;
}

int find_span(const KnotVector& kv, double x) {
    const int p = kv.degree;
    const int n = kv.num_basis();
    if (!(x >= kv.knots[p] && x <= kv.knots[n]))
        throw std::domain_error("find_span: x = " + std::to_string(x) + " outside [0,1]");
    if (x >= kv.knots[n]) return n - 1;
    auto it = std::upper_bound(kv.knots.begin() + p, kv.knots.begin() + n + 1, x);
    return static_cast<int>(it - kv.knots.begin()) - 1;
}

namespace {

// Triangular scheme of de Boor: builds the p+1 active values at x on the
// given nonempty span. left/right must hold p+1 entries.
void basis_on_span(const std::vector<double>& t, int p, int span, double x, double* out,
                   double* left, double* right) {
    out[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

}  // namespace

int eval_basis(const KnotVector& kv, double x, double* out) {
    const int p = kv.degree;
    const int span = find_span(kv, x);
    double left[max_degree + 1], right[max_degree + 1];
    basis_on_span(kv.knots, p, span, x, out, left, right);
    return span - p;
}

int eval_basis_deriv(const KnotVector& kv, double x, double* val, double* der) {
    const int p = kv.degree;
    const int span = find_span(kv, x);
    double left[max_degree + 1], right[max_degree + 1];
    basis_on_span(kv.knots, p, span, x, val, left, right);
    if (p == 0) {
        der[0] = 0.0;
        return span;
    }
    // lower-degree values N_{i,p-1}, active indices span-p+1 .. span
    double low[max_degree + 1];
    basis_on_span(kv.knots, p - 1, span, x, low, left, right);
    const auto& t = kv.knots;
    for (int k = 0; k <= p; ++k) {
        const int i = span - p + k;
        double a = 0.0, b = 0.0;
        if (k >= 1) {
            const double den = t[i + p] - t[i];
            if (den > 0.0) a = low[k - 1] / den;
        }
        if (k <= p - 1) {
            const double den = t[i + p + 1] - t[i + 1];
            if (den > 0.0) b = low[k] / den;
        }
        der[k] = p * (a - b);
    }
    return span - p;
}

BasisValues eval_basis(const KnotVector& kv, double x) {
    BasisValues r;
    r.values.resize(kv.degree + 1);
    r.first = eval_basis(kv, x, r.values.data());
    return r;
}

std::array<int, max_dim> TensorBasis::sizes() const {
    std::array<int, max_dim> m = {1, 1, 1};
    for (int k = 0; k < dim(); ++k) m[k] = kv[k].num_basis();
    return m;
}

std::int64_t TensorBasis::total_dof() const {
    std::int64_t n = 1;
    for (const auto& k : kv) n *= k.num_basis();
    return n;
}

std::int64_t TensorBasis::linear_index(const std::array<int, max_dim>& mi) const {
    const auto m = sizes();
    return mi[0] + static_cast<std::int64_t>(m[0]) * (mi[1] + static_cast<std::int64_t>(m[1]) * mi[2]);
}

std::array<int, max_dim> TensorBasis::multi_index(std::int64_t j) const {
    const auto m = sizes();
    std::array<int, max_dim> mi = {0, 0, 0};
    mi[0] = static_cast<int>(j % m[0]);
    j /= m[0];
    mi[1] = static_cast<int>(j % m[1]);
    mi[2] = static_cast<int>(j / m[1]);
    return mi;
}

void TensorBasis::validate() const {
    if (kv.empty() || dim() > max_dim)
        throw std::invalid_argument("tensor basis: dimension must be 1, 2 or 3");
    for (const auto& k : kv) {
        k.validate();
        if (k.degree != kv[0].degree)
            throw std::invalid_argument("tensor basis: directions must share one degree");
    }
}

TensorBasis make_uniform_space(int dim, int degree, int n_sub) {
    if (dim < 1 || dim > max_dim) throw std::invalid_argument("make_uniform_space: bad dimension");
    TensorBasis tb;
    for (int k = 0; k < dim; ++k) tb.kv.push_back(make_uniform_knots(degree, n_sub));
    return tb;
}

void gauss_legendre(int q, std::vector<double>& nodes, std::vector<double>& weights) {
    if (q < 1 || q > 64) throw std::invalid_argument("gauss_legendre: point count out of range");
    nodes.assign(q, 0.0);
    weights.assign(q, 0.0);
    const int half = (q + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton iteration from the Chebyshev-like initial guess
        double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= q; ++j) {
                const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = q * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if (q % 2 == 1) nodes[q / 2] = 0.0;
}

GaussRule1D gauss_rule(const KnotVector& kv, int q) {
    GaussRule1D rule;
    rule.points_per_span = q;
    rule.spans = kv.span_offsets();
    std::vector<double> gx, gw;
    gauss_legendre(q, gx, gw);
    rule.nodes.reserve(rule.spans.size() * q);
    rule.weights.reserve(rule.spans.size() * q);
    for (int s : rule.spans) {
        const double a = kv.knots[s], b = kv.knots[s + 1];
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int g = 0; g < q; ++g) {
            rule.nodes.push_back(mid + half * gx[g]);
            rule.weights.push_back(half * gw[g]);
        }
    }
    return rule;
}

BasisTable tabulate_basis(const KnotVector& kv, const GaussRule1D& rule, bool with_derivs) {
    const int p = kv.degree;
    const int q = rule.points_per_span;
    BasisTable tab;
    tab.degree = p;
    tab.points_per_span = q;
    tab.first.resize(rule.num_spans());
    tab.values.resize(static_cast<std::size_t>(rule.num_nodes()) * (p + 1));
    if (with_derivs) tab.derivs.resize(tab.values.size());
    for (int s = 0; s < rule.num_spans(); ++s) {
        for (int g = 0; g < q; ++g) {
            const double x = rule.nodes[static_cast<std::size_t>(s) * q + g];
            double* v = tab.values.data() + (static_cast<std::size_t>(s) * q + g) * (p + 1);
            int first;
            if (with_derivs) {
                double* d = tab.derivs.data() + (static_cast<std::size_t>(s) * q + g) * (p + 1);
                first = eval_basis_deriv(kv, x, v, d);
            } else {
                first = eval_basis(kv, x, v);
            }
            tab.first[s] = first;
        }
    }
    return tab;
}

}  // namespace igm
