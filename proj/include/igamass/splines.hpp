#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace igm {

inline constexpr int max_degree = 24;
inline constexpr int max_dim = 3;

/**
 * Open (clamped) knot vector on [0,1].
 *
 * Invariants enforced by validate(): knots non-decreasing, first and last
 * degree+1 entries equal to 0 and 1, interior multiplicities at most degree,
 * at least one nonempty span.
 */
struct KnotVector {
    int degree = 0;
    std::vector<double> knots;

    int num_basis() const { return static_cast<int>(knots.size()) - degree - 1; }
    int num_spans() const;    // nonempty spans only
    double max_span() const;  // mesh size h
    double min_span() const;  // smallest nonempty span

    // Knot indices i with knots[i] < knots[i+1], in increasing order.
    std::vector<int> span_offsets() const;

    void validate() const;  // throws std::invalid_argument
};

bool operator==(const KnotVector& a, const KnotVector& b);

// Uniform open knot vector with n_sub equal spans and simple interior knots.
// Yields n_sub + degree basis functions.
KnotVector make_uniform_knots(int degree, int n_sub);

// Rightmost knot index i with knots[i] <= x < knots[i+1]; x == 1 maps to the
// last nonempty span. Throws std::domain_error for x outside [0,1].
int find_span(const KnotVector& kv, double x);

// Writes the degree+1 basis values that may be nonzero at x into out
// (out[k] = B_{first+k}(x)) and returns first. All other basis functions
// vanish at x. The evaluation follows the triangular Cox-de Boor scheme on
// the containing span, which realizes the 0/0 := 0 convention without
// dividing by zero.
int eval_basis(const KnotVector& kv, double x, double* out);

// Values and first derivatives of the active basis functions at x, via the
// degree-lowering formula applied to the degree-1 evaluation.
int eval_basis_deriv(const KnotVector& kv, double x, double* val, double* der);

struct BasisValues {
    int first = 0;
    std::vector<double> values;
};

BasisValues eval_basis(const KnotVector& kv, double x);

/**
 * Tensor-product B-spline space of dimension d <= 3 with equal degree in all
 * directions. Linearization runs the first direction fastest:
 * j = i_1 + i_2*m_1 + i_3*m_1*m_2 (0-based).
 */
struct TensorBasis {
    std::vector<KnotVector> kv;

    int dim() const { return static_cast<int>(kv.size()); }
    int degree() const { return kv.empty() ? 0 : kv[0].degree; }
    std::array<int, max_dim> sizes() const;  // basis counts, padded with 1
    std::int64_t total_dof() const;

    std::int64_t linear_index(const std::array<int, max_dim>& mi) const;
    std::array<int, max_dim> multi_index(std::int64_t j) const;

    void validate() const;
};

TensorBasis make_uniform_space(int dim, int degree, int n_sub);

// q-point Gauss-Legendre rule on [-1,1]; weights sum to 2. Exact for
// polynomials of degree 2q-1.
void gauss_legendre(int q, std::vector<double>& nodes, std::vector<double>& weights);

/**
 * Gauss-Legendre quadrature mapped onto every nonempty span of a knot
 * vector, q points per span, stored span-major.
 */
struct GaussRule1D {
    int points_per_span = 0;
    std::vector<int> spans;       // knot index of each nonempty span
    std::vector<double> nodes;    // size num_spans * q
    std::vector<double> weights;  // same layout, include span scaling

    int num_spans() const { return static_cast<int>(spans.size()); }
    int num_nodes() const { return static_cast<int>(nodes.size()); }
};

GaussRule1D gauss_rule(const KnotVector& kv, int q);

/**
 * Basis values (optionally derivatives) tabulated at every node of a
 * GaussRule1D. Layout: values[(s*q + g)*(p+1) + k] for span s, node g,
 * active function first[s] + k.
 */
struct BasisTable {
    int degree = 0;
    int points_per_span = 0;
    std::vector<int> first;       // per span
    std::vector<double> values;
    std::vector<double> derivs;   // empty unless requested

    const double* at(int span, int node) const {
        return values.data() + (static_cast<std::size_t>(span) * points_per_span + node) * (degree + 1);
    }
    const double* deriv_at(int span, int node) const {
        return derivs.data() + (static_cast<std::size_t>(span) * points_per_span + node) * (degree + 1);
    }
};

BasisTable tabulate_basis(const KnotVector& kv, const GaussRule1D& rule, bool with_derivs = false);

}  // namespace igm
