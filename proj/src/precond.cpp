#include "igamass/precond.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace igm {

LinOp identity_op(std::int64_t n) {
    return {n, [n](const double* x, double* y) {
                if (x != y) std::memcpy(y, x, static_cast<std::size_t>(n) * sizeof(double));
            }};
}

namespace {

void check_vector_size(std::int64_t n, std::size_t got, const char* who) {
    if (got != static_cast<std::size_t>(n))
        throw std::invalid_argument(std::string(who) + ": vector length mismatch");
}

// S = Dhat^{-1/2} A Dhat^{-1/2} for a symmetric banded A with positive diagonal
Banded scale_to_unit_diagonal(const Banded& A, const char* who) {
    std::vector<double> diag = A.diagonal();
    std::vector<double> inv_sqrt(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        if (!(diag[i] > 0.0)) throw std::runtime_error(std::string(who) + ": non-positive diagonal entry");
        inv_sqrt[i] = 1.0 / std::sqrt(diag[i]);
    }
    Banded S(A.n, A.bw);
    for (int k = 0; k <= A.bw; ++k)
        for (int i = 0; i + k < A.n; ++i) S.lower(k, i) = A.lower(k, i) * inv_sqrt[i + k] * inv_sqrt[i];
    for (int i = 0; i < A.n; ++i)
        if (std::abs(S.lower(0, i) - 1.0) > 1e-13)
            throw std::runtime_error(std::string(who) + ": scaled factor diagonal deviates from 1");
    return S;
}

}  // namespace

MassPreconditioner::MassPreconditioner(const std::vector<Banded>& parametric_factors,
                                       const DiagonalMatrix& physical_diag) {
    if (parametric_factors.empty() || parametric_factors.size() > static_cast<std::size_t>(max_dim))
        throw std::invalid_argument("mass preconditioner: need 1 to 3 factors");
    std::int64_t total = 1;
    for (const Banded& f : parametric_factors) total *= f.n;
    if (physical_diag.n() != total)
        throw std::invalid_argument("mass preconditioner: diagonal length does not match factor sizes");
    n_ = total;

    std::vector<Banded> scaled;
    scaled.reserve(parametric_factors.size());
    for (const Banded& f : parametric_factors)
        scaled.push_back(scale_to_unit_diagonal(f, "mass preconditioner setup"));

    dsqrt_.resize(static_cast<std::size_t>(n_));
    dinv_sqrt_.resize(static_cast<std::size_t>(n_));
    for (std::int64_t i = 0; i < n_; ++i) {
        const double di = physical_diag.d[static_cast<std::size_t>(i)];
        if (!(di > 0.0))
            throw std::runtime_error("mass preconditioner setup: non-positive diagonal entry");
        const double s = std::sqrt(di);
        dsqrt_[static_cast<std::size_t>(i)] = s;
        dinv_sqrt_[static_cast<std::size_t>(i)] = 1.0 / s;
    }

    chol_ = KronCholesky(scaled);
    scaled_ = KronOperator::from_banded(std::move(scaled));
}

std::uint64_t MassPreconditioner::apply_inverse(const double* x, double* y) const {
    for (std::int64_t i = 0; i < n_; ++i) y[i] = x[i] * dinv_sqrt_[static_cast<std::size_t>(i)];
    const std::uint64_t subst = chol_.solve_inplace(y);
    for (std::int64_t i = 0; i < n_; ++i) y[i] *= dinv_sqrt_[static_cast<std::size_t>(i)];
    const std::uint64_t f = subst + 2 * static_cast<std::uint64_t>(n_);
    flops_.add(f);
    return f;
}

std::vector<double> MassPreconditioner::apply_inverse(const std::vector<double>& z) const {
    check_vector_size(n_, z.size(), "mass preconditioner apply");
    std::vector<double> y(z.size());
    apply_inverse(z.data(), y.data());
    return y;
}

void MassPreconditioner::apply_forward(const double* x, double* y) const {
    std::vector<double> t(static_cast<std::size_t>(n_));
    for (std::int64_t i = 0; i < n_; ++i) t[static_cast<std::size_t>(i)] = x[i] * dsqrt_[static_cast<std::size_t>(i)];
    scaled_.matvec(t.data(), y);
    for (std::int64_t i = 0; i < n_; ++i) y[i] *= dsqrt_[static_cast<std::size_t>(i)];
}

LinOp MassPreconditioner::inverse_op() const {
    return {n_, [this](const double* x, double* y) { apply_inverse(x, y); }};
}

LinOp MassPreconditioner::forward_op() const {
    return {n_, [this](const double* x, double* y) { apply_forward(x, y); }};
}

MassPreconditioner setup_mass_preconditioner(const TensorBasis& space, const Patch& patch,
                                             const QuadGrid& grid) {
    std::vector<Banded> factors = assemble_parametric_mass(space, grid);
    WeightField w = weight_from_geometry(patch, grid);
    DiagonalMatrix D = assemble_mass_diagonal(space, grid, w);
    return MassPreconditioner(factors, D);
}

ChanEvansPreconditioner::ChanEvansPreconditioner(const std::vector<Banded>& parametric_factors,
                                                 SparseSym weighted_mass)
    : chol_(parametric_factors), mw_(std::move(weighted_mass)) {
    if (mw_.n != chol_.order())
        throw std::invalid_argument("chan-evans preconditioner: size mismatch");
}

std::uint64_t ChanEvansPreconditioner::apply_inverse(const double* x, double* y) const {
    const std::int64_t n = chol_.order();
    if (x != y) std::memcpy(y, x, static_cast<std::size_t>(n) * sizeof(double));
    std::uint64_t f = chol_.solve_inplace(y);
    std::vector<double> t(static_cast<std::size_t>(n));
    spmv(mw_, y, t.data());
    std::memcpy(y, t.data(), static_cast<std::size_t>(n) * sizeof(double));
    f += chol_.solve_inplace(y);
    f += 2 * static_cast<std::uint64_t>(mw_.nnz());
    flops_.add(f);
    return f;
}

std::vector<double> ChanEvansPreconditioner::apply_inverse(const std::vector<double>& z) const {
    check_vector_size(chol_.order(), z.size(), "chan-evans preconditioner apply");
    std::vector<double> y(z.size());
    apply_inverse(z.data(), y.data());
    return y;
}

LinOp ChanEvansPreconditioner::inverse_op() const {
    return {chol_.order(), [this](const double* x, double* y) { apply_inverse(x, y); }};
}

ChanEvansPreconditioner setup_chan_evans_preconditioner(const TensorBasis& space,
                                                        const Patch& patch, const QuadGrid& grid) {
    std::vector<Banded> factors = assemble_parametric_mass(space, grid);
    WeightField w = weight_inverse_jacobian(patch, grid);
    SparseSym Mw = assemble_physical_mass(space, grid, w);
    return ChanEvansPreconditioner(factors, std::move(Mw));
}

JacobiPreconditioner::JacobiPreconditioner(const DiagonalMatrix& diag) {
    inv_.resize(diag.d.size());
    for (std::size_t i = 0; i < diag.d.size(); ++i) {
        if (!(diag.d[i] > 0.0))
            throw std::runtime_error("jacobi preconditioner: non-positive diagonal entry");
        inv_[i] = 1.0 / diag.d[i];
    }
}

std::uint64_t JacobiPreconditioner::apply_inverse(const double* x, double* y) const {
    const std::size_t n = inv_.size();
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * inv_[i];
    flops_.add(static_cast<std::uint64_t>(n));
    return static_cast<std::uint64_t>(n);
}

std::vector<double> JacobiPreconditioner::apply_inverse(const std::vector<double>& z) const {
    check_vector_size(n(), z.size(), "jacobi preconditioner apply");
    std::vector<double> y(z.size());
    apply_inverse(z.data(), y.data());
    return y;
}

LinOp JacobiPreconditioner::inverse_op() const {
    return {n(), [this](const double* x, double* y) { apply_inverse(x, y); }};
}

}  // namespace igm
