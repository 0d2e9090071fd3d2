#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "igamass/assembly.hpp"
#include "igamass/geometry.hpp"
#include "igamass/kron.hpp"
#include "igamass/matrices.hpp"

namespace igm {

/** Type-erased linear operator y = A x on length-n vectors. */
struct LinOp {
    std::int64_t n = 0;
    std::function<void(const double* x, double* y)> apply;
};

LinOp identity_op(std::int64_t n);

/**
 * Diagonal-scaled Kronecker mass preconditioner
 *
 *   P = D^{1/2} S D^{1/2},   S = S_d (x) ... (x) S_1,
 *   S_k = Dhat_k^{-1/2} Mhat_k Dhat_k^{-1/2},
 *
 * where Mhat_k is the univariate parametric mass factor along direction k,
 * Dhat_k its diagonal, and D the diagonal of the physical (weighted) mass
 * matrix. Every S_k has unit diagonal, so diag(P) = D exactly.
 *
 * Setup factorizes the d scaled factors once (banded Cholesky). Applying
 * P^{-1} = D^{-1/2} S^{-1} D^{-1/2} costs about 2(d(2p+1)+1) N flops:
 * one forward+backward banded sweep per direction plus two diagonal
 * scalings. Immutable after setup; applies are pure and may run
 * concurrently.
 */
class MassPreconditioner {
  public:
    // Core setup from already-assembled pieces. Throws std::runtime_error if
    // any diagonal entry is not strictly positive and std::runtime_error from
    // the Cholesky if a scaled factor is not positive definite. The unit
    // diagonal of each scaled factor is verified to 1e-13.
    MassPreconditioner(const std::vector<Banded>& parametric_factors,
                       const DiagonalMatrix& physical_diag);

    std::int64_t n() const { return n_; }
    int dim() const { return chol_.shape().d; }

    // y = P^{-1} x; x and y may alias. Returns the exact flop count of this
    // apply (also accumulated into the counter).
    std::uint64_t apply_inverse(const double* x, double* y) const;
    std::vector<double> apply_inverse(const std::vector<double>& z) const;

    // y = P x; x and y must not alias. For condition-number studies.
    void apply_forward(const double* x, double* y) const;

    // Operators capture `this`; keep the preconditioner alive while in use.
    LinOp inverse_op() const;
    LinOp forward_op() const;

    std::uint64_t flops() const { return flops_.get(); }
    void reset_flops() const { flops_.reset(); }

  private:
    std::int64_t n_ = 0;
    std::vector<double> dsqrt_, dinv_sqrt_;
    KronCholesky chol_;    // factorization of S
    KronOperator scaled_;  // S itself, for the forward map
    FlopCounter flops_;
};

// Assembles the parametric factors and the physical mass diagonal on the
// given quadrature grid, then sets up the preconditioner. The diagonal is
// integrated directly (no global matrix is formed).
MassPreconditioner setup_mass_preconditioner(const TensorBasis& space, const Patch& patch,
                                             const QuadGrid& grid);

/**
 * Comparison preconditioner applying P^{-1} = Mhat^{-1} M_w Mhat^{-1},
 * where Mhat is the parametric Kronecker mass and M_w the mass matrix
 * weighted by 1/|det J|. One application costs two Kronecker solves plus a
 * sparse matvec, roughly twice the diagonal-scaled preconditioner. Requires
 * a regular geometry map (the inverse weight must exist). Only the inverse
 * action is available; the forward map would need a sparse solve.
 */
class ChanEvansPreconditioner {
  public:
    ChanEvansPreconditioner(const std::vector<Banded>& parametric_factors, SparseSym weighted_mass);

    std::int64_t n() const { return chol_.order(); }

    std::uint64_t apply_inverse(const double* x, double* y) const;  // x and y may alias
    std::vector<double> apply_inverse(const std::vector<double>& z) const;

    LinOp inverse_op() const;

    std::uint64_t flops() const { return flops_.get(); }
    void reset_flops() const { flops_.reset(); }

  private:
    KronCholesky chol_;  // factorization of Mhat
    SparseSym mw_;       // mass weighted by 1/|det J|
    FlopCounter flops_;
};

ChanEvansPreconditioner setup_chan_evans_preconditioner(const TensorBasis& space,
                                                        const Patch& patch, const QuadGrid& grid);

/** Baseline: y = D^{-1} x from a strictly positive diagonal. */
class JacobiPreconditioner {
  public:
    explicit JacobiPreconditioner(const DiagonalMatrix& diag);

    std::int64_t n() const { return static_cast<std::int64_t>(inv_.size()); }

    std::uint64_t apply_inverse(const double* x, double* y) const;
    std::vector<double> apply_inverse(const std::vector<double>& z) const;

    LinOp inverse_op() const;

    std::uint64_t flops() const { return flops_.get(); }
    void reset_flops() const { flops_.reset(); }

  private:
    std::vector<double> inv_;
    FlopCounter flops_;
};

}  // namespace igm
