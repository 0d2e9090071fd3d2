#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "igamass/matrices.hpp"

namespace igm {

/** Shape of a tensor stored with the first index fastest (vec convention). */
struct TensorShape {
    int d = 0;
    std::array<int, 3> n = {1, 1, 1};

    std::int64_t total() const {
        std::int64_t t = 1;
        for (int k = 0; k < d; ++k) t *= n[k];
        return t;
    }
    std::int64_t left(int mode) const {
        std::int64_t t = 1;
        for (int k = 0; k < mode; ++k) t *= n[k];
        return t;
    }
    std::int64_t right(int mode) const {
        std::int64_t t = 1;
        for (int k = mode + 1; k < d; ++k) t *= n[k];
        return t;
    }
};

// y <- (M applied along the given mode of x). For a tensor of shape s this
// equals the matvec with I_(right) (x) M (x) I_(left) under the vec
// convention. M may be rectangular (rows x s.n[mode]); y then has shape s
// with n[mode] replaced by M.rows. Returns the flop count.
std::uint64_t mode_product(const DenseMatrix& M, const TensorShape& s, int mode, const double* x,
                           double* y);
std::uint64_t mode_product(const Banded& M, const TensorShape& s, int mode, const double* x,
                           double* y);
std::uint64_t mode_product_serial(const DenseMatrix& M, const TensorShape& s, int mode,
                                  const double* x, double* y);
std::uint64_t mode_product_serial(const Banded& M, const TensorShape& s, int mode, const double* x,
                                  double* y);

// In-place solve of (L L^T) along the given mode for every fiber of x.
std::uint64_t mode_solve(const BandedCholesky& L, const TensorShape& s, int mode, double* x);
std::uint64_t mode_solve_serial(const BandedCholesky& L, const TensorShape& s, int mode, double* x);

/**
 * Kronecker product operator M_d (x) ... (x) M_1; factor k acts along mode k
 * of the vec'd tensor. Factors are either all banded-symmetric or all dense.
 * Applies are deterministic for any thread count and safe to run
 * concurrently; the flop counter accumulates across applies.
 */
class KronOperator {
  public:
    static KronOperator from_banded(std::vector<Banded> factors);
    static KronOperator from_dense(std::vector<DenseMatrix> factors);

    int dim() const { return shape_in_.d; }
    std::int64_t rows() const { return shape_out_.total(); }
    std::int64_t cols() const { return shape_in_.total(); }
    const TensorShape& shape_in() const { return shape_in_; }

    void matvec(const double* x, double* y) const;
    void matvec_serial(const double* x, double* y) const;

    // dense materialization for oracles; guarded against large orders
    DenseMatrix dense() const;

    std::uint64_t flops() const { return flops_.get(); }
    void reset_flops() { flops_.reset(); }

    const std::vector<Banded>& banded_factors() const { return banded_; }

  private:
    std::vector<Banded> banded_;
    std::vector<DenseMatrix> dense_;
    TensorShape shape_in_, shape_out_;
    FlopCounter flops_;
};

/**
 * Cholesky factorization of a Kronecker product of SPD banded factors;
 * solves factor systems mode by mode (first direction first).
 */
class KronCholesky {
  public:
    KronCholesky() = default;
    explicit KronCholesky(const std::vector<Banded>& factors);  // factorizes eagerly

    std::int64_t order() const { return shape_.total(); }
    const TensorShape& shape() const { return shape_; }

    std::uint64_t solve_inplace(double* x) const;
    std::uint64_t solve_inplace_serial(double* x) const;

    std::uint64_t flops() const { return flops_.get(); }
    void reset_flops() { flops_.reset(); }

  private:
    std::vector<BandedCholesky> factors_;
    TensorShape shape_;
    FlopCounter flops_;
};

// Diagonal of the Kronecker product of symmetric banded factors, in vec
// order (first factor fastest).
std::vector<double> kron_diagonal(const std::vector<Banded>& factors);

// Dense Kronecker product in the same convention, for small oracles.
DenseMatrix kron_dense(const std::vector<DenseMatrix>& factors);

}  // namespace igm
