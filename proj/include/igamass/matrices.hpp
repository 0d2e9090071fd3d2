#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace igm {

/** Copyable accumulator for measured flop counts; safe under concurrent applies. */
class FlopCounter {
  public:
    FlopCounter() = default;
    FlopCounter(const FlopCounter& o) : v_(o.v_.load()) {}
    FlopCounter& operator=(const FlopCounter& o) {
        v_.store(o.v_.load());
        return *this;
    }
    void add(std::uint64_t f) const { v_.fetch_add(f, std::memory_order_relaxed); }
    std::uint64_t get() const { return v_.load(); }
    void reset() const { v_.store(0); }

  private:
    mutable std::atomic<std::uint64_t> v_{0};
};

/** Minimal row-major dense matrix, used by small factors and test oracles. */
struct DenseMatrix {
    int rows = 0, cols = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B);

/**
 * Symmetric banded matrix of order n and half-bandwidth bw, lower storage:
 * bands[k*n + i] = A(i+k, i) for 0 <= k <= bw, 0 <= i < n-k (tail zero).
 */
struct Banded {
    int n = 0, bw = 0;
    std::vector<double> bands;

    Banded() = default;
    Banded(int n_, int bw_) : n(n_), bw(bw_), bands(static_cast<std::size_t>(bw_ + 1) * n_, 0.0) {}

    double& lower(int k, int i) { return bands[static_cast<std::size_t>(k) * n + i]; }
    double lower(int k, int i) const { return bands[static_cast<std::size_t>(k) * n + i]; }

    // general accessor, zero outside the band
    double at(int i, int j) const;

    std::vector<double> diagonal() const;
    DenseMatrix dense() const;
};

void banded_matvec(const Banded& A, const double* x, double* y);

/**
 * Cholesky factor L (A = L L^T) of an SPD banded matrix, same band layout.
 * Substitution routines report the exact multiply/add/divide count they
 * performed.
 */
struct BandedCholesky {
    int n = 0, bw = 0;
    std::vector<double> bands;

    double lower(int k, int i) const { return bands[static_cast<std::size_t>(k) * n + i]; }

    // solves L L^T x = b in place
    std::uint64_t solve_inplace(double* x) const;
};

// Throws std::runtime_error when a pivot is not strictly positive, which is
// how an indefinite or semi-definite assembly result surfaces.
BandedCholesky banded_cholesky(const Banded& A);

/**
 * Symmetric sparse matrix in CSR form; both triangles are stored so matvec
 * needs no branching. Rows are sorted by column index.
 */
struct SparseSym {
    std::int64_t n = 0;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<double> val;

    std::int64_t nnz() const { return static_cast<std::int64_t>(val.size()); }
    std::vector<double> diagonal() const;
    double at(std::int64_t i, std::int64_t j) const;  // binary search, zero outside pattern
    DenseMatrix dense() const;
};

void spmv(const SparseSym& A, const double* x, double* y);
void spmv_serial(const SparseSym& A, const double* x, double* y);

// largest |A_ij - A_ji| over the stored pattern
double symmetry_defect(const SparseSym& A);

// MatrixMarket coordinate format, symmetric, lower triangle
void write_matrix_market(const SparseSym& A, std::ostream& os);

struct DiagonalMatrix {
    std::vector<double> d;

    std::int64_t n() const { return static_cast<std::int64_t>(d.size()); }
    double min() const;
    double max() const;
};

}  // namespace igm
