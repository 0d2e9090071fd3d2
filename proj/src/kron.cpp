#include "igamass/kron.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace igm {

namespace {

// exact multiply+add count of one banded row-sweep over all rows
std::uint64_t banded_rows_flops(int n, int bw) {
    std::uint64_t terms = 0;
    for (int i = 0; i < n; ++i)
        terms += std::min(n - 1, i + bw) - std::max(0, i - bw) + 1;
    return 2 * terms;
}

// one triangular substitution sweep (forward == backward by symmetry)
std::uint64_t subst_sweep_flops(int n, int bw) {
    std::uint64_t f = 0;
    for (int i = 0; i < n; ++i) f += 2 * static_cast<std::uint64_t>(std::min(bw, i)) + 1;
    return f;
}

}  // namespace

std::uint64_t mode_product_serial(const DenseMatrix& M, const TensorShape& s, int mode,
                                  const double* x, double* y) {
    const std::int64_t left = s.left(mode), right = s.right(mode);
    const int n = s.n[mode], k = M.rows;
    if (M.cols != n) throw std::invalid_argument("mode_product: factor shape mismatch");
    for (std::int64_t r = 0; r < right; ++r)
        for (int io = 0; io < k; ++io)
            for (std::int64_t l = 0; l < left; ++l) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += M(io, j) * x[l + j * left + r * left * n];
                y[l + io * left + r * left * k] = acc;
            }
    return 2ull * left * right * k * n;
}

std::uint64_t mode_product_serial(const Banded& M, const TensorShape& s, int mode, const double* x,
                                  double* y) {
    const std::int64_t left = s.left(mode), right = s.right(mode);
    const int n = s.n[mode];
    if (M.n != n) throw std::invalid_argument("mode_product: factor shape mismatch");
    for (std::int64_t r = 0; r < right; ++r)
        for (int io = 0; io < n; ++io)
            for (std::int64_t l = 0; l < left; ++l) {
                double acc = 0.0;
                for (int j = std::max(0, io - M.bw); j <= std::min(n - 1, io + M.bw); ++j)
                    acc += M.at(io, j) * x[l + j * left + r * left * n];
                y[l + io * left + r * left * n] = acc;
            }
    return banded_rows_flops(n, M.bw) * left * right;
}

std::uint64_t mode_product(const DenseMatrix& M, const TensorShape& s, int mode, const double* x,
                           double* y) {
    const std::int64_t left = s.left(mode), right = s.right(mode);
    const int n = s.n[mode], k = M.rows;
    if (M.cols != n) throw std::invalid_argument("mode_product: factor shape mismatch");
    const std::int64_t blocks = right * k;
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
        const std::int64_t r = b / k;
        const int io = static_cast<int>(b % k);
        const double* xin = x + r * left * n;
        double* yrow = y + (r * k + io) * left;
        std::memset(yrow, 0, static_cast<std::size_t>(left) * sizeof(double));
        for (int j = 0; j < n; ++j) {
            const double c = M(io, j);
            if (c == 0.0) continue;
            const double* xrow = xin + j * left;
            for (std::int64_t l = 0; l < left; ++l) yrow[l] += c * xrow[l];
        }
    }
    return 2ull * left * right * k * n;
}

std::uint64_t mode_product(const Banded& M, const TensorShape& s, int mode, const double* x,
                           double* y) {
    const std::int64_t left = s.left(mode), right = s.right(mode);
    const int n = s.n[mode];
    if (M.n != n) throw std::invalid_argument("mode_product: factor shape mismatch");
    const std::int64_t blocks = right * n;
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
        const std::int64_t r = b / n;
        const int io = static_cast<int>(b % n);
        const double* xin = x + r * left * n;
        double* yrow = y + (r * n + io) * left;
        std::memset(yrow, 0, static_cast<std::size_t>(left) * sizeof(double));
        for (int j = std::max(0, io - M.bw); j <= std::min(n - 1, io + M.bw); ++j) {
            const double c = M.at(io, j);
            const double* xrow = xin + j * left;
            for (std::int64_t l = 0; l < left; ++l) yrow[l] += c * xrow[l];
        }
    }
    return banded_rows_flops(n, M.bw) * left * right;
}

namespace {

// L L^T substitution on a block of `n` rows of length `left`, restricted to
// columns [c0, c1)
void solve_block_cols(const BandedCholesky& L, double* blk, std::int64_t left, std::int64_t c0,
                      std::int64_t c1) {
    const int n = L.n, bw = L.bw;
    for (int i = 0; i < n; ++i) {
        double* ri = blk + i * left;
        for (int k = std::max(0, i - bw); k < i; ++k) {
            const double c = L.lower(i - k, k);
            const double* rk = blk + k * left;
            for (std::int64_t l = c0; l < c1; ++l) ri[l] -= c * rk[l];
        }
        const double inv = 1.0 / L.lower(0, i);
        for (std::int64_t l = c0; l < c1; ++l) ri[l] *= inv;
    }
    for (int i = n - 1; i >= 0; --i) {
        double* ri = blk + i * left;
        for (int k = i + 1; k <= std::min(n - 1, i + bw); ++k) {
            const double c = L.lower(k - i, i);
            const double* rk = blk + k * left;
            for (std::int64_t l = c0; l < c1; ++l) ri[l] -= c * rk[l];
        }
        const double inv = 1.0 / L.lower(0, i);
        for (std::int64_t l = c0; l < c1; ++l) ri[l] *= inv;
    }
}

}  // namespace

std::uint64_t mode_solve(const BandedCholesky& L, const TensorShape& s, int mode, double* x) {
    const std::int64_t left = s.left(mode), right = s.right(mode);
    const int n = s.n[mode];
    if (L.n != n) throw std::invalid_argument("mode_solve: factor shape mismatch");
    if (right > 1) {
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < right; ++r)
            solve_block_cols(L, x + r * left * n, left, 0, left);
    } else {
        const std::int64_t chunk = 256;
        const std::int64_t nchunks = (left + chunk - 1) / chunk;
#pragma omp parallel for schedule(static)
        for (std::int64_t c = 0; c < nchunks; ++c)
            solve_block_cols(L, x, left, c * chunk, std::min(left, (c + 1) * chunk));
    }
    return 2 * subst_sweep_flops(n, L.bw) * left * right;
}

std::uint64_t mode_solve_serial(const BandedCholesky& L, const TensorShape& s, int mode,
                                double* x) {
    const std::int64_t left = s.left(mode), right = s.right(mode);
    const int n = s.n[mode];
    if (L.n != n) throw std::invalid_argument("mode_solve: factor shape mismatch");
    std::vector<double> fiber(n);
    std::uint64_t flops = 0;
    for (std::int64_t r = 0; r < right; ++r)
        for (std::int64_t l = 0; l < left; ++l) {
            double* base = x + l + r * left * n;
            for (int i = 0; i < n; ++i) fiber[i] = base[i * left];
            flops += L.solve_inplace(fiber.data());
            for (int i = 0; i < n; ++i) base[i * left] = fiber[i];
        }
    return flops;
}

KronOperator KronOperator::from_banded(std::vector<Banded> factors) {
    KronOperator op;
    op.shape_in_.d = static_cast<int>(factors.size());
    if (op.shape_in_.d < 1 || op.shape_in_.d > 3)
        throw std::invalid_argument("KronOperator: need 1 to 3 factors");
    for (int k = 0; k < op.shape_in_.d; ++k) op.shape_in_.n[k] = factors[k].n;
    op.shape_out_ = op.shape_in_;
    op.banded_ = std::move(factors);
    return op;
}

KronOperator KronOperator::from_dense(std::vector<DenseMatrix> factors) {
    KronOperator op;
    op.shape_in_.d = static_cast<int>(factors.size());
    if (op.shape_in_.d < 1 || op.shape_in_.d > 3)
        throw std::invalid_argument("KronOperator: need 1 to 3 factors");
    op.shape_out_ = op.shape_in_;
    for (int k = 0; k < op.shape_in_.d; ++k) {
        op.shape_in_.n[k] = factors[k].cols;
        op.shape_out_.n[k] = factors[k].rows;
    }
    op.dense_ = std::move(factors);
    return op;
}

namespace {

template <class Kernel>
void kron_apply_stages(const TensorShape& shape_in, int d, const double* x, double* y,
                       Kernel&& stage) {
    // ping-pong buffers; factor k is applied along mode k, in order
    std::vector<double> buf[2];
    TensorShape s = shape_in;
    const double* src = x;
    for (int m = 0; m < d; ++m) {
        TensorShape so = s;
        so.n[m] = stage.rows(m);
        double* dst;
        if (m == d - 1) {
            dst = y;
        } else {
            buf[m % 2].resize(so.total());
            dst = buf[m % 2].data();
        }
        stage.apply(m, s, src, dst);
        src = dst;
        s = so;
    }
}

}  // namespace

void KronOperator::matvec(const double* x, double* y) const {
    std::uint64_t fl = 0;
    struct Stage {
        const KronOperator* op;
        std::uint64_t* fl;
        int rows(int m) const {
            return op->banded_.empty() ? op->dense_[m].rows : op->banded_[m].n;
        }
        void apply(int m, const TensorShape& s, const double* src, double* dst) const {
            *fl += op->banded_.empty() ? mode_product(op->dense_[m], s, m, src, dst)
                                       : mode_product(op->banded_[m], s, m, src, dst);
        }
    } stage{this, &fl};
    kron_apply_stages(shape_in_, shape_in_.d, x, y, stage);
    flops_.add(fl);
}

void KronOperator::matvec_serial(const double* x, double* y) const {
    std::uint64_t fl = 0;
    struct Stage {
        const KronOperator* op;
        std::uint64_t* fl;
        int rows(int m) const {
            return op->banded_.empty() ? op->dense_[m].rows : op->banded_[m].n;
        }
        void apply(int m, const TensorShape& s, const double* src, double* dst) const {
            *fl += op->banded_.empty() ? mode_product_serial(op->dense_[m], s, m, src, dst)
                                       : mode_product_serial(op->banded_[m], s, m, src, dst);
        }
    } stage{this, &fl};
    kron_apply_stages(shape_in_, shape_in_.d, x, y, stage);
    flops_.add(fl);
}

DenseMatrix KronOperator::dense() const {
    if (rows() > 4096 || cols() > 4096)
        throw std::runtime_error("KronOperator::dense: order exceeds the dense guard (4096)");
    std::vector<DenseMatrix> fs;
    if (banded_.empty()) {
        fs = dense_;
    } else {
        for (const auto& b : banded_) fs.push_back(b.dense());
    }
    return kron_dense(fs);
}

KronCholesky::KronCholesky(const std::vector<Banded>& factors) {
    shape_.d = static_cast<int>(factors.size());
    if (shape_.d < 1 || shape_.d > 3)
        throw std::invalid_argument("KronCholesky: need 1 to 3 factors");
    for (int k = 0; k < shape_.d; ++k) {
        shape_.n[k] = factors[k].n;
        factors_.push_back(banded_cholesky(factors[k]));
    }
}

std::uint64_t KronCholesky::solve_inplace(double* x) const {
    std::uint64_t fl = 0;
    for (int m = 0; m < shape_.d; ++m) fl += mode_solve(factors_[m], shape_, m, x);
    flops_.add(fl);
    return fl;
}

std::uint64_t KronCholesky::solve_inplace_serial(double* x) const {
    std::uint64_t fl = 0;
    for (int m = 0; m < shape_.d; ++m) fl += mode_solve_serial(factors_[m], shape_, m, x);
    flops_.add(fl);
    return fl;
}

std::vector<double> kron_diagonal(const std::vector<Banded>& factors) {
    std::vector<double> diag = {1.0};
    for (const auto& f : factors) {
        std::vector<double> fd = f.diagonal();
        std::vector<double> next(diag.size() * fd.size());
        std::size_t idx = 0;
        for (double dv : fd)
            for (double v : diag) next[idx++] = dv * v;
        diag = std::move(next);
    }
    return diag;
}

namespace {

DenseMatrix kron2(const DenseMatrix& A, const DenseMatrix& B) {
    DenseMatrix K(A.rows * B.rows, A.cols * B.cols);
    for (int ia = 0; ia < A.rows; ++ia)
        for (int ja = 0; ja < A.cols; ++ja) {
            const double v = A(ia, ja);
            if (v == 0.0) continue;
            for (int ib = 0; ib < B.rows; ++ib)
                for (int jb = 0; jb < B.cols; ++jb)
                    K(ia * B.rows + ib, ja * B.cols + jb) = v * B(ib, jb);
        }
    return K;
}

}  // namespace

DenseMatrix kron_dense(const std::vector<DenseMatrix>& factors) {
    DenseMatrix K(1, 1);
    K(0, 0) = 1.0;
    // factor 0 varies fastest, so it sits rightmost in the product
    for (const auto& f : factors) K = kron2(f, K);
    return K;
}

}  // namespace igm
