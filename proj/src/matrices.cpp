#include "igamass/matrices.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace igm {

DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: shape mismatch");
    DenseMatrix C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int k = 0; k < A.cols; ++k) {
            const double aik = A(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
        }
    return C;
}

double Banded::at(int i, int j) const {
    if (i < j) std::swap(i, j);
    const int k = i - j;
    if (k > bw) return 0.0;
    return lower(k, j);
}

std::vector<double> Banded::diagonal() const {
    return std::vector<double>(bands.begin(), bands.begin() + n);
}

DenseMatrix Banded::dense() const {
    DenseMatrix D(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - bw); j <= std::min(n - 1, i + bw); ++j) D(i, j) = at(i, j);
    return D;
}

void banded_matvec(const Banded& A, const double* x, double* y) {
    const int n = A.n, bw = A.bw;
    for (int i = 0; i < n; ++i) {
        double s = A.lower(0, i) * x[i];
        for (int k = 1; k <= bw; ++k) {
            if (i - k >= 0) s += A.lower(k, i - k) * x[i - k];
            if (i + k < n) s += A.lower(k, i) * x[i + k];
        }
        y[i] = s;
    }
}

BandedCholesky banded_cholesky(const Banded& A) {
    const int n = A.n, bw = A.bw;
    BandedCholesky L;
    L.n = n;
    L.bw = bw;
    L.bands = A.bands;
    auto lv = [&](int k, int i) -> double& { return L.bands[static_cast<std::size_t>(k) * n + i]; };
    for (int j = 0; j < n; ++j) {
        double d = lv(0, j);
        for (int k = std::max(0, j - bw); k < j; ++k) {
            const double l = lv(j - k, k);
            d -= l * l;
        }
        if (!(d > 0.0))
            throw std::runtime_error("banded_cholesky: matrix not positive definite at row " +
                                     std::to_string(j));
        const double dj = std::sqrt(d);
        lv(0, j) = dj;
        for (int i = j + 1; i <= std::min(n - 1, j + bw); ++i) {
            double s = lv(i - j, j);
            for (int k = std::max(0, i - bw); k < j; ++k) s -= lv(i - k, k) * lv(j - k, k);
            lv(i - j, j) = s / dj;
        }
    }
    return L;
}

std::uint64_t BandedCholesky::solve_inplace(double* x) const {
    std::uint64_t flops = 0;
    // forward: L y = b
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        const int k0 = std::max(0, i - bw);
        for (int k = k0; k < i; ++k) s -= lower(i - k, k) * x[k];
        x[i] = s / lower(0, i);
        flops += 2 * static_cast<std::uint64_t>(i - k0) + 1;
    }
    // backward: L^T x = y
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        const int k1 = std::min(n - 1, i + bw);
        for (int k = i + 1; k <= k1; ++k) s -= lower(k - i, i) * x[k];
        x[i] = s / lower(0, i);
        flops += 2 * static_cast<std::uint64_t>(k1 - i) + 1;
    }
    return flops;
}

std::vector<double> SparseSym::diagonal() const {
    std::vector<double> d(n, 0.0);
    for (std::int64_t i = 0; i < n; ++i) d[i] = at(i, i);
    return d;
}

double SparseSym::at(std::int64_t i, std::int64_t j) const {
    const auto* b = col.data() + row_ptr[i];
    const auto* e = col.data() + row_ptr[i + 1];
    const auto* it = std::lower_bound(b, e, static_cast<std::int32_t>(j));
    if (it == e || *it != j) return 0.0;
    return val[row_ptr[i] + (it - b)];
}

DenseMatrix SparseSym::dense() const {
    if (n > 4096) throw std::runtime_error("SparseSym::dense: order exceeds the dense guard (4096)");
    DenseMatrix D(static_cast<int>(n), static_cast<int>(n));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            D(static_cast<int>(i), col[k]) = val[k];
    return D;
}

void spmv_serial(const SparseSym& A, const double* x, double* y) {
    for (std::int64_t i = 0; i < A.n; ++i) {
        double s = 0.0;
        for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) s += A.val[k] * x[A.col[k]];
        y[i] = s;
    }
}

void spmv(const SparseSym& A, const double* x, double* y) {
    const std::int64_t n = A.n;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) s += A.val[k] * x[A.col[k]];
        y[i] = s;
    }
}

double symmetry_defect(const SparseSym& A) {
    double defect = 0.0;
    for (std::int64_t i = 0; i < A.n; ++i)
        for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const std::int64_t j = A.col[k];
            if (j < i) continue;
            defect = std::max(defect, std::abs(A.val[k] - A.at(j, i)));
        }
    return defect;
}

void write_matrix_market(const SparseSym& A, std::ostream& os) {
    std::int64_t nnz_lower = 0;
    for (std::int64_t i = 0; i < A.n; ++i)
        for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            if (A.col[k] <= i) ++nnz_lower;
    os << "%%MatrixMarket matrix coordinate real symmetric\n";
    os << A.n << " " << A.n << " " << nnz_lower << "\n";
    char buf[64];
    for (std::int64_t i = 0; i < A.n; ++i)
        for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            if (A.col[k] > i) continue;
            std::snprintf(buf, sizeof buf, "%lld %d %.17g\n", static_cast<long long>(i + 1),
                          A.col[k] + 1, A.val[k]);
            os << buf;
        }
}

double DiagonalMatrix::min() const {
    double m = d.empty() ? 0.0 : d[0];
    for (double v : d) m = std::min(m, v);
    return m;
}

double DiagonalMatrix::max() const {
    double m = d.empty() ? 0.0 : d[0];
    for (double v : d) m = std::max(m, v);
    return m;
}

}  // namespace igm
