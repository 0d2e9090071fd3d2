#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "igamass/assembly.hpp"
#include "igamass/precond.hpp"
#include "igamass/solver.hpp"
#include "oracles.hpp"

using igm::LinOp;
using igm::PcgOptions;
using igm::PcgResult;
using igm::PcgStatus;

namespace {

LinOp dense_op(const igm::DenseMatrix& A) {
    return {A.rows, [&A](const double* x, double* y) {
                for (int i = 0; i < A.rows; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < A.cols; ++j) s += A(i, j) * x[j];
                    y[i] = s;
                }
            }};
}

igm::DenseMatrix random_spd_dense(int n, unsigned seed) {
    std::mt19937 rng(seed);
    const igm::DenseMatrix B = oracle::random_dense(n, n, rng);
    igm::DenseMatrix A(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += B(k, i) * B(k, j);
            A(i, j) = s;
        }
        A(i, i) += 0.5;
    }
    return A;
}

std::vector<double> random_vector(std::int64_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("pcg solves a dense spd system to the requested true residual") {
    const int n = 40;
    const igm::DenseMatrix A = random_spd_dense(n, 3);
    const std::vector<double> b = random_vector(n, 5);
    PcgOptions opt;
    opt.tol = 1e-10;
    opt.max_iter = 500;
    const PcgResult res = igm::pcg(dense_op(A), igm::identity_op(n), b, opt);
    REQUIRE(res.report.status == PcgStatus::converged);

    // recompute the true residual here, independently of the report
    std::vector<double> r(b);
    const std::vector<double> Ax = oracle::matvec(A, res.x);
    double rn = 0.0, bn = 0.0;
    for (int i = 0; i < n; ++i) {
        r[static_cast<std::size_t>(i)] -= Ax[static_cast<std::size_t>(i)];
        rn += r[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
        bn += b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
    }
    const double true_rel = std::sqrt(rn / bn);
    CHECK(true_rel <= 1e-10);
    CHECK(res.report.rel_residual == doctest::Approx(true_rel).epsilon(1e-6));
    CHECK(oracle::max_abs_diff(res.x, oracle::solve_spd(A, b)) < 1e-8);
    CHECK(res.report.history.size() == static_cast<std::size_t>(res.report.iterations));
}

TEST_CASE("pcg on a zero right-hand side returns the zero solution immediately") {
    const int n = 12;
    const igm::DenseMatrix A = random_spd_dense(n, 7);
    const std::vector<double> b(n, 0.0);
    const PcgResult res = igm::pcg(dense_op(A), igm::identity_op(n), b, PcgOptions{});
    CHECK(res.report.status == PcgStatus::converged);
    CHECK(res.report.iterations == 0);
    for (double v : res.x) CHECK(v == 0.0);
}

TEST_CASE("a perfect preconditioner converges in one iteration") {
    const int n = 30;
    const igm::DenseMatrix A = random_spd_dense(n, 11);
    const igm::DenseMatrix Ainv = oracle::inverse(A);
    const std::vector<double> b = random_vector(n, 13);
    const PcgResult res = igm::pcg(dense_op(A), dense_op(Ainv), b, PcgOptions{});
    CHECK(res.report.status == PcgStatus::converged);
    CHECK(res.report.iterations == 1);
}

TEST_CASE("iteration caps and indefinite operators are reported, not thrown") {
    const int n = 50;
    const igm::DenseMatrix A = random_spd_dense(n, 17);
    const std::vector<double> b = random_vector(n, 19);
    PcgOptions opt;
    opt.tol = 1e-14;
    opt.max_iter = 3;
    const PcgResult res = igm::pcg(dense_op(A), igm::identity_op(n), b, opt);
    CHECK(res.report.status == PcgStatus::max_iterations);
    CHECK(res.report.iterations == 3);

    igm::DenseMatrix Ind(2, 2);
    Ind(0, 0) = 1.0;
    Ind(1, 1) = -1.0;
    const std::vector<double> b2 = {0.0, 1.0};  // steers into the negative branch
    const PcgResult r2 = igm::pcg(dense_op(Ind), igm::identity_op(2), b2, PcgOptions{});
    CHECK(r2.report.status == PcgStatus::breakdown);
    CHECK(std::string(igm::to_string(r2.report.status)) == "breakdown");
}

TEST_CASE("the flop estimate combines per-apply costs with the iteration count") {
    const int n = 25;
    const igm::DenseMatrix A = random_spd_dense(n, 23);
    const std::vector<double> b = random_vector(n, 29);
    PcgOptions opt;
    opt.flops_per_matvec = 1000;
    opt.flops_per_precond = 100;
    const PcgResult res = igm::pcg(dense_op(A), igm::identity_op(n), b, opt);
    REQUIRE(res.report.status == PcgStatus::converged);
    CHECK(res.report.flops ==
          static_cast<std::uint64_t>(res.report.iterations) * 1100u);
}

TEST_CASE("cg coefficients give a useful condition estimate") {
    const igm::Patch patch = igm::catalog("kite_like").patches[0];
    const int p = 2, n_sub = 10;
    const igm::TensorBasis space = igm::make_uniform_space(2, p, n_sub);
    const igm::QuadGrid grid = igm::make_quad_grid(space, p + 1);
    const igm::WeightField w = igm::weight_from_geometry(patch, grid);
    const igm::SparseSym M = igm::assemble_physical_mass(space, grid, w);
    const LinOp A = {M.n, [&M](const double* x, double* y) { igm::spmv(M, x, y); }};

    PcgOptions opt;
    opt.tol = 1e-12;
    opt.estimate_condition = true;
    const std::vector<double> b = random_vector(M.n, 31);
    const PcgResult res = igm::pcg(A, igm::identity_op(M.n), b, opt);
    REQUIRE(res.report.status == PcgStatus::converged);
    REQUIRE(res.report.have_condition);
    const double exact = igm::condition_number_dense(A);
    // Ritz extremes approach the spectrum from inside
    CHECK(res.report.kappa_estimate <= exact * 1.001);
    CHECK(res.report.kappa_estimate >= 0.5 * exact);
    CHECK(res.report.ritz_min > 0.0);
    CHECK(res.report.ritz_max > res.report.ritz_min);
}

TEST_CASE("reduction factor reproduces the closed form and rejects bad input") {
    CHECK(igm::reduction_factor(1.0) == 0.0);
    const double q = igm::reduction_factor(4.0);  // (2-1)/(2+1)
    CHECK(q == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(igm::reduction_factor(0.5), std::invalid_argument);
    CHECK_THROWS_AS(igm::reduction_factor(-2.0), std::invalid_argument);
}

TEST_CASE("dense eigenvalue ranges match the oracle on plain and preconditioned ops") {
    const int n = 20;
    igm::DenseMatrix D(n, n);
    for (int i = 0; i < n; ++i) D(i, i) = 1.0 + i;
    const igm::EigRange r = igm::eigenvalue_range_dense(dense_op(D));
    CHECK(r.min == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.max == doctest::Approx(static_cast<double>(n)).epsilon(1e-12));
    CHECK(igm::condition_number_dense(dense_op(D)) ==
          doctest::Approx(static_cast<double>(n)).epsilon(1e-12));

    const igm::DenseMatrix A = random_spd_dense(n, 37);
    const igm::DenseMatrix P = random_spd_dense(n, 41);
    const igm::DenseMatrix Pinv = oracle::inverse(P);
    const igm::EigRange pre = igm::eigenvalue_range_dense(dense_op(A), dense_op(Pinv));
    const oracle::Range ref = oracle::gen_eig_range(A, P);
    CHECK(pre.min == doctest::Approx(ref.min).epsilon(1e-9));
    CHECK(pre.max == doctest::Approx(ref.max).epsilon(1e-9));

    igm::DenseMatrix Ind(3, 3);
    Ind(0, 0) = 1.0;
    Ind(1, 1) = -2.0;
    Ind(2, 2) = 3.0;
    CHECK_THROWS_AS(igm::condition_number_dense(dense_op(Ind)), std::runtime_error);
}

TEST_CASE("lanczos matches the dense condition number and is deterministic") {
    const igm::Patch patch = igm::catalog("quarter_annulus").patches[0];
    const int p = 3, n_sub = 12;
    const igm::TensorBasis space = igm::make_uniform_space(2, p, n_sub);
    const igm::QuadGrid grid = igm::make_quad_grid(space, p + 1);
    const igm::WeightField w = igm::weight_from_geometry(patch, grid);
    const igm::SparseSym M = igm::assemble_physical_mass(space, grid, w);
    const LinOp A = {M.n, [&M](const double* x, double* y) { igm::spmv(M, x, y); }};
    const igm::MassPreconditioner P = igm::setup_mass_preconditioner(space, patch, grid);

    const double dense = igm::condition_number_dense(A, P.inverse_op());
    const igm::LanczosResult l1 = igm::condition_number_lanczos(A, P.inverse_op());
    const igm::LanczosResult l2 = igm::condition_number_lanczos(A, P.inverse_op());
    CHECK(l1.kappa == doctest::Approx(dense).epsilon(1e-6));
    CHECK(l1.kappa == l2.kappa);  // fixed seed, deterministic
    CHECK(l1.iterations == l2.iterations);
    CHECK(l1.lambda_min > 0.0);
    CHECK(l1.lambda_max >= l1.lambda_min);

    // the dispatching estimate picks the dense path at this size
    const double est = igm::estimate_condition_number(A, P.inverse_op());
    CHECK(est == doctest::Approx(dense).epsilon(1e-12));
    // and the lanczos path when forced
    const double est2 = igm::estimate_condition_number(A, P.inverse_op(), 4);
    CHECK(est2 == doctest::Approx(l1.kappa).epsilon(1e-12));
}

TEST_CASE("materialization refuses operators beyond the dense guard") {
    const LinOp big = igm::identity_op(5000);
    CHECK_THROWS_AS(igm::materialize(big), std::runtime_error);
    CHECK_THROWS_AS(igm::eigenvalue_range_dense(big), std::runtime_error);
}
