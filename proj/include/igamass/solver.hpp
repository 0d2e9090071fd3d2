#pragma once

#include <cstdint>
#include <vector>

#include "igamass/matrices.hpp"
#include "igamass/precond.hpp"

namespace igm {

enum class PcgStatus { converged, max_iterations, breakdown };

const char* to_string(PcgStatus s);

struct PcgOptions {
    double tol = 1e-8;
    int max_iter = 1000;
    // derive extreme Ritz values (and a condition estimate) from the CG
    // coefficients
    bool estimate_condition = false;
    // per-apply costs used for the flop estimate: one matvec plus one
    // preconditioner application per iteration
    std::uint64_t flops_per_matvec = 0;
    std::uint64_t flops_per_precond = 0;
};

struct PcgReport {
    PcgStatus status = PcgStatus::max_iterations;
    int iterations = 0;
    double rel_residual = 0.0;       // true residual at exit
    std::vector<double> history;     // relative residual after each iteration
    double seconds = 0.0;
    std::uint64_t flops = 0;
    bool have_condition = false;
    double ritz_min = 0.0, ritz_max = 0.0, kappa_estimate = 0.0;
};

struct PcgResult {
    std::vector<double> x;
    PcgReport report;
};

/**
 * Preconditioned conjugate gradients with zero initial guess. Convergence is
 * declared on the relative 2-norm of the true residual b - A x: the
 * recurrence residual drives the iteration, is replaced by the recomputed
 * true residual every 50 iterations, and every candidate exit is confirmed
 * by a recomputation (the solve continues when the recurrence has drifted).
 * Breakdown (non-positive preconditioned inner product or curvature) is
 * reported in the status, not thrown.
 */
PcgResult pcg(const LinOp& A, const LinOp& P_inv, const std::vector<double>& b,
              const PcgOptions& opt = {});

// q(kappa) = (sqrt(kappa)-1)/(sqrt(kappa)+1), the per-iteration bound of the
// CG error-reduction factor. Requires kappa >= 1 (roundoff slack 1e-9).
double reduction_factor(double kappa);

// Materializes a linear operator column by column; order limited to 4096.
DenseMatrix materialize(const LinOp& A);

struct EigRange {
    double min = 0.0, max = 0.0;
};

// Extreme eigenvalues of a symmetric operator by dense eigensolve
// (order <= 4096).
EigRange eigenvalue_range_dense(const LinOp& A);

// Extreme eigenvalues of the preconditioned operator P^{-1}A (see
// condition_number_dense below for the similarity transform used).
EigRange eigenvalue_range_dense(const LinOp& A, const LinOp& P_inv);

// kappa(A) = lambda_max/lambda_min of an SPD operator (order <= 4096);
// throws when the materialized operator is not positive definite.
double condition_number_dense(const LinOp& A);

// kappa of the preconditioned operator: with P^{-1} = L L^T the spectrum of
// P^{-1}A equals that of the symmetric L^T A L, which is solved densely.
// Needs only the inverse action of the preconditioner.
double condition_number_dense(const LinOp& A, const LinOp& P_inv);

struct LanczosResult {
    double kappa = 0.0;
    double lambda_min = 0.0, lambda_max = 0.0;
    int iterations = 0;
};

/**
 * Extreme eigenvalues of P^{-1}A for SPD A and P, via Lanczos on A P^{-1}
 * in the P^{-1} inner product (one A apply and one P^{-1} apply per
 * iteration, full reorthogonalization, deterministic for a fixed seed).
 * Pass identity_op(n) for the unpreconditioned spectrum.
 */
LanczosResult condition_number_lanczos(const LinOp& A, const LinOp& P_inv, int max_iter = 200,
                                       unsigned seed = 1234);

// Dense estimate below the cutoff order, Lanczos above it.
double estimate_condition_number(const LinOp& A, const LinOp& P_inv,
                                 std::int64_t dense_cutoff = 2048);

}  // namespace igm
