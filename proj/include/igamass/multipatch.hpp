#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "igamass/assembly.hpp"
#include "igamass/geometry.hpp"
#include "igamass/matrices.hpp"
#include "igamass/precond.hpp"
#include "igamass/splines.hpp"

namespace igm {

/**
 * Conforming multipatch discretization: one tensor-product space per patch
 * plus the identification of coefficients along shared interfaces into a
 * single global numbering. Interface basis functions carry one global index
 * shared by every adjacent patch; all other functions are patch-private.
 */
struct MultipatchSpace {
    MultipatchGeometry geo;
    std::vector<TensorBasis> spaces;              // one per patch, same degree
    std::vector<std::vector<std::int64_t>> gmap;  // per patch: local dof -> global dof
    std::int64_t total_dof = 0;
    std::vector<int> multiplicity;  // per global dof: number of patches containing it
    int n_adj = 1;                  // max multiplicity

    int num_patches() const { return static_cast<int>(spaces.size()); }
};

// Uniform spaces: every patch gets degree `degree` with n_sub subdivisions
// per direction. Throws on non-conforming interfaces (mismatched knots or
// sizes along a shared face), naming the patch pair.
MultipatchSpace build_multipatch_space(const MultipatchGeometry& geo, int degree, int n_sub);

// Caller-supplied per-patch spaces; same conformity checks apply.
MultipatchSpace build_multipatch_space(const MultipatchGeometry& geo,
                                       std::vector<TensorBasis> spaces);

// Restriction to patch r (gather) and its transpose (scatter-add).
std::vector<double> patch_restrict(const MultipatchSpace& ms, int r,
                                   const std::vector<double>& global);
void patch_prolong_add(const MultipatchSpace& ms, int r, const std::vector<double>& local,
                       std::vector<double>& global);

// Global mass matrix: per-patch weighted assembly scattered through the
// global maps, patches in index order (deterministic). SPD for a valid
// geometry.
SparseSym assemble_global_mass(const MultipatchSpace& ms, int points_per_span);

// Global load vector for f given in physical coordinates.
std::vector<double> assemble_global_l2_rhs(
    const MultipatchSpace& ms, int points_per_span,
    const std::function<double(const std::array<double, 3>&)>& f);

/**
 * Additive Schwarz preconditioner: inverse applied as the sum over patches
 * of prolongated local inverses,
 *
 *   P^{-1} z = sum_r R_r^T (P_r)^{-1} R_r z,
 *
 * with P_r the patch-local diagonal-scaled Kronecker mass preconditioner
 * (local physical diagonal, local parametric factors). Local solves are
 * independent and run concurrently; the scatter-add combines per-patch
 * results in fixed patch order, so the result is deterministic for any
 * thread count. No coarse space is used.
 */
class AdditiveSchwarzPreconditioner {
  public:
    AdditiveSchwarzPreconditioner(const MultipatchSpace& ms, int points_per_span);

    std::int64_t n() const { return n_; }
    int num_patches() const { return static_cast<int>(locals_.size()); }
    const MassPreconditioner& local(int r) const { return locals_[static_cast<std::size_t>(r)]; }

    std::uint64_t apply_inverse(const double* x, double* y) const;  // x and y may alias
    std::vector<double> apply_inverse(const std::vector<double>& z) const;

    LinOp inverse_op() const;

    std::uint64_t flops() const { return flops_.get(); }
    void reset_flops() const { flops_.reset(); }

  private:
    std::int64_t n_ = 0;
    std::vector<MassPreconditioner> locals_;
    std::vector<std::vector<std::int64_t>> gmap_;
    FlopCounter flops_;
};

}  // namespace igm
