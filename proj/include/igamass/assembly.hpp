#pragma once

#include <functional>
#include <vector>

#include "igamass/geometry.hpp"
#include "igamass/matrices.hpp"
#include "igamass/splines.hpp"

namespace igm {

// Univariate mass matrix [M]_ij = int B_i B_j dx over [0,1] with the given
// per-span rule; symmetric banded with half-bandwidth = degree.
Banded assemble_univariate_mass(const KnotVector& kv, const GaussRule1D& rule);

// One univariate parametric factor per direction, sharing the grid's rules.
std::vector<Banded> assemble_parametric_mass(const TensorBasis& space, const QuadGrid& grid);

// Physical (weighted) mass matrix [M]_ij = int B_i B_j w dxi in CSR form.
// Element loop with per-element dense blocks; the upper triangle is
// accumulated and mirrored. Local blocks may be computed concurrently, the
// scatter runs in fixed element order, so results are identical for any
// thread count. Throws when a weight sample is negative.
SparseSym assemble_physical_mass(const TensorBasis& space, const QuadGrid& grid,
                                 const WeightField& weight);
SparseSym assemble_physical_mass_serial(const TensorBasis& space, const QuadGrid& grid,
                                        const WeightField& weight);

// Diagonal of the physical mass assembled directly (int B_i^2 w), bypassing
// the full matrix.
DiagonalMatrix assemble_mass_diagonal(const TensorBasis& space, const QuadGrid& grid,
                                      const WeightField& weight);

// Load vector b_i = int B_i f(x) w dxi; points holds the physical node
// coordinates in WeightField order (d doubles per node).
std::vector<double> assemble_l2_rhs(const TensorBasis& space, const QuadGrid& grid,
                                    const WeightField& weight, const std::vector<double>& points,
                                    const std::function<double(const std::array<double, 3>&)>& f);

}  // namespace igm
