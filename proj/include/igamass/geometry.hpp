#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "igamass/splines.hpp"

namespace igm {

/**
 * Single-patch B-spline geometry F: [0,1]^d -> R^d. Control points are
 * stored row-major by the co-lexicographic linear index of the geometry
 * basis (first direction fastest), d doubles per point.
 *
 * regular == true declares det J > 0 on the open parametric domain;
 * singular patches promise det J >= 0 with zeros confined to the declared
 * parametric locations.
 */
struct Patch {
    TensorBasis basis;
    std::vector<double> cp;
    std::string label;
    bool regular = true;
    std::vector<std::array<double, 3>> singular_params;

    int dim() const { return basis.dim(); }
    std::array<double, 3> control_point(std::int64_t j) const;
    void validate() const;
};

struct GeoSample {
    std::array<double, 3> x = {0, 0, 0};     // physical point
    std::array<std::array<double, 3>, 3> J;  // J[k] = dF/dxi_k (columns)
    double det = 0.0;
};

GeoSample eval_geometry(const Patch& patch, const std::array<double, 3>& xi);

// Identity patch of the given degree on [0,1]^d (control points on the
// Greville grid).
Patch identity_patch(int dim, int degree);

// Affine image of the identity patch: x = origin + diag(scale) xi.
Patch box_patch(int dim, int degree, const std::array<double, 3>& origin,
                const std::array<double, 3>& scale);

/** Conforming interface between two patch faces.
 *
 * Face numbering: face = 2*k + side fixes direction k at 0 (side 0) or 1
 * (side 1). Tangential axes are the remaining directions in increasing
 * order. The orientation code maps a-side tangential indices to b-side:
 * bit2 swaps the two tangential axes (3D only), bit0/bit1 then reverse the
 * first/second b-side axis.
 */
struct Interface {
    int patch_a = 0, face_a = 0;
    int patch_b = 0, face_b = 0;
    int orientation = 0;
};

struct MultipatchGeometry {
    std::string label;
    std::vector<Patch> patches;
    std::vector<Interface> interfaces;

    int dim() const { return patches.empty() ? 0 : patches[0].dim(); }
    int num_patches() const { return static_cast<int>(patches.size()); }
    void validate() const;
};

// Scans all patch face pairs and returns the conforming interfaces, matching
// face control nets entrywise with absolute tolerance 1e-10 (scaled by the
// geometry's bounding-box diagonal when that exceeds 1).
std::vector<Interface> detect_interfaces(const std::vector<Patch>& patches);

/**
 * Named geometry catalog. Single-patch entries come back as one-patch
 * multipatch objects. Entries:
 *   unit_square, unit_cube      identity maps
 *   quarter_annulus             regular curved map between two parabolic arcs
 *   kite_like                   smooth asymmetric perturbation of a quad
 *   disc_one_singularity        sector-style map collapsing the xi_1=0 edge
 *   disc_four_singularities     curved square with det J = 0 at all corners
 *   holed_plate_singular        quarter plate with hole, one collapsed vertex
 *   multipatch_square_2x2       four identity boxes tiling the unit square
 *   multipatch_star_5           five bilinear kites meeting at the origin
 *   multipatch_disc_5           center square plus four curved caps
 */
MultipatchGeometry catalog(const std::string& name);
std::vector<std::string> catalog_names();

// Geometry file exchange, schema version 1.
MultipatchGeometry load_geometry_json(const std::string& path);
void save_geometry_json(const MultipatchGeometry& geo, const std::string& path);

/** Tensor Gauss grid over the nonempty spans of an analysis space. */
struct QuadGrid {
    int d = 0;
    std::vector<GaussRule1D> rules;

    std::array<int, 3> elements() const;       // spans per direction, padded with 1
    std::array<int, 3> nodes_per_dir() const;  // q per direction
    std::int64_t num_elements() const;
    std::int64_t nodes_per_element() const;
    std::int64_t num_nodes() const { return num_elements() * nodes_per_element(); }
};

QuadGrid make_quad_grid(const TensorBasis& space, int q);

/**
 * Scalar samples at every node of a QuadGrid, element-major co-lex outside,
 * node co-lex inside: idx = node_lin + nodes_per_element * element_lin.
 */
struct WeightField {
    enum class Kind { constant, jacobian, inverse_jacobian, function };
    Kind kind = Kind::constant;
    std::vector<double> w;
    double min_sample = 0.0, max_sample = 0.0;
};

WeightField weight_constant(const QuadGrid& grid, double value);
// omega = |det J_F| at each node
WeightField weight_from_geometry(const Patch& patch, const QuadGrid& grid);
// omega = |det J_F|^{-1}; requires a regular patch
WeightField weight_inverse_jacobian(const Patch& patch, const QuadGrid& grid);
// omega = f(xi), a parametric field for tests
WeightField weight_from_function(const QuadGrid& grid,
                                 const std::function<double(const std::array<double, 3>&)>& f);

// Physical coordinates of every quadrature node, d doubles per node, same
// node ordering as WeightField.
std::vector<double> sample_points(const Patch& patch, const QuadGrid& grid);

}  // namespace igm
