#include "igamass/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace igm {

using json = nlohmann::json;

std::array<double, 3> Patch::control_point(std::int64_t j) const {
    std::array<double, 3> p = {0, 0, 0};
    for (int c = 0; c < dim(); ++c) p[c] = cp[static_cast<std::size_t>(j) * dim() + c];
    return p;
}

void Patch::validate() const {
    basis.validate();
    if (basis.degree() < 1)
        throw std::invalid_argument("patch: geometry degree must be at least 1");
    if (cp.size() != static_cast<std::size_t>(basis.total_dof()) * dim())
        throw std::invalid_argument("patch '" + label + "': control point count mismatch");
}

namespace {

double det_of(const std::array<std::array<double, 3>, 3>& J, int d) {
    if (d == 1) return J[0][0];
    if (d == 2) return J[0][0] * J[1][1] - J[1][0] * J[0][1];
    return J[0][0] * (J[1][1] * J[2][2] - J[2][1] * J[1][2]) -
           J[1][0] * (J[0][1] * J[2][2] - J[2][1] * J[0][2]) +
           J[2][0] * (J[0][1] * J[1][2] - J[1][1] * J[0][2]);
}

}  // namespace

GeoSample eval_geometry(const Patch& patch, const std::array<double, 3>& xi) {
    const int d = patch.dim();
    const int pg = patch.basis.degree();
    std::array<std::vector<double>, 3> val, der;
    std::array<int, 3> first = {0, 0, 0};
    for (int k = 0; k < d; ++k) {
        val[k].resize(pg + 1);
        der[k].resize(pg + 1);
        first[k] = eval_basis_deriv(patch.basis.kv[k], xi[k], val[k].data(), der[k].data());
    }
    GeoSample s;
    for (auto& col : s.J) col = {0, 0, 0};
    const auto m = patch.basis.sizes();
    const int e1 = (d > 1) ? pg : 0, e2 = (d > 2) ? pg : 0;
    for (int k2 = 0; k2 <= e2; ++k2)
        for (int k1 = 0; k1 <= e1; ++k1)
            for (int k0 = 0; k0 <= pg; ++k0) {
                const std::int64_t j =
                    (first[0] + k0) +
                    static_cast<std::int64_t>(m[0]) *
                        ((d > 1 ? first[1] + k1 : 0) +
                         static_cast<std::int64_t>(m[1]) * (d > 2 ? first[2] + k2 : 0));
                const double b = val[0][k0] * (d > 1 ? val[1][k1] : 1.0) * (d > 2 ? val[2][k2] : 1.0);
                std::array<double, 3> g = {der[0][k0] * (d > 1 ? val[1][k1] : 1.0) *
                                               (d > 2 ? val[2][k2] : 1.0),
                                           0, 0};
                if (d > 1)
                    g[1] = val[0][k0] * der[1][k1] * (d > 2 ? val[2][k2] : 1.0);
                if (d > 2) g[2] = val[0][k0] * val[1][k1] * der[2][k2];
                for (int c = 0; c < d; ++c) {
                    const double x = patch.cp[static_cast<std::size_t>(j) * d + c];
                    s.x[c] += b * x;
                    for (int k = 0; k < d; ++k) s.J[k][c] += g[k] * x;
                }
            }
    s.det = det_of(s.J, d);
    return s;
}

namespace {

std::vector<double> greville(const KnotVector& kv) {
    const int p = kv.degree;
    std::vector<double> g(kv.num_basis());
    for (int i = 0; i < kv.num_basis(); ++i) {
        double s = 0.0;
        for (int j = 1; j <= p; ++j) s += kv.knots[i + j];
        g[i] = s / p;
    }
    return g;
}

}  // namespace

Patch box_patch(int dim, int degree, const std::array<double, 3>& origin,
                const std::array<double, 3>& scale) {
    Patch patch;
    patch.label = "box";
    for (int k = 0; k < dim; ++k) patch.basis.kv.push_back(make_uniform_knots(degree, 1));
    const auto g = greville(patch.basis.kv[0]);
    const auto m = patch.basis.sizes();
    patch.cp.resize(static_cast<std::size_t>(patch.basis.total_dof()) * dim);
    std::size_t idx = 0;
    for (int i3 = 0; i3 < m[2]; ++i3)
        for (int i2 = 0; i2 < m[1]; ++i2)
            for (int i1 = 0; i1 < m[0]; ++i1) {
                const std::array<int, 3> mi = {i1, i2, i3};
                for (int c = 0; c < dim; ++c) patch.cp[idx++] = origin[c] + scale[c] * g[mi[c]];
            }
    return patch;
}

Patch identity_patch(int dim, int degree) {
    Patch p = box_patch(dim, degree, {0, 0, 0}, {1, 1, 1});
    p.label = "identity";
    return p;
}

void MultipatchGeometry::validate() const {
    if (patches.empty()) throw std::invalid_argument("geometry '" + label + "': no patches");
    for (const auto& p : patches) {
        p.validate();
        if (p.dim() != dim())
            throw std::invalid_argument("geometry '" + label + "': mixed patch dimensions");
        if (p.basis.degree() != patches[0].basis.degree())
            throw std::invalid_argument("geometry '" + label + "': mixed geometry degrees");
    }
    for (const auto& f : interfaces) {
        if (f.patch_a < 0 || f.patch_a >= num_patches() || f.patch_b < 0 ||
            f.patch_b >= num_patches() || f.face_a < 0 || f.face_a >= 2 * dim() || f.face_b < 0 ||
            f.face_b >= 2 * dim())
            throw std::invalid_argument("geometry '" + label + "': interface out of range");
    }
}

namespace {

// control points of one face in face-local co-lex order (lower tangential
// axis fastest), together with the tangential grid sizes
struct FaceNet {
    std::array<int, 2> size = {1, 1};
    std::vector<std::array<double, 3>> pts;
};

FaceNet face_net(const Patch& patch, int face) {
    const int d = patch.dim();
    const int k = face / 2, side = face % 2;
    const auto m = patch.basis.sizes();
    std::array<int, 2> tang = {-1, -1};
    int nt = 0;
    for (int c = 0; c < d; ++c)
        if (c != k) tang[nt++] = c;
    FaceNet net;
    for (int t = 0; t < nt; ++t) net.size[t] = m[tang[t]];
    net.pts.resize(static_cast<std::size_t>(net.size[0]) * net.size[1]);
    for (int v = 0; v < net.size[1]; ++v)
        for (int u = 0; u < net.size[0]; ++u) {
            std::array<int, 3> mi = {0, 0, 0};
            mi[k] = side == 0 ? 0 : m[k] - 1;
            mi[tang[0]] = u;
            if (nt > 1) mi[tang[1]] = v;
            net.pts[u + static_cast<std::size_t>(net.size[0]) * v] =
                patch.control_point(patch.basis.linear_index(mi));
        }
    return net;
}

// b-side face-local index for a-side (u,v) under an orientation code
std::array<int, 2> orient_index(int orientation, int u, int v, const std::array<int, 2>& size_b) {
    int s1 = u, s2 = v;
    if (orientation & 4) std::swap(s1, s2);
    if (orientation & 1) s1 = size_b[0] - 1 - s1;
    if (orientation & 2) s2 = size_b[1] - 1 - s2;
    return {s1, s2};
}

double dist2(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return s;
}

}  // namespace

std::vector<Interface> detect_interfaces(const std::vector<Patch>& patches) {
    if (patches.empty()) return {};
    const int d = patches[0].dim();
    double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
    for (const auto& p : patches)
        for (std::int64_t j = 0; j < p.basis.total_dof(); ++j) {
            const auto x = p.control_point(j);
            for (int c = 0; c < d; ++c) {
                lo[c] = std::min(lo[c], x[c]);
                hi[c] = std::max(hi[c], x[c]);
            }
        }
    double diag = 0.0;
    for (int c = 0; c < d; ++c) diag += (hi[c] - lo[c]) * (hi[c] - lo[c]);
    const double tol = 1e-10 * std::max(1.0, std::sqrt(diag));
    const double tol2 = tol * tol;

    const int nfaces = 2 * d;
    std::vector<Interface> out;
    for (int a = 0; a < static_cast<int>(patches.size()); ++a)
        for (int b = a + 1; b < static_cast<int>(patches.size()); ++b)
            for (int fa = 0; fa < nfaces; ++fa)
                for (int fb = 0; fb < nfaces; ++fb) {
                    const FaceNet na = face_net(patches[a], fa);
                    const FaceNet nb = face_net(patches[b], fb);
                    const int omax = (d == 3) ? 8 : 2;
                    for (int o = 0; o < omax; ++o) {
                        std::array<int, 2> mapped_size = nb.size;
                        if (o & 4) std::swap(mapped_size[0], mapped_size[1]);
                        if (mapped_size != na.size) continue;
                        bool match = true;
                        for (int v = 0; v < na.size[1] && match; ++v)
                            for (int u = 0; u < na.size[0] && match; ++u) {
                                const auto s = orient_index(o, u, v, nb.size);
                                const auto& pa =
                                    na.pts[u + static_cast<std::size_t>(na.size[0]) * v];
                                const auto& pb =
                                    nb.pts[s[0] + static_cast<std::size_t>(nb.size[0]) * s[1]];
                                if (dist2(pa, pb) > tol2) match = false;
                            }
                        if (match) {
                            out.push_back({a, fa, b, fb, o});
                            break;
                        }
                    }
                }
    return out;
}

namespace {

Patch patch_2d(const std::string& label, const KnotVector& k1, const KnotVector& k2,
               std::vector<std::array<double, 2>> pts, bool regular,
               std::vector<std::array<double, 3>> singular = {}) {
    Patch p;
    p.label = label;
    p.basis.kv = {k1, k2};
    p.cp.reserve(pts.size() * 2);
    for (const auto& q : pts) {
        p.cp.push_back(q[0]);
        p.cp.push_back(q[1]);
    }
    p.regular = regular;
    p.singular_params = std::move(singular);
    p.validate();
    return p;
}

MultipatchGeometry single(const std::string& label, Patch p) {
    MultipatchGeometry g;
    g.label = label;
    p.label = label;
    g.patches.push_back(std::move(p));
    return g;
}

MultipatchGeometry make_quarter_annulus() {
    // F(xi) = (1 + xi_1) * arc(xi_2) with arc the quadratic Bezier
    // (1,0) -> (1,1) -> (0,1); det J = 2 (1+xi_1)(xi_2^2 - xi_2 + 1) >= 3/2
    const KnotVector kv = make_uniform_knots(2, 1);
    const double g[3] = {0.0, 0.5, 1.0};
    const std::array<double, 2> arc[3] = {{1, 0}, {1, 1}, {0, 1}};
    std::vector<std::array<double, 2>> pts;
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            pts.push_back({(1 + g[i]) * arc[j][0], (1 + g[i]) * arc[j][1]});
    return single("quarter_annulus", patch_2d("quarter_annulus", kv, kv, pts, true));
}

MultipatchGeometry make_kite_like() {
    // smooth C^1 perturbation of a bilinear quad; all control moves are small
    // against the quad scale so det J stays well above zero
    const KnotVector kv = make_uniform_knots(2, 2);
    const double g[4] = {0.0, 0.25, 0.75, 1.0};
    const std::array<double, 2> A = {0.0, 0.0}, B = {2.0, 0.2}, C = {2.4, 2.2}, D = {0.2, 1.9};
    auto bilin = [&](double u, double v) -> std::array<double, 2> {
        return {A[0] * (1 - u) * (1 - v) + B[0] * u * (1 - v) + D[0] * (1 - u) * v + C[0] * u * v,
                A[1] * (1 - u) * (1 - v) + B[1] * u * (1 - v) + D[1] * (1 - u) * v + C[1] * u * v};
    };
    double dx[4][4] = {}, dy[4][4] = {};
    auto bump = [&](int i, int j, double ex, double ey) {
        dx[i][j] = ex;
        dy[i][j] = ey;
    };
    bump(1, 1, 0.12, -0.08);
    bump(2, 1, -0.05, 0.10);
    bump(1, 2, 0.08, 0.12);
    bump(2, 2, -0.10, -0.06);
    bump(1, 0, 0.05, -0.10);
    bump(2, 0, -0.04, -0.08);
    bump(0, 1, -0.08, 0.04);
    bump(0, 2, -0.06, -0.05);
    bump(3, 1, 0.07, 0.05);
    bump(3, 2, 0.05, 0.08);
    bump(1, 3, 0.06, 0.09);
    bump(2, 3, -0.07, 0.06);
    std::vector<std::array<double, 2>> pts;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
            auto q = bilin(g[i], g[j]);
            pts.push_back({q[0] + dx[i][j], q[1] + dy[i][j]});
        }
    return single("kite_like", patch_2d("kite_like", kv, kv, pts, true));
}

MultipatchGeometry make_disc_one() {
    // F(xi) = xi_1 * arc(xi_2); the whole xi_1 = 0 edge collapses to the
    // origin, det J = 2 xi_1 (xi_2^2 - xi_2 + 1) vanishing only there
    const KnotVector kv = make_uniform_knots(2, 1);
    const double g[3] = {0.0, 0.5, 1.0};
    const std::array<double, 2> arc[3] = {{1, 0}, {1, 1}, {0, 1}};
    std::vector<std::array<double, 2>> pts;
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) pts.push_back({g[i] * arc[j][0], g[i] * arc[j][1]});
    return single("disc_one_singularity",
                  patch_2d("disc_one_singularity", kv, kv, pts, false,
                           {{0, 0, 0}, {0, 0.5, 0}, {0, 1, 0}}));
}

MultipatchGeometry make_disc_four() {
    // curved square with the two corner tangents antiparallel at every
    // corner, so det J = 0 exactly at the four parametric corners
    const KnotVector kv = make_uniform_knots(2, 1);
    const std::vector<std::array<double, 2>> pts = {{-0.5, -0.5}, {0, -1}, {0.5, -0.5},
                                                    {-1, 0},      {0, 0},  {1, 0},
                                                    {-0.5, 0.5},  {0, 1},  {0.5, 0.5}};
    return single("disc_four_singularities",
                  patch_2d("disc_four_singularities", kv, kv, pts, false,
                           {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}));
}

MultipatchGeometry make_holed_plate() {
    // quarter plate with a hole: xi_1 runs along the arc (two spans), xi_2
    // radially; the doubled control point (-4,4) collapses the top-left
    // vertex, the only zero of det J
    const KnotVector karc = make_uniform_knots(2, 2);
    const KnotVector krad = make_uniform_knots(2, 1);
    const double s = std::sqrt(2.0) - 1.0;
    const std::vector<std::array<double, 2>> pts = {
        {-1, 0},    {-1, s},       {-s, 1},       {0, 1},
        {-2.5, 0},  {-2.5, 0.75},  {-0.75, 2.5},  {0, 2.5},
        {-4, 0},    {-4, 4},       {-4, 4},       {0, 4}};
    return single("holed_plate_singular",
                  patch_2d("holed_plate_singular", karc, krad, pts, false, {{0.5, 1, 0}}));
}

MultipatchGeometry make_grid_2x2() {
    MultipatchGeometry g;
    g.label = "multipatch_square_2x2";
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
            Patch p = box_patch(2, 1, {0.5 * i, 0.5 * j, 0}, {0.5, 0.5, 1});
            p.label = "quadrant_" + std::to_string(i) + std::to_string(j);
            g.patches.push_back(std::move(p));
        }
    g.interfaces = detect_interfaces(g.patches);
    return g;
}

MultipatchGeometry make_star_5() {
    // pentagram star: five convex bilinear kites sharing the origin, so the
    // center vertex function lives on all five patches
    MultipatchGeometry g;
    g.label = "multipatch_star_5";
    const double R = 1.0;
    const double r = (3.0 - std::sqrt(5.0)) / 2.0;
    const double pi = 3.14159265358979323846;
    auto at = [&](double radius, double deg) -> std::array<double, 2> {
        const double a = pi * deg / 180.0;
        return {radius * std::cos(a), radius * std::sin(a)};
    };
    for (int k = 0; k < 5; ++k) {
        const double base = 90.0 + 72.0 * k;
        const auto V0 = at(r, base), S = at(R, base + 36.0), V1 = at(r, base + 72.0);
        Patch p;
        p.label = "blade_" + std::to_string(k);
        p.basis.kv = {make_uniform_knots(1, 1), make_uniform_knots(1, 1)};
        p.cp = {0, 0, V0[0], V0[1], V1[0], V1[1], S[0], S[1]};
        p.validate();
        g.patches.push_back(std::move(p));
    }
    g.interfaces = detect_interfaces(g.patches);
    return g;
}

MultipatchGeometry make_disc_5() {
    // center square [-c,c]^2 plus four curved caps whose outer edges are
    // quadratic arcs through the unit circle's axis points
    MultipatchGeometry g;
    g.label = "multipatch_disc_5";
    const double c = 0.5;
    const double a = std::sqrt(2.0) / 2.0;
    const double y1 = 2.0 - a;
    {
        Patch p = box_patch(2, 2, {-c, -c, 0}, {2 * c, 2 * c, 1});
        p.label = "center";
        g.patches.push_back(std::move(p));
    }
    // north cap control net; the other three caps are its rotations
    const std::array<double, 2> north[9] = {{-c, c},
                                            {0, c},
                                            {c, c},
                                            {-(c + a) / 2, (c + a) / 2},
                                            {0, (c + y1) / 2},
                                            {(c + a) / 2, (c + a) / 2},
                                            {-a, a},
                                            {0, y1},
                                            {a, a}};
    const KnotVector kv = make_uniform_knots(2, 1);
    const char* names[4] = {"cap_north", "cap_east", "cap_south", "cap_west"};
    for (int k = 0; k < 4; ++k) {
        std::vector<std::array<double, 2>> pts;
        for (const auto& q : north) {
            // rotate by -90 degrees k times
            std::array<double, 2> v = q;
            for (int t = 0; t < k; ++t) v = {v[1], -v[0]};
            pts.push_back(v);
        }
        g.patches.push_back(patch_2d(names[k], kv, kv, pts, true));
    }
    g.interfaces = detect_interfaces(g.patches);
    return g;
}

}  // namespace

std::vector<std::string> catalog_names() {
    return {"unit_square",
            "unit_cube",
            "quarter_annulus",
            "kite_like",
            "disc_one_singularity",
            "disc_four_singularities",
            "holed_plate_singular",
            "multipatch_square_2x2",
            "multipatch_star_5",
            "multipatch_disc_5"};
}

MultipatchGeometry catalog(const std::string& name) {
    if (name == "unit_square") return single("unit_square", identity_patch(2, 1));
    if (name == "unit_cube") return single("unit_cube", identity_patch(3, 1));
    if (name == "quarter_annulus") return make_quarter_annulus();
    if (name == "kite_like") return make_kite_like();
    if (name == "disc_one_singularity") return make_disc_one();
    if (name == "disc_four_singularities") return make_disc_four();
    if (name == "holed_plate_singular") return make_holed_plate();
    if (name == "multipatch_square_2x2") return make_grid_2x2();
    if (name == "multipatch_star_5") return make_star_5();
    if (name == "multipatch_disc_5") return make_disc_5();
    throw std::invalid_argument("catalog: unknown geometry '" + name + "'");
}

MultipatchGeometry load_geometry_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("geometry file '" + path + "': cannot open");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("geometry file '" + path + "': " + e.what());
    }
    if (!j.contains("schema") || j["schema"].get<int>() != 1)
        throw std::runtime_error("geometry file '" + path + "': unsupported schema");
    MultipatchGeometry g;
    g.label = j.value("label", std::string("unnamed"));
    const int d = j.at("dim").get<int>();
    if (d < 1 || d > 3) throw std::runtime_error("geometry file '" + path + "': bad dimension");
    for (const auto& jp : j.at("patches")) {
        Patch p;
        p.label = jp.value("label", g.label);
        const auto degs = jp.at("degree").get<std::vector<int>>();
        const auto knots = jp.at("knots").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(degs.size()) != d || static_cast<int>(knots.size()) != d)
            throw std::runtime_error("geometry file '" + path + "': degree/knots size mismatch");
        for (int k = 0; k < d; ++k) p.basis.kv.push_back({degs[k], knots[k]});
        for (const auto& row : jp.at("control_points")) {
            const auto v = row.get<std::vector<double>>();
            if (static_cast<int>(v.size()) != d)
                throw std::runtime_error("geometry file '" + path + "': control point arity");
            p.cp.insert(p.cp.end(), v.begin(), v.end());
        }
        p.regular = jp.value("regular", true);
        if (jp.contains("singular_params"))
            for (const auto& row : jp["singular_params"]) {
                const auto v = row.get<std::vector<double>>();
                std::array<double, 3> q = {0, 0, 0};
                for (std::size_t c = 0; c < v.size() && c < 3; ++c) q[c] = v[c];
                p.singular_params.push_back(q);
            }
        try {
            p.validate();
        } catch (const std::exception& e) {
            throw std::runtime_error("geometry file '" + path + "': " + e.what());
        }
        g.patches.push_back(std::move(p));
    }
    if (j.contains("interfaces"))
        for (const auto& ji : j["interfaces"])
            g.interfaces.push_back({ji.at("patch_a").get<int>(), ji.at("face_a").get<int>(),
                                    ji.at("patch_b").get<int>(), ji.at("face_b").get<int>(),
                                    ji.value("orientation", 0)});
    try {
        g.validate();
    } catch (const std::exception& e) {
        throw std::runtime_error("geometry file '" + path + "': " + e.what());
    }
    return g;
}

void save_geometry_json(const MultipatchGeometry& geo, const std::string& path) {
    json j;
    j["schema"] = 1;
    j["label"] = geo.label;
    j["dim"] = geo.dim();
    j["patches"] = json::array();
    for (const auto& p : geo.patches) {
        json jp;
        jp["label"] = p.label;
        std::vector<int> degs;
        std::vector<std::vector<double>> knots;
        for (const auto& kv : p.basis.kv) {
            degs.push_back(kv.degree);
            knots.push_back(kv.knots);
        }
        jp["degree"] = degs;
        jp["knots"] = knots;
        json cps = json::array();
        for (std::int64_t i = 0; i < p.basis.total_dof(); ++i) {
            const auto x = p.control_point(i);
            std::vector<double> row(x.begin(), x.begin() + p.dim());
            cps.push_back(row);
        }
        jp["control_points"] = cps;
        jp["regular"] = p.regular;
        if (!p.singular_params.empty()) {
            json sp = json::array();
            for (const auto& q : p.singular_params) {
                std::vector<double> row(q.begin(), q.begin() + p.dim());
                sp.push_back(row);
            }
            jp["singular_params"] = sp;
        }
        j["patches"].push_back(jp);
    }
    if (!geo.interfaces.empty()) {
        j["interfaces"] = json::array();
        for (const auto& f : geo.interfaces)
            j["interfaces"].push_back({{"patch_a", f.patch_a},
                                       {"face_a", f.face_a},
                                       {"patch_b", f.patch_b},
                                       {"face_b", f.face_b},
                                       {"orientation", f.orientation}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("geometry file '" + path + "': cannot write");
    out << j.dump(2) << "\n";
}

std::array<int, 3> QuadGrid::elements() const {
    std::array<int, 3> e = {1, 1, 1};
    for (int k = 0; k < d; ++k) e[k] = rules[k].num_spans();
    return e;
}

std::array<int, 3> QuadGrid::nodes_per_dir() const {
    std::array<int, 3> q = {1, 1, 1};
    for (int k = 0; k < d; ++k) q[k] = rules[k].points_per_span;
    return q;
}

std::int64_t QuadGrid::num_elements() const {
    const auto e = elements();
    return static_cast<std::int64_t>(e[0]) * e[1] * e[2];
}

std::int64_t QuadGrid::nodes_per_element() const {
    const auto q = nodes_per_dir();
    return static_cast<std::int64_t>(q[0]) * q[1] * q[2];
}

QuadGrid make_quad_grid(const TensorBasis& space, int q) {
    if (q < 1) throw std::invalid_argument("make_quad_grid: need at least one point per span");
    QuadGrid grid;
    grid.d = space.dim();
    for (int k = 0; k < grid.d; ++k) grid.rules.push_back(gauss_rule(space.kv[k], q));
    return grid;
}

namespace {

// geometry basis values at an arbitrary list of abscissae
struct DirTab {
    int pg = 0;
    std::vector<int> first;
    std::vector<double> val, der;
};

DirTab tab_dir(const KnotVector& kv, const std::vector<double>& xs) {
    DirTab t;
    t.pg = kv.degree;
    t.first.resize(xs.size());
    t.val.resize(xs.size() * (t.pg + 1));
    t.der.resize(xs.size() * (t.pg + 1));
    for (std::size_t i = 0; i < xs.size(); ++i)
        t.first[i] = eval_basis_deriv(kv, xs[i], t.val.data() + i * (t.pg + 1),
                                      t.der.data() + i * (t.pg + 1));
    return t;
}

// walks every quadrature node in WeightField order and hands the per
// direction node indices to the callback
template <class F>
void for_each_node(const QuadGrid& grid, F&& f) {
    const auto E = grid.elements();
    const auto Q = grid.nodes_per_dir();
    std::int64_t idx = 0;
    for (int e3 = 0; e3 < E[2]; ++e3)
        for (int e2 = 0; e2 < E[1]; ++e2)
            for (int e1 = 0; e1 < E[0]; ++e1)
                for (int g3 = 0; g3 < Q[2]; ++g3)
                    for (int g2 = 0; g2 < Q[1]; ++g2)
                        for (int g1 = 0; g1 < Q[0]; ++g1) {
                            const std::array<int, 3> n = {e1 * Q[0] + g1, e2 * Q[1] + g2,
                                                          e3 * Q[2] + g3};
                            f(idx++, n);
                        }
}

void geometry_at_nodes(const Patch& patch, const QuadGrid& grid, std::vector<double>* points,
                       std::vector<double>* dets) {
    const int d = patch.dim();
    std::array<DirTab, 3> tabs;
    for (int k = 0; k < d; ++k) {
        std::vector<double> xs(grid.rules[k].nodes.begin(), grid.rules[k].nodes.end());
        tabs[k] = tab_dir(patch.basis.kv[k], xs);
    }
    const int pg = patch.basis.degree();
    const auto m = patch.basis.sizes();
    if (points) points->assign(static_cast<std::size_t>(grid.num_nodes()) * d, 0.0);
    if (dets) dets->assign(grid.num_nodes(), 0.0);
    const int e1 = (d > 1) ? pg : 0, e2 = (d > 2) ? pg : 0;
    for_each_node(grid, [&](std::int64_t idx, const std::array<int, 3>& n) {
        std::array<double, 3> x = {0, 0, 0};
        std::array<std::array<double, 3>, 3> J;
        for (auto& col : J) col = {0, 0, 0};
        const double* v0 = tabs[0].val.data() + static_cast<std::size_t>(n[0]) * (pg + 1);
        const double* d0 = tabs[0].der.data() + static_cast<std::size_t>(n[0]) * (pg + 1);
        const double* v1 = d > 1 ? tabs[1].val.data() + static_cast<std::size_t>(n[1]) * (pg + 1) : nullptr;
        const double* d1 = d > 1 ? tabs[1].der.data() + static_cast<std::size_t>(n[1]) * (pg + 1) : nullptr;
        const double* v2 = d > 2 ? tabs[2].val.data() + static_cast<std::size_t>(n[2]) * (pg + 1) : nullptr;
        const double* d2 = d > 2 ? tabs[2].der.data() + static_cast<std::size_t>(n[2]) * (pg + 1) : nullptr;
        for (int k2 = 0; k2 <= e2; ++k2)
            for (int k1 = 0; k1 <= e1; ++k1)
                for (int k0 = 0; k0 <= pg; ++k0) {
                    const std::int64_t cpj =
                        (tabs[0].first[n[0]] + k0) +
                        static_cast<std::int64_t>(m[0]) *
                            ((d > 1 ? tabs[1].first[n[1]] + k1 : 0) +
                             static_cast<std::int64_t>(m[1]) *
                                 (d > 2 ? tabs[2].first[n[2]] + k2 : 0));
                    const double b1 = d > 1 ? v1[k1] : 1.0, b2 = d > 2 ? v2[k2] : 1.0;
                    const double b = v0[k0] * b1 * b2;
                    const std::array<double, 3> gr = {
                        d0[k0] * b1 * b2, d > 1 ? v0[k0] * d1[k1] * b2 : 0.0,
                        d > 2 ? v0[k0] * b1 * d2[k2] : 0.0};
                    for (int c = 0; c < d; ++c) {
                        const double xc = patch.cp[static_cast<std::size_t>(cpj) * d + c];
                        x[c] += b * xc;
                        for (int k = 0; k < d; ++k) J[k][c] += gr[k] * xc;
                    }
                }
        if (points)
            for (int c = 0; c < d; ++c) (*points)[static_cast<std::size_t>(idx) * d + c] = x[c];
        if (dets) (*dets)[idx] = det_of(J, d);
    });
}

WeightField finish(WeightField wf) {
    wf.min_sample = wf.w.empty() ? 0.0 : *std::min_element(wf.w.begin(), wf.w.end());
    wf.max_sample = wf.w.empty() ? 0.0 : *std::max_element(wf.w.begin(), wf.w.end());
    return wf;
}

}  // namespace

WeightField weight_constant(const QuadGrid& grid, double value) {
    WeightField wf;
    wf.kind = WeightField::Kind::constant;
    wf.w.assign(grid.num_nodes(), value);
    return finish(std::move(wf));
}

WeightField weight_from_geometry(const Patch& patch, const QuadGrid& grid) {
    WeightField wf;
    wf.kind = WeightField::Kind::jacobian;
    std::vector<double> dets;
    geometry_at_nodes(patch, grid, nullptr, &dets);
    if (patch.regular) {
        for (double v : dets)
            if (!(v > 0.0))
                throw std::runtime_error("weight_from_geometry: non-positive Jacobian on patch '" +
                                         patch.label + "' declared regular");
    }
    wf.w.resize(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) wf.w[i] = std::abs(dets[i]);
    return finish(std::move(wf));
}

WeightField weight_inverse_jacobian(const Patch& patch, const QuadGrid& grid) {
    if (!patch.regular)
        throw std::runtime_error("weight_inverse_jacobian: patch '" + patch.label +
                                 "' is not regular");
    WeightField wf;
    wf.kind = WeightField::Kind::inverse_jacobian;
    std::vector<double> dets;
    geometry_at_nodes(patch, grid, nullptr, &dets);
    wf.w.resize(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (!(dets[i] > 0.0))
            throw std::runtime_error("weight_inverse_jacobian: non-positive Jacobian on patch '" +
                                     patch.label + "'");
        wf.w[i] = 1.0 / dets[i];
    }
    return finish(std::move(wf));
}

WeightField weight_from_function(const QuadGrid& grid,
                                 const std::function<double(const std::array<double, 3>&)>& f) {
    WeightField wf;
    wf.kind = WeightField::Kind::function;
    wf.w.resize(grid.num_nodes());
    for_each_node(grid, [&](std::int64_t idx, const std::array<int, 3>& n) {
        std::array<double, 3> xi = {0, 0, 0};
        for (int k = 0; k < grid.d; ++k) xi[k] = grid.rules[k].nodes[n[k]];
        wf.w[idx] = f(xi);
    });
    return finish(std::move(wf));
}

std::vector<double> sample_points(const Patch& patch, const QuadGrid& grid) {
    std::vector<double> pts;
    geometry_at_nodes(patch, grid, &pts, nullptr);
    return pts;
}

}  // namespace igm
