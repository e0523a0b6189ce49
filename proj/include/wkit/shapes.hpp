#pragma once

#include <functional>

#include "wkit/grid.hpp"

namespace wkit {

// All closed-surface atlases use outward Gauss maps, so the unit sphere
// carries H = -1. res = nodes per axis.

// two stereographic charts, partition of unity in the chart radius
Atlas make_sphere2(int res, double radius = 1.0,
                   const std::array<double, 3>& center = {0.0, 0.0, 0.0});
Atlas make_ellipsoid2(int res, double a, double b, double c);
// same construction one dimension up: S^4 in R^5
Atlas make_sphere4(int res, double radius = 1.0);
Atlas make_ellipsoid4(int res, double a);

Atlas make_torus(int res, double R = std::sqrt(2.0), double r = 1.0);

// latitude x longitude chart wrapping the sphere twice (both angles full
// period, nodes offset half a step so the degenerate circles are missed)
Atlas make_sphere2_double_cover(int res);

// z = f(x,y) over the periodic unit square, affine background (x, y, 0).
// seed == 0 picks a fixed three-mode profile; otherwise modes are drawn
Atlas make_graph2(int res, double amp, uint64_t seed = 0);
// height given explicitly (flow uses this)
Atlas make_graph2_from_height(int res, const std::vector<double>& u);
Atlas make_graph4(int res, double amp, uint64_t seed = 0);
// periodic unit-box graph in R^5 with a caller-supplied height x -> u(x)
Atlas make_graph4_from_height(int res, const std::function<double(const double*)>& u);

Atlas make_catenoid_patch(int res, double half_width = 0.6);
Atlas make_inverted_catenoid_patch(int res, double half_width = 0.6);

// Enneper window centered at (0.7, 0) so the inverted patch stays away from
// the inversion center (the only zero of the immersion sits at the origin)
Atlas make_enneper_patch(int res, double half_width = 0.4);
Atlas make_inverted_enneper_patch(int res, double half_width = 0.4);

// S^2(r) x R^2 patch in R^5 = R^3 x R^2
Atlas make_product_patch(int res, double r = 1.0);

// flat disk of radius R in the z = 0 plane, polar chart, radial nodes offset
// half a step from the axis
Atlas make_disk_polar(int res, double R = 1.0);

// z = f(x,y) over the NON-periodic unit square: a simply connected patch with
// boundary, the natural input for frame and coordinate constructions. Same
// mode draw as make_graph2.
Atlas make_graph_patch(int res, double amp, uint64_t seed = 0);
Atlas make_graph_patch_from_height(int res,
                                   const std::function<double(double, double)>& u);

// seeded graph patch with its amplitude shrunk until the measured total
// curvature int |K| dvol sits below 0.9 * kmax
Atlas make_small_curvature_patch(int res, uint64_t seed, double kmax);

struct ShapeParams {
  double radius = 1.0;
  double a = 2.0, b = 1.0, c = 1.0;
  double big_R = std::sqrt(2.0), small_r = 1.0;
  double amp = 0.05;
  uint64_t seed = 0;
};
// name-keyed factory for the CLI: sphere2, ellipsoid2, sphere4, ellipsoid4,
// torus_revolution, sphere2_double_cover, graph2, graph4, catenoid_patch,
// inverted_catenoid_patch, enneper_patch, inverted_enneper_patch,
// product_patch, disk_polar, graph_patch
Atlas make_shape(const std::string& kind, int res, const ShapeParams& P = {});

}  // namespace wkit
