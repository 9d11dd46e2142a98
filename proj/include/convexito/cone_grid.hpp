#pragma once

#include "convexito/execution.hpp"
#include "convexito/linalg.hpp"

#include <cstdint>
#include <vector>

namespace cvx {

/// Partition of R^d (d = 2, 3) into narrow convex cones.
///
/// d = 2: N equal sectors anchored at angle 0; cone k spans the edge rays at
/// angles 2 pi k / N and 2 pi (k + 1) / N.
/// d = 3: a polar/azimuth grid of `bands` x `sectors` cells. Cone (i, j) is
/// the convex hull of the rays through the four grid corners, so its
/// boundary is made of great-circle arcs; the two polar rings have a
/// repeated pole corner. Index = i * sectors + j.
struct ConeGrid {
  int d = 2;
  double epsilon = 0.0;
  std::vector<Vec> edge_directions;
  /// 2^{d-1} edge indices per cone, in cyclic order.
  std::vector<std::vector<int>> cones;
  int bands = 0;
  int sectors = 0;
  /// Exact area (arc length for d = 2) of each cone's trace on the unit sphere.
  std::vector<double> cell_area;

  struct Simplex {
    std::vector<int> slots;  ///< positions within cones[i]
    Mat inverse;             ///< inverse of the matrix whose columns are the slot edges
  };
  /// Cones split into simplicial cones (one for d = 2, two for d = 3).
  std::vector<std::vector<Simplex>> simplices;

  int N() const { return static_cast<int>(cones.size()); }
  double max_cell_area() const;
};

/// Builds the coarsest uniform grid whose cells all have area <= epsilon.
/// Requires d in {2, 3} and 0 < epsilon < 1; rejects grids with more than 1e6 cones.
ConeGrid build_grid(int d, double epsilon);

/// Index of the cone containing y (y != 0). A direction on a shared boundary
/// goes to the lowest adjacent index.
int locate_cone(const ConeGrid& grid, const Vec& y);

/// T_j(y) = (|y|^2 / <e_j, y>) e_j for each edge ray e_j of cone i.
std::vector<Vec> tangent_projections(const ConeGrid& grid, int i, const Vec& y);

/// Nonnegative weights with sum_j alpha_j T_j(y) = y and sum alpha_j = 1.
/// Throws GeometryError if y is not in cone i.
std::vector<double> barycentric_weights(const ConeGrid& grid, int i, const Vec& y);

struct DistortionBound {
  /// max over sampled unit y and edges of |T_j(y)| - 1.
  double norm_part = 0.0;
  /// max of |<Q T, T> - <Q y, y>| / <Q y, y>.
  double quad_part = 0.0;
  /// max of both parts, inflated by 1%.
  double a = 0.0;
};

/// Samples `per_cone` directions in every cone plus its corners and centre.
/// Q must satisfy Q >= I (shift f by |x|^2 / 2 beforehand).
DistortionBound distortion_bound(const ConeGrid& grid, const Mat& Q, int per_cone = 1000);

struct CapArea {
  double area = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo area of every cone's trace on the unit sphere from n uniform directions.
std::vector<CapArea> cap_area_estimate(const ConeGrid& grid, std::int64_t n, std::uint64_t seed,
                                       Execution exec = Execution::parallel);

}  // namespace cvx
