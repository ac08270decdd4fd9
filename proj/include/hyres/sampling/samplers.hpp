#pragma once
// Collocation point generation: Poisson-disk static sets, uniform mini-batches,
// boundary and initial sets, evaluation grids.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hyres/autodiff/array.hpp"
#include "hyres/pde/domain.hpp"

namespace hyres {

using Rng = std::mt19937_64;

struct BoundaryPart {
  std::string label;
  Array points;   // N_b x d
  Array normals;  // N_b x d, outward unit
};

struct PointSet {
  Array interior;  // N_r x d
  std::vector<BoundaryPart> boundary;
  std::optional<Array> initial;  // N_ic x d, time-slab only
  std::uint64_t seed = 0;

  std::size_t boundary_count() const;
  /// All boundary points stacked in part order.
  Array boundary_points() const;
  Array boundary_normals() const;
};

struct SampleCounts {
  std::size_t interior = 0;
  std::size_t boundary = 0;
  std::size_t initial = 0;
};

struct PoissonDiskResult {
  Array points;
  double radius = 0.0;          // realized minimum-distance bound
  double initial_radius = 0.0;  // density-derived starting radius
};

/// Density-derived starting radius for `count` points in a region of the
/// given volume and dimension (hexagonal packing in 2D).
double poisson_radius(double volume, std::size_t dim, std::size_t count);

/// Dart throwing over the interior of `domain`. Returns exactly `count`
/// points with pairwise distance >= radius; the radius starts at
/// poisson_radius and shrinks when the domain saturates. Throws
/// std::runtime_error when the radius collapses without reaching the count.
PoissonDiskResult poisson_disk_points(const Domain& domain, std::size_t count, std::uint64_t seed);

/// Poisson-disk centers over the cube [-1, 1]^dim.
PoissonDiskResult poisson_disk_cube(std::size_t dim, std::size_t count, std::uint64_t seed);

/// Static set: Poisson-disk interior plus uniform boundary (and initial) points.
PointSet poisson_disk(const Domain& domain, const SampleCounts& counts, std::uint64_t seed);

/// Uniform i.i.d. batch. Boundary points are split across faces by measure.
PointSet minibatch(const Domain& domain, const SampleCounts& counts, Rng& rng);

/// Uniform points on the boundary, allotted to faces in proportion to measure.
std::vector<BoundaryPart> boundary_points(const Domain& domain, std::size_t count, Rng& rng);

/// Tensor-product grid over the bounding box with inclusive ends, one
/// resolution per axis; annular domains keep only the nodes inside the annulus.
Array eval_grid(const Domain& domain, const std::vector<std::size_t>& resolution);

/// One row per point: part label, coordinates, normals (empty for interior).
void write_csv(const PointSet& set, std::ostream& os);

}  // namespace hyres
