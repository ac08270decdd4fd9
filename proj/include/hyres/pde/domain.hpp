#pragma once
// Geometric domains: membership, volume, boundary faces and outward normals.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hyres {

enum class DomainKind { IntervalTimeSlab, Box, Annulus2d, ExtrudedAnnulus3d };

std::string to_string(DomainKind k);

/// One geometric piece of the boundary. Problems map faces to Dirichlet or
/// Neumann parts.
struct Face {
  std::string name;
  double measure = 0.0;  // length or area
};

class Domain {
 public:
  /// (t, x) in [t0, t1] x [x0, x1]. The x ends are its boundary faces.
  static Domain time_slab(double t0, double t1, double x0, double x1);
  static Domain box(std::vector<double> lo, std::vector<double> hi);
  static Domain annulus(double inner, double outer);
  static Domain extruded_annulus(double inner, double outer, double z0, double z1);

  DomainKind kind() const { return kind_; }
  std::size_t dim() const { return lo_.size(); }
  /// Axis-aligned bounding box.
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  double inner_radius() const { return inner_; }
  double outer_radius() const { return outer_; }

  /// Strict interior membership.
  bool contains(std::span<const double> p) const;
  double volume() const;
  const std::vector<Face>& faces() const { return faces_; }

  /// Face containing p (within tol); exactly one index, edges resolved by
  /// face order. Throws if p is not on the boundary.
  std::size_t classify(std::span<const double> p, double tol = 1e-9) const;
  /// Outward unit normal of face `face` at p.
  std::vector<double> normal(std::size_t face, std::span<const double> p) const;
  /// Maps two uniform numbers in [0, 1) (plus a third for 3D faces) to a point
  /// on face `face`, area-uniformly.
  std::vector<double> face_point(std::size_t face, std::span<const double> uv) const;
  /// Number of parameters face_point consumes.
  std::size_t face_param_dim() const { return dim() - 1; }

 private:
  DomainKind kind_ = DomainKind::Box;
  std::vector<double> lo_, hi_;
  double inner_ = 0.0, outer_ = 0.0;
  std::vector<Face> faces_;
};

}  // namespace hyres
