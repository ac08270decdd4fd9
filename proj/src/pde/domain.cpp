#include "hyres/pde/domain.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hyres {

std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::IntervalTimeSlab: return "interval-time-slab";
    case DomainKind::Box: return "box";
    case DomainKind::Annulus2d: return "annulus2d";
    case DomainKind::ExtrudedAnnulus3d: return "extruded-annulus3d";
  }
  return "?";
}

Domain Domain::time_slab(double t0, double t1, double x0, double x1) {
  if (!(t1 > t0) || !(x1 > x0)) throw std::invalid_argument("time_slab: empty interval");
  Domain d;
  d.kind_ = DomainKind::IntervalTimeSlab;
  d.lo_ = {t0, x0};
  d.hi_ = {t1, x1};
  d.faces_ = {{"x_lo", t1 - t0}, {"x_hi", t1 - t0}};
  return d;
}

Domain Domain::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size() || lo.empty()) throw std::invalid_argument("box: bounds disagree");
  Domain d;
  d.kind_ = DomainKind::Box;
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (!(hi[k] > lo[k])) throw std::invalid_argument("box: empty extent");
  d.lo_ = std::move(lo);
  d.hi_ = std::move(hi);
  for (std::size_t k = 0; k < d.dim(); ++k) {
    double m = 1.0;
    for (std::size_t j = 0; j < d.dim(); ++j)
      if (j != k) m *= d.hi_[j] - d.lo_[j];
    d.faces_.push_back({"lo" + std::to_string(k), m});
    d.faces_.push_back({"hi" + std::to_string(k), m});
  }
  return d;
}

Domain Domain::annulus(double inner, double outer) {
  if (!(inner > 0.0) || !(inner < outer)) throw std::invalid_argument("annulus: need 0 < inner < outer");
  Domain d;
  d.kind_ = DomainKind::Annulus2d;
  d.inner_ = inner;
  d.outer_ = outer;
  d.lo_ = {-outer, -outer};
  d.hi_ = {outer, outer};
  d.faces_ = {{"inner", 2 * std::numbers::pi * inner}, {"outer", 2 * std::numbers::pi * outer}};
  return d;
}

Domain Domain::extruded_annulus(double inner, double outer, double z0, double z1) {
  if (!(inner > 0.0) || !(inner < outer)) throw std::invalid_argument("extruded_annulus: need 0 < inner < outer");
  if (!(z1 > z0)) throw std::invalid_argument("extruded_annulus: empty height");
  Domain d;
  d.kind_ = DomainKind::ExtrudedAnnulus3d;
  d.inner_ = inner;
  d.outer_ = outer;
  d.lo_ = {-outer, -outer, z0};
  d.hi_ = {outer, outer, z1};
  const double h = z1 - z0;
  const double cap = std::numbers::pi * (outer * outer - inner * inner);
  d.faces_ = {{"inner", 2 * std::numbers::pi * inner * h},
              {"outer", 2 * std::numbers::pi * outer * h},
              {"bottom", cap},
              {"top", cap}};
  return d;
}

bool Domain::contains(std::span<const double> p) const {
  if (p.size() != dim()) throw std::invalid_argument("contains: point dimension mismatch");
  for (std::size_t k = 0; k < dim(); ++k)
    if (!(p[k] > lo_[k] && p[k] < hi_[k])) return false;
  if (kind_ == DomainKind::Annulus2d || kind_ == DomainKind::ExtrudedAnnulus3d) {
    const double r = std::hypot(p[0], p[1]);
    return r > inner_ && r < outer_;
  }
  return true;
}

double Domain::volume() const {
  switch (kind_) {
    case DomainKind::Annulus2d: return std::numbers::pi * (outer_ * outer_ - inner_ * inner_);
    case DomainKind::ExtrudedAnnulus3d:
      return std::numbers::pi * (outer_ * outer_ - inner_ * inner_) * (hi_[2] - lo_[2]);
    default: {
      double v = 1.0;
      for (std::size_t k = 0; k < dim(); ++k) v *= hi_[k] - lo_[k];
      return v;
    }
  }
}

std::size_t Domain::classify(std::span<const double> p, double tol) const {
  if (p.size() != dim()) throw std::invalid_argument("classify: point dimension mismatch");
  switch (kind_) {
    case DomainKind::IntervalTimeSlab:
      if (std::abs(p[1] - lo_[1]) <= tol) return 0;
      if (std::abs(p[1] - hi_[1]) <= tol) return 1;
      break;
    case DomainKind::Box:
      for (std::size_t k = 0; k < dim(); ++k) {
        if (std::abs(p[k] - lo_[k]) <= tol) return 2 * k;
        if (std::abs(p[k] - hi_[k]) <= tol) return 2 * k + 1;
      }
      break;
    case DomainKind::Annulus2d:
    case DomainKind::ExtrudedAnnulus3d: {
      const double r = std::hypot(p[0], p[1]);
      if (std::abs(r - inner_) <= tol) return 0;
      if (std::abs(r - outer_) <= tol) return 1;
      if (kind_ == DomainKind::ExtrudedAnnulus3d) {
        if (std::abs(p[2] - lo_[2]) <= tol) return 2;
        if (std::abs(p[2] - hi_[2]) <= tol) return 3;
      }
      break;
    }
  }
  throw std::invalid_argument("classify: point is not on the boundary");
}

std::vector<double> Domain::normal(std::size_t face, std::span<const double> p) const {
  std::vector<double> n(dim(), 0.0);
  switch (kind_) {
    case DomainKind::IntervalTimeSlab: n[1] = face == 0 ? -1.0 : 1.0; break;
    case DomainKind::Box: n[face / 2] = face % 2 == 0 ? -1.0 : 1.0; break;
    case DomainKind::Annulus2d:
    case DomainKind::ExtrudedAnnulus3d:
      if (face <= 1) {
        const double r = std::hypot(p[0], p[1]);
        const double sgn = face == 0 ? -1.0 : 1.0;
        n[0] = sgn * p[0] / r;
        n[1] = sgn * p[1] / r;
      } else {
        n[2] = face == 2 ? -1.0 : 1.0;
      }
      break;
  }
  return n;
}

std::vector<double> Domain::face_point(std::size_t face, std::span<const double> uv) const {
  if (face >= faces_.size()) throw std::out_of_range("face_point: face index");
  std::vector<double> p(dim());
  switch (kind_) {
    case DomainKind::IntervalTimeSlab:
      p[0] = lo_[0] + uv[0] * (hi_[0] - lo_[0]);
      p[1] = face == 0 ? lo_[1] : hi_[1];
      break;
    case DomainKind::Box: {
      const std::size_t axis = face / 2;
      std::size_t j = 0;
      for (std::size_t k = 0; k < dim(); ++k) {
        if (k == axis) p[k] = face % 2 == 0 ? lo_[k] : hi_[k];
        else {
          p[k] = lo_[k] + uv[j] * (hi_[k] - lo_[k]);
          ++j;
        }
      }
      break;
    }
    case DomainKind::Annulus2d:
    case DomainKind::ExtrudedAnnulus3d: {
      if (face <= 1) {
        const double r = face == 0 ? inner_ : outer_;
        const double th = 2 * std::numbers::pi * uv[0];
        p[0] = r * std::cos(th);
        p[1] = r * std::sin(th);
        if (dim() == 3) p[2] = lo_[2] + uv[1] * (hi_[2] - lo_[2]);
      } else {
        // Area-uniform radius on the cap.
        const double r2 = inner_ * inner_ + uv[0] * (outer_ * outer_ - inner_ * inner_);
        const double r = std::sqrt(r2);
        const double th = 2 * std::numbers::pi * uv[1];
        p[0] = r * std::cos(th);
        p[1] = r * std::sin(th);
        p[2] = face == 2 ? lo_[2] : hi_[2];
      }
      break;
    }
  }
  return p;
}

}  // namespace hyres
