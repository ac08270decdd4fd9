#include "hyres/sampling/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace hyres {

std::size_t PointSet::boundary_count() const {
  std::size_t n = 0;
  for (const auto& p : boundary) n += p.points.rows();
  return n;
}

namespace {

Array stack_rows(const std::vector<const Array*>& parts, std::size_t cols) {
  std::size_t n = 0;
  for (const Array* a : parts) n += a->rows();
  Array out(n, cols);
  std::size_t r = 0;
  for (const Array* a : parts) {
    std::copy(a->data().begin(), a->data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
    r += a->rows();
  }
  return out;
}

}  // namespace

Array PointSet::boundary_points() const {
  std::vector<const Array*> parts;
  for (const auto& p : boundary) parts.push_back(&p.points);
  return stack_rows(parts, interior.cols());
}

Array PointSet::boundary_normals() const {
  std::vector<const Array*> parts;
  for (const auto& p : boundary) parts.push_back(&p.normals);
  return stack_rows(parts, interior.cols());
}

double poisson_radius(double volume, std::size_t dim, std::size_t count) {
  if (count == 0) throw std::invalid_argument("poisson_radius: count must be positive");
  // Volume per point at unit spacing: densest lattice cell inflated by 4/3,
  // since random sequential packing saturates below lattice density.
  double cell = 4.0 / 3.0;
  if (dim == 2) cell = 2.0 / std::sqrt(3.0);
  if (dim == 3) cell = 4.0 / (3.0 * std::sqrt(2.0));
  return std::pow(volume / (static_cast<double>(count) * cell), 1.0 / static_cast<double>(dim));
}

namespace {

double sqdist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

/// Uniform-cell hash grid over a bounding box, cell edge = radius.
class Grid {
 public:
  Grid(const std::vector<double>& lo, const std::vector<double>& hi, double cell)
      : lo_(lo), cell_(cell), dims_(lo.size()) {
    for (std::size_t k = 0; k < lo.size(); ++k)
      dims_[k] = static_cast<std::int64_t>(std::ceil((hi[k] - lo[k]) / cell)) + 1;
  }

  std::int64_t key(const double* p, std::vector<std::int64_t>& idx) const {
    std::int64_t key = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      idx[k] = std::clamp(static_cast<std::int64_t>((p[k] - lo_[k]) / cell_), std::int64_t{0}, dims_[k] - 1);
      key = key * dims_[k] + idx[k];
    }
    return key;
  }

  void insert(const double* p, std::size_t id) {
    std::vector<std::int64_t> idx(dims_.size());
    cells_[key(p, idx)].push_back(id);
  }

  template <typename F>
  bool any_neighbor(const double* p, F&& pred) const {
    const std::size_t d = dims_.size();
    std::vector<std::int64_t> idx(d), off(d, -1);
    key(p, idx);
    while (true) {
      std::int64_t key = 0;
      bool inside = true;
      for (std::size_t k = 0; k < d; ++k) {
        const std::int64_t c = idx[k] + off[k];
        if (c < 0 || c >= dims_[k]) inside = false;
        key = key * dims_[k] + c;
      }
      if (inside) {
        auto it = cells_.find(key);
        if (it != cells_.end())
          for (std::size_t id : it->second)
            if (pred(id)) return true;
      }
      std::size_t k = 0;
      while (k < d && off[k] == 1) off[k++] = -1;
      if (k == d) return false;
      ++off[k];
    }
  }

 private:
  std::vector<double> lo_;
  double cell_;
  std::vector<std::int64_t> dims_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

template <typename Inside>
PoissonDiskResult dart_throw(const std::vector<double>& lo, const std::vector<double>& hi, double volume,
                             std::size_t count, std::uint64_t seed, Inside&& inside) {
  if (count == 0) throw std::invalid_argument("poisson_disk: target count must be at least 1");
  const std::size_t d = lo.size();
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  PoissonDiskResult res;
  res.initial_radius = poisson_radius(volume, d, count);
  double r = res.initial_radius;
  const bool use_grid = d <= 3;
  const std::size_t max_failures = std::max<std::size_t>(2000, 40 * count);

  std::vector<double> pts;
  pts.reserve(count * d);
  std::vector<double> cand(d);
  auto build_grid = [&] {
    Grid g(lo, hi, r);
    for (std::size_t i = 0; i * d < pts.size(); ++i) g.insert(&pts[i * d], i);
    return g;
  };
  Grid grid = use_grid ? build_grid() : Grid(lo, hi, 1.0);

  std::size_t failures = 0;
  while (pts.size() < count * d) {
    for (std::size_t k = 0; k < d; ++k) cand[k] = lo[k] + unif(rng) * (hi[k] - lo[k]);
    if (!inside(cand)) continue;
    const double r2 = r * r;
    auto too_close = [&](std::size_t id) { return sqdist(&pts[id * d], cand.data(), d) < r2; };
    bool reject = false;
    if (use_grid) {
      reject = grid.any_neighbor(cand.data(), too_close);
    } else {
      for (std::size_t i = 0; i * d < pts.size() && !reject; ++i) reject = too_close(i);
    }
    if (!reject) {
      if (use_grid) grid.insert(cand.data(), pts.size() / d);
      pts.insert(pts.end(), cand.begin(), cand.end());
      failures = 0;
      continue;
    }
    if (++failures < max_failures) continue;
    r *= 0.95;
    failures = 0;
    if (r < 1e-3 * res.initial_radius)
      throw std::runtime_error("poisson_disk: cannot place " + std::to_string(count) + " points (placed " +
                               std::to_string(pts.size() / d) + ")");
    if (use_grid) grid = build_grid();
  }

  res.points = Array(count, d, std::move(pts));
  // Realized bound: the minimum pairwise distance of the emitted set.
  double best = std::numeric_limits<double>::infinity();
  const double* p = res.points.ptr();
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i + 1; j < count; ++j) best = std::min(best, sqdist(p + i * d, p + j * d, d));
  res.radius = count == 1 ? r : std::sqrt(best);
  return res;
}

}  // namespace

PoissonDiskResult poisson_disk_points(const Domain& domain, std::size_t count, std::uint64_t seed) {
  return dart_throw(domain.lo(), domain.hi(), domain.volume(), count, seed,
                    [&](const std::vector<double>& p) { return domain.contains(p); });
}

PoissonDiskResult poisson_disk_cube(std::size_t dim, std::size_t count, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("poisson_disk_cube: dimension must be positive");
  std::vector<double> lo(dim, -1.0), hi(dim, 1.0);
  return dart_throw(lo, hi, std::pow(2.0, static_cast<double>(dim)), count, seed,
                    [](const std::vector<double>&) { return true; });
}

std::vector<BoundaryPart> boundary_points(const Domain& domain, std::size_t count, Rng& rng) {
  const auto& faces = domain.faces();
  const std::size_t d = domain.dim();
  double total = 0.0;
  for (const auto& f : faces) total += f.measure;

  // Largest-remainder allotment so the parts sum to `count`.
  std::vector<std::size_t> alloc(faces.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const double share = static_cast<double>(count) * faces[i].measure / total;
    alloc[i] = static_cast<std::size_t>(std::floor(share));
    used += alloc[i];
    rem.emplace_back(-(share - std::floor(share)), i);
  }
  std::sort(rem.begin(), rem.end());
  for (std::size_t i = 0; used < count; ++i, ++used) ++alloc[rem[i % rem.size()].second];

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<BoundaryPart> parts;
  std::vector<double> uv(domain.face_param_dim());
  for (std::size_t i = 0; i < faces.size(); ++i) {
    BoundaryPart part{faces[i].name, Array(alloc[i], d), Array(alloc[i], d)};
    for (std::size_t n = 0; n < alloc[i]; ++n) {
      for (double& u : uv) u = unif(rng);
      const auto p = domain.face_point(i, uv);
      const auto nv = domain.normal(i, p);
      for (std::size_t k = 0; k < d; ++k) {
        part.points(n, k) = p[k];
        part.normals(n, k) = nv[k];
      }
    }
    parts.push_back(std::move(part));
  }
  return parts;
}

namespace {

Array initial_points(const Domain& domain, std::size_t count, Rng& rng) {
  if (domain.kind() != DomainKind::IntervalTimeSlab)
    throw std::invalid_argument("initial points requested for a domain without a time axis");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Array out(count, 2);
  for (std::size_t n = 0; n < count; ++n) {
    out(n, 0) = domain.lo()[0];
    out(n, 1) = domain.lo()[1] + unif(rng) * (domain.hi()[1] - domain.lo()[1]);
  }
  return out;
}

}  // namespace

PointSet poisson_disk(const Domain& domain, const SampleCounts& counts, std::uint64_t seed) {
  PointSet set;
  set.seed = seed;
  set.interior = poisson_disk_points(domain, counts.interior, seed).points;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  if (counts.boundary > 0) set.boundary = boundary_points(domain, counts.boundary, rng);
  if (counts.initial > 0) set.initial = initial_points(domain, counts.initial, rng);
  return set;
}

PointSet minibatch(const Domain& domain, const SampleCounts& counts, Rng& rng) {
  if (counts.interior == 0 && counts.boundary == 0 && counts.initial == 0)
    throw std::invalid_argument("minibatch: all counts are zero");
  const std::size_t d = domain.dim();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PointSet set;
  set.interior = Array(counts.interior, d);
  std::vector<double> p(d);
  for (std::size_t n = 0; n < counts.interior;) {
    for (std::size_t k = 0; k < d; ++k) p[k] = domain.lo()[k] + unif(rng) * (domain.hi()[k] - domain.lo()[k]);
    if (!domain.contains(p)) continue;
    for (std::size_t k = 0; k < d; ++k) set.interior(n, k) = p[k];
    ++n;
  }
  if (counts.boundary > 0) set.boundary = boundary_points(domain, counts.boundary, rng);
  if (counts.initial > 0) set.initial = initial_points(domain, counts.initial, rng);
  return set;
}

namespace {

double lerp_node(double a, double b, std::size_t i, std::size_t n) {
  return a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

Array eval_grid(const Domain& domain, const std::vector<std::size_t>& res) {
  const std::size_t d = domain.dim();
  if (res.size() != d) throw std::invalid_argument("eval_grid: need one resolution per axis");
  for (std::size_t n : res)
    if (n < 2) throw std::invalid_argument("eval_grid: resolution must be at least 2 per axis");
  std::size_t total = 1;
  for (std::size_t n : res) total *= n;
  const bool annular = domain.kind() == DomainKind::Annulus2d || domain.kind() == DomainKind::ExtrudedAnnulus3d;
  const double r0 = annular ? domain.inner_radius() : 0.0, r1 = annular ? domain.outer_radius() : 0.0;
  std::vector<double> flat;
  flat.reserve(total * d);
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> p(d);
  for (std::size_t row = 0; row < total; ++row) {
    for (std::size_t k = 0; k < d; ++k) p[k] = lerp_node(domain.lo()[k], domain.hi()[k], idx[k], res[k]);
    const double r = annular ? std::hypot(p[0], p[1]) : 0.0;
    if (!annular || (r >= r0 && r <= r1)) flat.insert(flat.end(), p.begin(), p.end());
    for (std::size_t k = d; k-- > 0;) {
      if (++idx[k] < res[k]) break;
      idx[k] = 0;
    }
  }
  Array out(flat.size() / d, d);
  std::copy(flat.begin(), flat.end(), out.ptr());
  return out;
}

void write_csv(const PointSet& set, std::ostream& os) {
  const std::size_t d = set.interior.cols();
  os << "# parts: interior";
  for (const auto& p : set.boundary) os << "," << p.label;
  if (set.initial) os << ",initial";
  os << "\npart";
  for (std::size_t k = 0; k < d; ++k) os << ",x" << k;
  for (std::size_t k = 0; k < d; ++k) os << ",n" << k;
  os << "\n";
  os.precision(17);
  auto emit = [&](const std::string& label, const Array& pts, const Array* normals) {
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      os << label;
      for (std::size_t k = 0; k < d; ++k) os << "," << pts(i, k);
      for (std::size_t k = 0; k < d; ++k) {
        os << ",";
        if (normals) os << (*normals)(i, k);
      }
      os << "\n";
    }
  };
  emit("interior", set.interior, nullptr);
  for (const auto& p : set.boundary) emit(p.label, p.points, &p.normals);
  if (set.initial) emit("initial", *set.initial, nullptr);
}

}  // namespace hyres
