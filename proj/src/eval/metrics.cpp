#include "hyres/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hyres {

namespace {

constexpr std::size_t kChunk = 2048;

Array take_rows(const Array& a, const std::vector<std::size_t>& rows) {
  Array out(rows.size(), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(a.ptr() + rows[i] * a.cols(), a.ptr() + (rows[i] + 1) * a.cols(), out.ptr() + i * a.cols());
  return out;
}

Array column(const Array& a, std::size_t c) {
  Array out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = a(i, c);
  return out;
}

}  // namespace

double relative_l2(const Array& pred, const Array& truth) {
  if (pred.size() != truth.size())
    throw ShapeError("relative_l2: prediction " + to_string(pred.shape()) + " vs truth " + to_string(truth.shape()));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = pred[i] - truth[i];
    num += d * d;
    den += truth[i] * truth[i];
  }
  if (den == 0.0) throw std::invalid_argument("relative_l2: truth has zero norm");
  return std::sqrt(num / den);
}

Field model_field(const Model& model) {
  return [&model](const Var& x) {
    BoundParams bp(model.params(), x.tape(), false);
    return model.forward(bp, x);
  };
}

std::vector<std::size_t> flux_rows(const PdeProblem& problem, const Array& grid) {
  std::vector<double> ifs;
  if (const auto* mu = problem.coefficient()) ifs = mu->interfaces();
  std::vector<std::size_t> rows;
  rows.reserve(grid.rows());
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    bool keep = true;
    for (double y : ifs)
      if (std::abs(grid(i, 1) - y) <= 2 * kInterfaceOffset) keep = false;
    if (keep) rows.push_back(i);
  }
  return rows;
}

Array field_flux(const Field& u, const PdeProblem& problem, const Array& grid) {
  const std::size_t d = grid.cols();
  Array out(grid.rows(), d);
  for (std::size_t r0 = 0; r0 < grid.rows(); r0 += kChunk) {
    const std::size_t r1 = std::min(grid.rows(), r0 + kChunk);
    Array chunk(r1 - r0, d);
    std::copy(grid.ptr() + r0 * d, grid.ptr() + r1 * d, chunk.ptr());
    Tape tape;
    const Array q = problem.flux(u, tape.variable(chunk)).value();
    std::copy(q.ptr(), q.ptr() + q.size(), out.ptr() + r0 * d);
  }
  return out;
}

std::vector<std::optional<double>> flux_error(const Field& u, const PdeProblem& problem, const Array& grid) {
  const Array pts = take_rows(grid, flux_rows(problem, grid));
  const Array pred = field_flux(u, problem, pts);
  const Array truth = problem.exact_flux(pts);
  std::vector<std::optional<double>> out;
  for (std::size_t c = 0; c < pts.cols(); ++c) {
    const Array t = column(truth, c);
    const bool zero = std::all_of(t.data().begin(), t.data().end(), [](double v) { return v == 0.0; });
    out.push_back(zero ? std::nullopt : std::optional<double>(relative_l2(column(pred, c), t)));
  }
  return out;
}

std::vector<InterfaceJump> interface_jump(const Field& u, const PdeProblem& problem, std::size_t n, double offset) {
  const auto* mu = problem.coefficient();
  if (!mu || mu->kind() != CoefficientKind::FiveStrip)
    throw std::invalid_argument("interface_jump: " + problem.id() + " has no strip interfaces");
  if (n == 0) throw std::invalid_argument("interface_jump: need at least one sample");
  std::vector<InterfaceJump> out;
  for (double y : mu->interfaces()) {
    Array pts(2 * n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      pts(2 * i, 0) = x, pts(2 * i, 1) = y - offset;
      pts(2 * i + 1, 0) = x, pts(2 * i + 1, 1) = y + offset;
    }
    const Array q = field_flux(u, problem, pts);
    InterfaceJump j;
    j.y = y;
    for (std::size_t i = 0; i < n; ++i) {
      const double dn = q(2 * i + 1, 1) - q(2 * i, 1);
      const double dt = q(2 * i + 1, 0) - q(2 * i, 0);
      j.normal += std::abs(dn);
      j.tangential += std::abs(dt);
      j.normal_signed += dn;
      j.tangential_signed += dt;
    }
    const double s = 1.0 / static_cast<double>(n);
    j.normal *= s, j.tangential *= s, j.normal_signed *= s, j.tangential_signed *= s;
    out.push_back(j);
  }
  return out;
}

Scorer Scorer::for_problem(const PdeProblem& problem, std::optional<OracleSettings> oracle) {
  Scorer s;
  s.problem_ = &problem;
  if (problem.has_exact_solution()) {
    s.grid_ = eval_grid(problem.domain(), problem.eval_resolution());
    s.truth_ = problem.exact_solution(s.grid_);
    s.flux_grid_ = take_rows(s.grid_, flux_rows(problem, s.grid_));
    s.flux_truth_ = column(problem.exact_flux(s.flux_grid_), 0);
    return s;
  }
  const OracleSettings settings = oracle ? *oracle : default_oracle_settings(problem.id());
  const SpectralSolution sol = cached_oracle(problem.id(), settings);
  const std::size_t nx = problem.eval_resolution().at(1);
  const std::size_t stride = std::max<std::size_t>(1, sol.x.size() / nx);
  std::vector<std::size_t> slices;
  if (problem.id() == "ks-chaotic") s.horizon_ = 0.5 * sol.t.back();
  for (std::size_t k = 0; k < sol.t.size(); ++k)
    if (!s.horizon_ || sol.t[k] <= *s.horizon_ + 1e-12) slices.push_back(k);
  const std::size_t cols = sol.x.size() / stride;
  s.grid_ = Array(slices.size() * cols, 2);
  s.truth_ = Array(slices.size() * cols, 1);
  std::size_t r = 0;
  for (std::size_t k : slices)
    for (std::size_t j = 0; j < cols; ++j, ++r) {
      s.grid_(r, 0) = sol.t[k];
      s.grid_(r, 1) = sol.x[j * stride];
      s.truth_[r] = sol.field(k, j * stride);
    }
  return s;
}

Score Scorer::score(const Model& model) const { return score(model_field(model), model.predict(grid_)); }

Score Scorer::score(const Field& u, const Array& prediction) const {
  Score out;
  out.rel_l2 = relative_l2(prediction, truth_);
  if (flux_truth_) out.flux_x = relative_l2(column(field_flux(u, *problem_, flux_grid_), 0), *flux_truth_);
  return out;
}

std::string config_hash(const nlohmann::json& config) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(config.dump());
  return os.str();
}

std::string to_string(StudyAxis a) {
  switch (a) {
    case StudyAxis::Depth: return "depth";
    case StudyAxis::Collocation: return "collocation-count";
    case StudyAxis::Iteration: return "iteration";
    case StudyAxis::WallClock: return "wall-clock";
  }
  return "";
}

StudyAxis study_axis_from_string(const std::string& s) {
  for (StudyAxis a : {StudyAxis::Depth, StudyAxis::Collocation, StudyAxis::Iteration, StudyAxis::WallClock})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown study axis '" + s + "' (depth, collocation-count, iteration, wall-clock)");
}

StudyTable aggregate_study(const std::vector<MetricRecord>& records, StudyAxis axis) {
  if (records.empty()) throw std::invalid_argument("aggregate_study: no records");
  StudyTable table;
  table.problem_id = records.front().problem_id;
  table.axis = axis;
  struct Acc {
    std::vector<double> axis, err, flux;
  };
  std::map<std::pair<std::string, double>, Acc> groups;
  for (const auto& r : records) {
    if (r.problem_id != table.problem_id)
      throw std::invalid_argument("aggregate_study: mixed problem ids '" + table.problem_id + "' and '" +
                                  r.problem_id + "'");
    double key = 0.0, value = 0.0;
    switch (axis) {
      case StudyAxis::Depth: key = value = static_cast<double>(r.depth); break;
      case StudyAxis::Collocation: key = value = static_cast<double>(r.collocation); break;
      case StudyAxis::Iteration: key = value = static_cast<double>(r.steps); break;
      case StudyAxis::WallClock:
        key = static_cast<double>(r.steps);
        value = r.wall_clock;
        break;
    }
    auto& g = groups[{r.model_kind, key}];
    g.axis.push_back(value);
    g.err.push_back(r.rel_l2);
    if (r.flux_x) g.flux.push_back(*r.flux_x);
  }
  // Sorted summation keeps the means independent of record order.
  auto mean = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  for (const auto& [k, g] : groups) {
    StudyRow row;
    row.model_kind = k.first;
    row.axis_value = mean(g.axis);
    row.mean_rel_l2 = mean(g.err);
    if (g.flux.size() == g.err.size()) row.mean_flux_x = mean(g.flux);
    row.count = g.err.size();
    table.rows.push_back(row);
  }
  return table;
}

void write_study_csv(const StudyTable& table, std::ostream& os) {
  os << "# study problem=" << table.problem_id << " axis=" << to_string(table.axis)
     << " columns: model kind, axis value, mean rel-L2 over seeds, mean flux-x rel-L2 (blank if absent), seed count\n";
  os << "model_kind," << to_string(table.axis) << ",rel_l2,flux_x_rel_l2,seeds\n";
  os.precision(10);
  for (const auto& r : table.rows) {
    os << r.model_kind << "," << r.axis_value << "," << r.mean_rel_l2 << ",";
    if (r.mean_flux_x) os << *r.mean_flux_x;
    os << "," << r.count << "\n";
  }
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length series of 2+");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i], my += ry[i];
  mx /= n, my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace hyres
