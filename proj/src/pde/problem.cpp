#include "hyres/pde/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hyres/autodiff/grad.hpp"

namespace hyres {

using nlohmann::json;

// ----- coefficient field -----

CoefficientField CoefficientField::constant(double v) {
  if (!(v > 0.0)) throw std::invalid_argument("coefficient must be positive");
  CoefficientField f;
  f.values_ = {v};
  return f;
}

CoefficientField CoefficientField::five_strip() {
  CoefficientField f;
  f.kind_ = CoefficientKind::FiveStrip;
  f.values_ = {16.0, 6.0, 1.0, 10.0, 2.0};
  return f;
}

std::vector<double> CoefficientField::interfaces() const {
  if (kind_ == CoefficientKind::Constant) return {};
  return {1.0 / 5.0, 2.0 / 5.0, 3.0 / 5.0, 4.0 / 5.0};
}

std::size_t CoefficientField::strip(double y) const {
  if (kind_ == CoefficientKind::Constant) return 0;
  std::size_t i = 0;
  for (double yi : interfaces()) {
    if (std::abs(y - yi) < 1e-12)
      throw std::invalid_argument("five-strip coefficient is undefined on the interface y = " + std::to_string(yi));
    if (y > yi) ++i;
  }
  return i;
}

Array CoefficientField::eval(const Array& pts) const {
  Array out(pts.rows(), 1, values_.front());
  if (kind_ == CoefficientKind::FiveStrip)
    for (std::size_t i = 0; i < pts.rows(); ++i) out[i] = values_[strip(pts(i, 1))];
  return out;
}

// ----- shared pieces -----

namespace {

Array map_rows(const Array& pts, const std::function<double(const double*)>& f) {
  Array out(pts.rows(), 1);
  for (std::size_t i = 0; i < pts.rows(); ++i) out[i] = f(pts.ptr() + i * pts.cols());
  return out;
}

/// Second derivative of u along column c, given g = input_gradient(u, x).
Var second(const Var& g, const Var& x, std::size_t c) { return jacobian_column(col(g, c), x, c); }

}  // namespace

std::vector<ResidualTerm> PdeProblem::boundary_residuals(const Field&, Tape&, const PointSet&) const { return {}; }

Var PdeProblem::initial_residual(const Field&, const Var&) const {
  throw std::logic_error(id_ + ": problem has no initial condition");
}

std::vector<ResidualTerm> PdeProblem::periodic_residuals(const Field& u, Tape& tape, const Array& ts) const {
  if (!time_dependent() || periodic_dims_.empty())
    throw std::logic_error(id_ + ": problem has no periodic direction");
  Array lo(ts.rows(), 2), hi(ts.rows(), 2);
  for (std::size_t i = 0; i < ts.rows(); ++i) {
    lo(i, 0) = hi(i, 0) = ts[i];
    lo(i, 1) = domain_.lo()[1];
    hi(i, 1) = domain_.hi()[1];
  }
  Var xl = tape.variable(std::move(lo)), xh = tape.variable(std::move(hi));
  Var ul = u(xl), uh = u(xh);
  return {{"periodic:u", ul - uh}, {"periodic:u_x", jacobian_column(ul, xl, 1) - jacobian_column(uh, xh, 1)}};
}

Array PdeProblem::exact_solution(const Array&) const {
  throw std::logic_error(id_ + ": no closed-form solution; evaluate the spectral oracle instead");
}

Array PdeProblem::exact_flux(const Array&) const { throw std::logic_error(id_ + ": no flux field"); }

Var PdeProblem::flux(const Field&, const Var&) const { throw std::logic_error(id_ + ": no flux field"); }

void PdeProblem::prepare_points(PointSet&) const {}

// ----- Allen-Cahn -----

AllenCahn::AllenCahn() : PdeProblem("allen-cahn", Domain::time_slab(0.0, 1.0, -1.0, 1.0)) {
  periodic_dims_ = {1};
  period_lengths_ = {2.0};
}

double AllenCahn::initial_value(double x) { return x * x * std::cos(std::numbers::pi * x); }

Var AllenCahn::residual(const Field& u, const Var& x) const {
  Var v = u(x);
  Var g = input_gradient(v, x);
  return col(g, 0) - kDiffusion * second(g, x, 1) + kReaction * pow_int(v, 3) - kReaction * v;
}

Var AllenCahn::initial_residual(const Field& u, const Var& x) const {
  Array u0 = map_rows(x.value(), [](const double* p) { return initial_value(p[1]); });
  return u(x) - x.tape().constant(std::move(u0));
}

json AllenCahn::describe() const {
  return {{"id", id_}, {"diffusion", kDiffusion}, {"reaction", kReaction}, {"t", {0.0, 1.0}}, {"x", {-1.0, 1.0}},
          {"u0", "x^2 cos(pi x)"}};
}

// ----- Kuramoto-Sivashinsky -----

KuramotoSivashinsky::KuramotoSivashinsky(std::string id, KsCoefficients coeffs)
    : PdeProblem(std::move(id), Domain::time_slab(0.0, 1.0, 0.0, 2.0 * std::numbers::pi)), coeffs_(coeffs) {
  periodic_dims_ = {1};
  period_lengths_ = {2.0 * std::numbers::pi};
}

double KuramotoSivashinsky::initial_value(double x) { return std::cos(x) * (1.0 + std::sin(x)); }

Var KuramotoSivashinsky::residual(const Field& u, const Var& x) const {
  Var v = u(x);
  Var g = input_gradient(v, x);
  Var ux = col(g, 1);
  Var uxx = jacobian_column(ux, x, 1);
  Var uxxx = jacobian_column(uxx, x, 1);
  Var uxxxx = jacobian_column(uxxx, x, 1);
  return col(g, 0) + coeffs_.a * (v * ux) + coeffs_.b * uxx + coeffs_.c * uxxxx;
}

Var KuramotoSivashinsky::initial_residual(const Field& u, const Var& x) const {
  Array u0 = map_rows(x.value(), [](const double* p) { return initial_value(p[1]); });
  return u(x) - x.tape().constant(std::move(u0));
}

json KuramotoSivashinsky::describe() const {
  return {{"id", id_}, {"a", coeffs_.a}, {"b", coeffs_.b}, {"c", coeffs_.c}, {"t", {0.0, 1.0}},
          {"x", {0.0, 2.0 * std::numbers::pi}}, {"u0", "cos(x)(1+sin(x))"}};
}

// ----- Darcy -----

namespace {

Domain darcy_domain(DarcyCase c) {
  switch (c) {
    case DarcyCase::Smooth2d: return Domain::annulus(1.0, 2.0);
    case DarcyCase::Smooth3d: return Domain::extruded_annulus(1.0, 2.0, 0.0, 1.0);
    case DarcyCase::FiveStrip: return Domain::box({0.0, 0.0}, {1.0, 1.0});
  }
  throw std::logic_error("unknown Darcy case");
}

}  // namespace

Darcy::Darcy(std::string id, DarcyCase c, BoundaryType bc)
    : PdeProblem(std::move(id), darcy_domain(c)),
      case_(c),
      bc_(bc),
      mu_(c == DarcyCase::FiveStrip ? CoefficientField::five_strip() : CoefficientField::constant(1.0)) {
  switch (c) {
    case DarcyCase::Smooth2d: pin_ = {1.5, 0.0}; break;
    case DarcyCase::Smooth3d: pin_ = {1.5, 0.0, 0.5}; break;
    case DarcyCase::FiveStrip: pin_ = {0.5, 0.5}; break;
  }
}

Array Darcy::exact_solution(const Array& pts) const {
  switch (case_) {
    case DarcyCase::Smooth2d: return map_rows(pts, [](const double* p) { return std::sin(p[0]) * std::sin(p[1]); });
    case DarcyCase::Smooth3d:
      return map_rows(pts, [](const double* p) { return std::sin(p[0]) * std::sin(p[1]) * std::sin(p[2]); });
    case DarcyCase::FiveStrip: return map_rows(pts, [](const double* p) { return 1.0 - p[0]; });
  }
  throw std::logic_error("unknown Darcy case");
}

Array Darcy::exact_flux(const Array& pts) const {
  const std::size_t d = domain_.dim();
  Array q(pts.rows(), d);
  const Array mu = mu_.eval(pts);
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    const double* p = pts.ptr() + i * pts.cols();
    switch (case_) {
      case DarcyCase::Smooth2d:
        q(i, 0) = -std::cos(p[0]) * std::sin(p[1]);
        q(i, 1) = -std::sin(p[0]) * std::cos(p[1]);
        break;
      case DarcyCase::Smooth3d:
        q(i, 0) = -std::cos(p[0]) * std::sin(p[1]) * std::sin(p[2]);
        q(i, 1) = -std::sin(p[0]) * std::cos(p[1]) * std::sin(p[2]);
        q(i, 2) = -std::sin(p[0]) * std::sin(p[1]) * std::cos(p[2]);
        break;
      case DarcyCase::FiveStrip:
        q(i, 0) = 1.0;
        q(i, 1) = 0.0;
        break;
    }
    for (std::size_t k = 0; k < d; ++k) q(i, k) *= mu[i];
  }
  return q;
}

Array Darcy::forcing(const Array& pts) const {
  switch (case_) {
    case DarcyCase::Smooth2d:
      return map_rows(pts, [](const double* p) { return 2.0 * std::sin(p[0]) * std::sin(p[1]); });
    case DarcyCase::Smooth3d:
      return map_rows(pts, [](const double* p) { return 3.0 * std::sin(p[0]) * std::sin(p[1]) * std::sin(p[2]); });
    case DarcyCase::FiveStrip: return Array(pts.rows(), 1, 0.0);
  }
  throw std::logic_error("unknown Darcy case");
}

Var Darcy::residual(const Field& u, const Var& x) const {
  Tape& t = x.tape();
  Var mu = t.constant(mu_.eval(x.value()));
  Var g = input_gradient(u(x), x);
  Var lap = second(g, x, 0);
  for (std::size_t c = 1; c < x.cols(); ++c) lap = lap + second(g, x, c);
  return neg(mul_col(lap, mu)) - t.constant(forcing(x.value()));
}

Var Darcy::flux(const Field& u, const Var& x) const {
  Var mu = x.tape().constant(mu_.eval(x.value()));
  return neg(mul_col(input_gradient(u(x), x), mu));
}

std::vector<ResidualTerm> Darcy::boundary_residuals(const Field& u, Tape& tape, const PointSet& set) const {
  std::vector<ResidualTerm> terms;
  for (const auto& part : set.boundary) {
    if (part.points.rows() == 0) continue;
    if (bc_ == BoundaryType::Dirichlet) {
      Var x = tape.constant(part.points);
      terms.push_back({part.label + ":dirichlet", u(x) - tape.constant(exact_solution(part.points))});
    } else {
      // n . mu grad u = g with g = -n . q_exact.
      Var x = tape.variable(part.points);
      Var n = tape.constant(part.normals);
      Var dn = rowsum(mul(input_gradient(u(x), x), n));
      Array g = rowsum(mul(exact_flux(part.points), part.normals));
      terms.push_back({part.label + ":neumann", mul_col(dn, tape.constant(mu_.eval(part.points))) +
                                                    tape.constant(std::move(g))});
    }
  }
  if (bc_ == BoundaryType::Neumann) {
    Array p = Array::row(pin_);
    Var x = tape.constant(p);
    terms.push_back({"pin", u(x) - tape.constant(exact_solution(p))});
  }
  return terms;
}

void Darcy::prepare_points(PointSet& set) const {
  const auto ifs = mu_.interfaces();
  if (ifs.empty()) return;
  auto jitter = [&](Array& a) {
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (double yi : ifs) {
        double& y = a(i, 1);
        if (std::abs(y - yi) < kInterfaceJitter) y = y >= yi ? yi + kInterfaceJitter : yi - kInterfaceJitter;
      }
  };
  jitter(set.interior);
  for (auto& part : set.boundary) jitter(part.points);
}

std::vector<std::size_t> Darcy::eval_resolution() const {
  if (case_ == DarcyCase::Smooth3d) return {64, 64, 64};
  return {200, 200};
}

json Darcy::describe() const {
  const char* names[] = {"smooth2d", "smooth3d", "five-strip"};
  return {{"id", id_},
          {"case", names[static_cast<int>(case_)]},
          {"boundary", bc_ == BoundaryType::Dirichlet ? "dirichlet" : "neumann+pin"},
          {"mu", mu_.values()},
          {"pin", pin_}};
}

// ----- registry -----

const std::vector<std::string>& problem_ids() {
  static const std::vector<std::string> ids{"allen-cahn",
                                            "darcy2d-smooth-dirichlet",
                                            "darcy2d-smooth-neumann",
                                            "darcy3d-smooth-dirichlet",
                                            "darcy3d-smooth-neumann",
                                            "darcy2d-rough-neumann",
                                            "ks-regular",
                                            "ks-chaotic"};
  return ids;
}

std::shared_ptr<const PdeProblem> make_problem(const std::string& id) {
  if (id == "allen-cahn") return std::make_shared<AllenCahn>();
  if (id == "darcy2d-smooth-dirichlet") return std::make_shared<Darcy>(id, DarcyCase::Smooth2d, BoundaryType::Dirichlet);
  if (id == "darcy2d-smooth-neumann") return std::make_shared<Darcy>(id, DarcyCase::Smooth2d, BoundaryType::Neumann);
  if (id == "darcy3d-smooth-dirichlet") return std::make_shared<Darcy>(id, DarcyCase::Smooth3d, BoundaryType::Dirichlet);
  if (id == "darcy3d-smooth-neumann") return std::make_shared<Darcy>(id, DarcyCase::Smooth3d, BoundaryType::Neumann);
  if (id == "darcy2d-rough-neumann") return std::make_shared<Darcy>(id, DarcyCase::FiveStrip, BoundaryType::Neumann);
  if (id == "ks-regular") return std::make_shared<KuramotoSivashinsky>(id, KuramotoSivashinsky::regular());
  if (id == "ks-chaotic") return std::make_shared<KuramotoSivashinsky>(id, KuramotoSivashinsky::chaotic());
  throw std::invalid_argument("unknown problem id '" + id + "'");
}

}  // namespace hyres
