// Acceptance suite: one PASS/FAIL line per criterion. Quantitative criteria
// train the desk profiles in configs/desk and reuse completed runs under the
// runs directory when their config hash and source fingerprint match.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "hyres/autodiff/grad.hpp"
#include "hyres/model/checkpoint.hpp"
#include "hyres/sampling/samplers.hpp"

using namespace hyres;
namespace fs = std::filesystem;

namespace {

// ----- pinned tolerances -----
constexpr double kGradFdTol = 1e-6;
constexpr double kFourthDerivTol = 1e-8;
constexpr double kWendlandValueTol = 1e-14;
constexpr double kWendlandEdgeSlope = 1e-3;
constexpr double kConvexSlack = 1e-12;
constexpr double kPeriodicTol = 1e-12;
constexpr double kManufacturedTol = 1e-7;
constexpr double kTaggedTol = 1e-15;
constexpr double kAcSelfConvergence = 1e-8;
constexpr double kKsSelfConvergence = 1e-6;
constexpr double kDarcyRelL2 = 5e-2;
constexpr double kDarcyFluxX = 1e-1;
constexpr double kAcRelL2 = 5e-2;
constexpr double kNormalJump = 0.1;
constexpr double kTangentialJump = 5.0;
constexpr double kRunBudgetSeconds = 1800.0;

struct Context {
  fs::path runs, configs;
  bool reuse = true;
  std::size_t jobs = 1;
  std::ostream* log = nullptr;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome(const Context&)> run;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

/// Profile mismatch between a shipped desk config and its criterion.
void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error("desk profile mismatch: " + what);
}

Array random_array(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Array a(r, c);
  for (double& v : a.data()) v = u(rng);
  return a;
}

// ----- 1: autodiff -----

using Builder = std::function<Var(Tape&, std::span<const Var>)>;

struct Primitive {
  const char* name;
  std::vector<Shape> shapes;
  Builder build;
  double lo = -2.0, hi = 2.0;
};

double max_rel_fd_error(const Primitive& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Array> inputs;
  for (const auto& s : p.shapes) inputs.push_back(random_array(s[0], s[1], rng, p.lo, p.hi));
  auto projected = [&](const std::vector<Array>& in, const Array& w) {
    Tape t;
    std::vector<Var> vars;
    for (const auto& a : in) vars.push_back(t.variable(a));
    return sum(mul(p.build(t, vars).value(), w)).item();
  };
  Tape t;
  std::vector<Var> vars;
  for (const auto& a : inputs) vars.push_back(t.variable(a));
  const Var y = p.build(t, vars);
  const Array w = random_array(y.rows(), y.cols(), rng, -1.0, 1.0);
  const auto g = grad(sum(mul(y, t.constant(w))), vars);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto plus = inputs, minus = inputs;
      plus[k][i] += h;
      minus[k][i] -= h;
      const double fd = (projected(plus, w) - projected(minus, w)) / (2 * h);
      err += (g[k][i] - fd) * (g[k][i] - fd);
      norm += fd * fd;
    }
    worst = std::max(worst, std::sqrt(err) / std::max(std::sqrt(norm), 1e-3));
  }
  return worst;
}

std::vector<Primitive> primitives() {
  using V = std::span<const Var>;
  return {
      {"add", {{3, 2}, {3, 2}}, [](Tape&, V v) { return add(v[0], v[1]); }},
      {"add_scalar", {{3, 2}, {1, 1}}, [](Tape&, V v) { return add(v[0], v[1]); }},
      {"sub", {{3, 2}, {3, 2}}, [](Tape&, V v) { return sub(v[0], v[1]); }},
      {"mul", {{3, 2}, {3, 2}}, [](Tape&, V v) { return mul(v[0], v[1]); }},
      {"neg", {{2, 2}}, [](Tape&, V v) { return neg(v[0]); }},
      {"scale", {{2, 2}}, [](Tape&, V v) { return scale(v[0], -1.7); }},
      {"shift", {{2, 2}}, [](Tape&, V v) { return shift(v[0], 0.3); }},
      {"pow_int", {{2, 3}}, [](Tape&, V v) { return pow_int(v[0], 3); }},
      {"pow_int_neg", {{2, 3}}, [](Tape&, V v) { return pow_int(v[0], -2); }, 0.5, 2.0},
      {"tanh", {{3, 3}}, [](Tape&, V v) { return tanh(v[0]); }},
      {"sigmoid", {{3, 3}}, [](Tape&, V v) { return sigmoid(v[0]); }},
      {"exp", {{3, 3}}, [](Tape&, V v) { return exp(v[0]); }},
      {"sin", {{3, 3}}, [](Tape&, V v) { return sin(v[0]); }},
      {"cos", {{3, 3}}, [](Tape&, V v) { return cos(v[0]); }},
      {"wendland_q0", {{4, 3}}, [](Tape&, V v) { return wendland_q(v[0], 0); }, 0.05, 1.3},
      {"wendland_q1", {{4, 3}}, [](Tape&, V v) { return wendland_q(v[0], 1); }, 0.05, 1.3},
      {"wendland_q2", {{4, 3}}, [](Tape&, V v) { return wendland_q(v[0], 2); }, 0.05, 0.95},
      {"wendland_q3", {{4, 3}}, [](Tape&, V v) { return wendland_q(v[0], 3); }, 0.05, 0.95},
      {"tanh_grad", {{2, 3}, {2, 3}}, [](Tape&, V v) { return tanh_grad(v[0], v[1]); }},
      {"sigmoid_grad", {{2, 3}, {2, 3}}, [](Tape&, V v) { return sigmoid_grad(v[0], v[1]); }},
      {"add_row", {{3, 2}, {1, 2}}, [](Tape&, V v) { return add_row(v[0], v[1]); }},
      {"mul_row", {{3, 2}, {1, 2}}, [](Tape&, V v) { return mul_row(v[0], v[1]); }},
      {"mul_col", {{3, 2}, {3, 1}}, [](Tape&, V v) { return mul_col(v[0], v[1]); }},
      {"tile_rows", {{1, 3}}, [](Tape&, V v) { return tile_rows(v[0], 4); }},
      {"tile_cols", {{3, 1}}, [](Tape&, V v) { return tile_cols(v[0], 2); }},
      {"fill", {{1, 1}}, [](Tape&, V v) { return fill(v[0], 2, 3); }},
      {"sum", {{3, 2}}, [](Tape&, V v) { return sum(v[0]); }},
      {"colsum", {{3, 2}}, [](Tape&, V v) { return colsum(v[0]); }},
      {"rowsum", {{3, 2}}, [](Tape&, V v) { return rowsum(v[0]); }},
      {"matmul", {{3, 4}, {4, 2}}, [](Tape&, V v) { return matmul(v[0], v[1]); }},
      {"matmul_tn", {{4, 3}, {4, 2}}, [](Tape&, V v) { return matmul(v[0], v[1], true, false); }},
      {"matmul_nt", {{3, 4}, {2, 4}}, [](Tape&, V v) { return matmul(v[0], v[1], false, true); }},
      {"matmul_tt", {{4, 3}, {2, 4}}, [](Tape&, V v) { return matmul(v[0], v[1], true, true); }},
      {"slice_cols", {{3, 4}}, [](Tape&, V v) { return slice_cols(v[0], 1, 3); }},
      {"pad_cols", {{3, 2}}, [](Tape&, V v) { return pad_cols(v[0], 5, 2); }},
      {"concat_cols", {{3, 2}, {3, 1}}, [](Tape&, V v) { return concat_cols(v[0], v[1]); }},
      {"sqdist", {{5, 3}},
       [](Tape& t, V v) { return sqdist(v[0], t.constant(Array{{0.1, -0.5, 1.0}, {1.5, 0.2, -0.3}})); }},
      {"wendland_c4", {{3, 2}, {1, 2}}, [](Tape&, V v) { return wendland_c4(v[0], v[1]); }, 0.6, 2.0},
  };
}

Outcome autodiff(const Context&) {
  double worst = 0.0;
  std::string worst_name;
  for (const auto& p : primitives())
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const double e = max_rel_fd_error(p, seed);
      if (!(e <= worst)) worst = e, worst_name = p.name;
    }
  Tape t;
  const double x0 = 0.7;
  const Var x = t.variable(Array::scalar(x0));
  const Var xs[] = {x};
  Var d = sin(x);
  for (int k = 0; k < 3; ++k) d = grad_graph(d, xs)[0];
  const double d4 = grad(d, xs)[0].item();
  const double rel4 = std::abs(d4 - std::sin(x0)) / std::sin(x0);
  return {worst < kGradFdTol && rel4 < kFourthDerivTol,
          std::to_string(primitives().size()) + " primitives, worst FD rel err " + num(worst) + " (" + worst_name +
              ") < " + num(kGradFdTol) + "; d4 sin rel err " + num(rel4) + " < " + num(kFourthDerivTol)};
}

// ----- 2: Wendland kernel -----

Outcome wendland(const Context&) {
  const double tau = 0.7;
  const Array k = wendland_c4(Array{{0.0, tau, 2 * tau, 0.5 * tau}}, Array(1, 4, tau));
  const double e_center = std::abs(k(0, 0) - 3.0);
  const double e_half = std::abs(k(0, 3) - 0.32421875);
  const bool outside = k(0, 1) == 0.0 && k(0, 2) == 0.0;
  Tape t;
  const Var r = t.variable(Array::scalar(tau * (1 - 1e-6)));
  const Var T = t.constant(Array::scalar(tau));
  const double slope = std::abs(grad(wendland_c4(r, T), std::vector<Var>{r})[0].item());
  return {e_center <= kWendlandValueTol && e_half <= kWendlandValueTol && outside && slope < kWendlandEdgeSlope,
          "psi(0)-3=" + num(e_center) + ", psi(tau/2)-0.32421875=" + num(e_half) + ", psi(r>=tau)=0: " +
              (outside ? "yes" : "no") + ", |psi'(tau(1-1e-6))|=" + num(slope) + " < " + num(kWendlandEdgeSlope)};
}

// ----- 3: gates -----

Outcome gates(const Context&) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gate(0.0, 4.0);
  std::uniform_int_distribution<int> blocks(1, 4);
  std::size_t violations = 0, checked = 0;
  double worst_abar = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ModelSpec s;
    s.input_dim = 2;
    s.input_lo = {0.0, 0.0};
    s.input_hi = {1.0, 1.0};
    const int L = blocks(rng);
    for (int l = 0; l < L; ++l) s.blocks.push_back({6, 12, 2, 6});
    s.head_depth = 2;
    s.head_width = 6;
    Model m = Model::build(s, seed);
    for (const auto& n : m.alpha_names()) m.params().value(n)[0] = gate(rng);
    for (const auto& n : m.beta_names()) m.params().value(n)[0] = gate(rng);
    Tape t;
    BoundParams bp(m.params(), t, false);
    ForwardTrace tr;
    m.forward(bp, t.constant(random_array(40, 2, rng, -0.5, 1.5)), &tr);
    for (double v : tr.abar0.data()) worst_abar = std::max(worst_abar, std::abs(v));
    for (const auto& b : tr.blocks)
      for (std::size_t i = 0; i < b.mixed.size(); ++i) {
        ++checked;
        if (b.mixed[i] < std::min(b.rbf[i], b.nn[i]) - kConvexSlack ||
            b.mixed[i] > std::max(b.rbf[i], b.nn[i]) + kConvexSlack)
          ++violations;
        worst_abar = std::max(worst_abar, std::abs(b.skip[i]));
      }
  }
  return {violations == 0 && worst_abar <= 1.0,
          "100 random models, " + std::to_string(checked) + " mixes, " + std::to_string(violations) +
              " outside [min, max] of the branches; max |abar|=" + num(worst_abar) + " <= 1"};
}

// ----- 4: periodic exactness -----

Outcome periodic(const Context&) {
  const auto ac = make_problem("allen-cahn");
  double worst_u = 0.0, worst_ux = 0.0;
  std::size_t models = 0;
  for (ArchKind kind : {ArchKind::HyRes, ArchKind::Pinn, ArchKind::ResPinn, ArchKind::Expert})
    for (EmbeddingKind emb : {EmbeddingKind::Periodic, EmbeddingKind::FourierPeriodic})
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ModelSpec s;
        s.kind = kind;
        s.embedding.kind = emb;
        s.embedding.fourier_count = 8;
        for (int l = 0; l < 2; ++l) s.blocks.push_back({8, 16, 2, 8});
        s.head_depth = 2;
        s.head_width = 8;
        s.mlp_depth = 4;
        s.mlp_width = 8;
        const Model m = Model::build(adapt_spec(s, *ac), seed);
        ++models;
        std::mt19937_64 rng(seed + 77);
        const Array ts = random_array(16, 1, rng, 0.0, 1.0);
        Array x(32, 2);
        for (std::size_t i = 0; i < 16; ++i) {
          x(i, 0) = x(i + 16, 0) = ts[i];
          x(i, 1) = -1.0;
          x(i + 16, 1) = 1.0;
        }
        Tape t;
        BoundParams bp(m.params(), t, false);
        const Var in = t.variable(x);
        const Var u = m.forward(bp, in);
        const Var ux = jacobian_column(u, in, 1);
        for (std::size_t i = 0; i < 16; ++i) {
          worst_u = std::max(worst_u, std::abs(u.value()[i] - u.value()[i + 16]));
          worst_ux = std::max(worst_ux, std::abs(ux.value()[i] - ux.value()[i + 16]));
        }
      }
  return {worst_u <= kPeriodicTol && worst_ux <= kPeriodicTol,
          std::to_string(models) + " models: max |u(t,-1)-u(t,1)|=" + num(worst_u) + ", max |u_x(t,-1)-u_x(t,1)|=" +
              num(worst_ux) + " <= " + num(kPeriodicTol)};
}

// ----- 5: manufactured solutions -----

Field exact_field(DarcyCase c) {
  switch (c) {
    case DarcyCase::Smooth2d:
      return [](const Var& x) { return sin(col(x, 0)) * sin(col(x, 1)); };
    case DarcyCase::Smooth3d:
      return [](const Var& x) { return sin(col(x, 0)) * sin(col(x, 1)) * sin(col(x, 2)); };
    case DarcyCase::FiveStrip:
      return [](const Var& x) { return shift(neg(col(x, 0)), 1.0); };
  }
  return {};
}

Outcome manufactured(const Context&) {
  double worst = 0.0;
  std::string where;
  std::size_t count = 0;
  for (const auto& id : problem_ids()) {
    const auto prob = std::dynamic_pointer_cast<const Darcy>(make_problem(id));
    if (!prob) continue;
    ++count;
    PointSet set = poisson_disk(prob->domain(), {1000, 400, 0}, 17);
    prob->prepare_points(set);
    const Field u = exact_field(prob->darcy_case());
    Tape t;
    auto track = [&](const Array& r, const std::string& label) {
      for (double v : r.data())
        if (!(std::abs(v) <= worst)) worst = std::abs(v), where = id + " " + label;
    };
    track(prob->residual(u, t.variable(set.interior)).value(), "interior");
    for (const auto& term : prob->boundary_residuals(u, t, set)) track(term.residual.value(), term.label);
  }
  return {worst < kManufacturedTol, std::to_string(count) + " Darcy problems, max |residual|=" + num(worst) + " (" +
                                         where + ") < " + num(kManufacturedTol)};
}

// ----- 6: trainer math -----

Outcome trainer_math(const Context&) {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };

  const auto cw = causal_weights({1.0, 1.0, 1.0}, 1.0);
  check(cw.size() == 3 && cw[0] == 1.0 && near(cw[1], std::exp(-1.0), kTaggedTol) &&
            near(cw[2], std::exp(-2.0), kTaggedTol),
        "causal weights");

  const std::vector<double> norms{0.5, 2.0, 8.0};
  std::vector<double> w{1.0, 1.0, 1.0};
  for (int i = 0; i < 400; ++i) w = grad_norm_balance(norms, w, 0.9);
  bool fixed = true;
  for (std::size_t k = 0; k < 3; ++k) fixed = fixed && near(w[k] * norms[k], 10.5, 1e-9);
  const auto tagged = grad_norm_balance({1.0, 3.0}, {1.0, 1.0}, 0.0);
  check(fixed && near(tagged[0], 4.0, kTaggedTol) && near(tagged[1], 4.0 / 3.0, kTaggedTol), "balancing");

  const ScheduleConfig sc;
  check(lr_schedule(0, sc) == 0.0 && near(lr_schedule(5000, sc), 1e-3, kTaggedTol) &&
            near(lr_schedule(10000, sc), 9e-4, kTaggedTol),
        "lr schedule");

  ParamStore s;
  s.add("w", Array::scalar(0.5), "constant");
  ScheduleConfig flat;
  flat.peak_lr = 1e-3;
  flat.warmup_steps = 0;
  flat.decay_rate = 1.0;
  OptimState st = OptimState::for_params(s, flat);
  const std::vector<Array> g{Array::scalar(1.0)};
  adam_step(s, g, st);
  const bool first = near(s.value("w").item(), 0.5 - 1e-3 / (1.0 + kAdamEps), 1e-16) &&
                     near(st.m[0].item(), 0.1, 1e-16) && near(st.v[0].item(), 0.001, 1e-18);
  adam_step(s, g, st);
  const bool second = near(s.value("w").item(), 0.5 - 2e-3 / (1.0 + kAdamEps), 1e-15) &&
                      near(st.m[0].item(), 0.19, 1e-16) && near(st.v[0].item(), 0.001999, 1e-17);
  check(first && second && st.step == 2, "adam");

  std::string detail = "causal weights, balancing fixed point, lr(0/5000/10000), Adam two steps";
  if (!failed.empty()) {
    detail += "; failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

// ----- 7: oracle self-convergence -----

Outcome oracle_convergence(const Context&) {
  const double ac = self_convergence(allen_cahn_spectral_problem(), 256, default_oracle_settings("allen-cahn").dt, 1.0);
  const double ks = self_convergence(spectral_problem_for("ks-regular"), 256,
                                     default_oracle_settings("ks-regular").dt, 1.0);
  return {ac < kAcSelfConvergence && ks < kKsSelfConvergence, "allen-cahn 256->512 rel change " + num(ac) + " < " +
                                                                  num(kAcSelfConvergence) + "; ks-regular " +
                                                                  num(ks) + " < " + num(kKsSelfConvergence)};
}

// ----- quantitative runs -----

RunConfig desk(const Context& ctx, const std::string& name) { return cli::load_config(ctx.configs / (name + ".json")); }

cli::RunOptions options(const Context& ctx) {
  cli::RunOptions o;
  o.jobs = ctx.jobs;
  o.reuse = ctx.reuse;
  o.log = ctx.log;
  return o;
}

std::vector<cli::SeedResult> experiment(const Context& ctx, const RunConfig& c, const std::string& dir) {
  auto results = cli::run_experiment(c, ctx.runs / dir, options(ctx));
  for (const auto& r : results) {
    if (!r.error.empty()) throw std::runtime_error("seed " + std::to_string(r.seed) + ": " + r.error);
    if (r.report.status != RunStatus::Ok)
      throw std::runtime_error("seed " + std::to_string(r.seed) + " ended with " + to_string(r.report.status) + " " +
                               r.report.message);
  }
  return results;
}

double mean_rel_l2(const std::vector<cli::SeedResult>& rs) {
  double s = 0.0;
  for (const auto& r : rs) s += r.report.final_score.rel_l2;
  return s / static_cast<double>(rs.size());
}

double max_wall_clock(const std::vector<cli::SeedResult>& rs) {
  double w = 0.0;
  for (const auto& r : rs) w = std::max(w, r.report.wall_clock);
  return w;
}

std::string wall_note(double seconds) {
  return "longest run " + num(seconds) + " s" + (seconds > kRunBudgetSeconds ? " (over the 1800 s budget)" : "");
}

void require_hyres(const ModelSpec& m, std::size_t blocks, std::size_t width, std::size_t centers) {
  require(m.kind == ArchKind::HyRes, "model kind hyres");
  require(m.blocks.size() == blocks, "block count " + std::to_string(blocks));
  for (const auto& b : m.blocks) {
    require(b.width == width, "block width " + std::to_string(width));
    require(b.rbf_centers == centers, "RBF centers " + std::to_string(centers));
  }
}

Outcome darcy_desk(const Context& ctx) {
  const RunConfig c = desk(ctx, "darcy2d-smooth-dirichlet");
  require(c.problem == "darcy2d-smooth-dirichlet", "problem");
  require_hyres(c.model, 2, 64, 128);
  require(!c.train.minibatch && c.train.points.interior == 2000, "2000 fixed Poisson-disk points");
  require(c.train.steps == 10000, "10k steps");
  const auto rs = experiment(ctx, c, "c08-darcy2d-desk");
  const Score& s = rs.front().report.final_score;
  const bool ok = s.rel_l2 <= kDarcyRelL2 && s.flux_x && *s.flux_x <= kDarcyFluxX;
  return {ok, "rel_l2=" + num(s.rel_l2) + " <= " + num(kDarcyRelL2) + ", flux_x rel_l2=" +
                  (s.flux_x ? num(*s.flux_x) : "n/a") + " <= " + num(kDarcyFluxX) + "; " +
                  wall_note(max_wall_clock(rs))};
}

Outcome allen_cahn_desk(const Context& ctx) {
  const RunConfig h = desk(ctx, "allen-cahn");
  const RunConfig p = desk(ctx, "allen-cahn-pinn");
  require(h.problem == "allen-cahn" && p.problem == "allen-cahn", "problem");
  require_hyres(h.model, 2, 64, 128);
  require(p.model.kind == ArchKind::Pinn, "baseline kind pinn");
  require(h.train.steps == 30000 && h.train.causal.enabled, "30k steps with causal weighting");
  require(h.seeds.size() == 3 && h.seeds == p.seeds, "three shared seeds");
  require(nlohmann::json(h.train) == nlohmann::json(p.train), "identical training settings");
  const auto hr = experiment(ctx, h, "c09-allen-cahn-hyres");
  const auto pr = experiment(ctx, p, "c09-allen-cahn-pinn");
  const double mh = mean_rel_l2(hr), mp = mean_rel_l2(pr);
  return {mh <= kAcRelL2 && mh < mp, "hyres mean rel_l2=" + num(mh) + " <= " + num(kAcRelL2) +
                                         " and < pinn mean rel_l2=" + num(mp) + " (3 seeds); " +
                                         wall_note(std::max(max_wall_clock(hr), max_wall_clock(pr)))};
}

Outcome five_strip(const Context& ctx) {
  const RunConfig c = desk(ctx, "darcy2d-rough-neumann");
  require(c.problem == "darcy2d-rough-neumann", "problem");
  require(c.model.kind == ArchKind::HyRes, "model kind hyres");
  require(c.train.steps == 20000, "20k steps");
  const auto rs = experiment(ctx, c, "c10-five-strip");
  const auto problem = make_problem(c.problem);
  const Model m = load_checkpoint(rs.front().dir / "checkpoint.json");
  const auto jumps = interface_jump(model_field(m), *problem, 200);
  double normal = 0.0;
  for (const auto& j : jumps) normal += j.normal;
  normal /= static_cast<double>(jumps.size());
  const double tangential = jumps.front().tangential;
  return {normal <= kNormalJump && tangential >= kTangentialJump,
          "mean normal jump=" + num(normal) + " <= " + num(kNormalJump) + ", tangential jump at y=" +
              num(jumps.front().y) + ": " + num(tangential) + " >= " + num(kTangentialJump) + " (exact 10); rel_l2=" +
              num(rs.front().report.final_score.rel_l2) + "; " + wall_note(max_wall_clock(rs))};
}

std::pair<std::vector<double>, std::vector<double>> curve(const StudyTable& t) {
  std::vector<double> x, y;
  for (const auto& r : t.rows) x.push_back(r.axis_value), y.push_back(r.mean_rel_l2);
  return {x, y};
}

std::string table_text(const StudyTable& t) {
  std::string s;
  for (const auto& r : t.rows) s += (s.empty() ? "" : ", ") + num(r.axis_value) + ":" + num(r.mean_rel_l2);
  return s;
}

cli::SweepResult run_sweep(const Context& ctx, const std::string& config, cli::SweepAxis axis,
                           const std::vector<std::string>& values, const std::string& dir) {
  cli::SweepResult r = cli::run_sweep(desk(ctx, config), axis, values, ctx.runs / dir, options(ctx));
  if (!r.failures.empty()) throw std::runtime_error("sweep cell failed: " + r.failures.front());
  return r;
}

Outcome collocation(const Context& ctx) {
  const RunConfig c = desk(ctx, "darcy2d-collocation-sweep");
  require(c.problem == "darcy2d-smooth-dirichlet" && c.model.kind == ArchKind::HyRes, "hyres on darcy2d");
  require(c.seeds.size() == 2, "two seeds");
  const cli::SweepResult r = run_sweep(ctx, "darcy2d-collocation-sweep", cli::SweepAxis::Collocation,
                                       {"500", "1000", "2000", "4000"}, "c11-collocation-sweep");
  const auto [x, y] = curve(r.table);
  require(x.size() == 4, "four collocation counts");
  const double rho = spearman(x, y);
  double wall = 0.0;
  for (const auto& m : r.records) wall = std::max(wall, m.wall_clock);
  return {rho <= 0.0, "Spearman(count, mean rel_l2)=" + num(rho) + " <= 0 over {" + table_text(r.table) + "}; " +
                          std::to_string(c.train.steps) + " steps; " + wall_note(wall)};
}

Outcome depth(const Context& ctx) {
  const RunConfig c = desk(ctx, "allen-cahn-depth-sweep");
  require(c.problem == "allen-cahn" && c.model.kind == ArchKind::HyRes, "hyres on allen-cahn");
  require(c.train.steps == 10000 && c.seeds.size() == 2, "10k steps, two seeds");
  const cli::SweepResult r =
      run_sweep(ctx, "allen-cahn-depth-sweep", cli::SweepAxis::Depth, {"1", "2", "3"}, "c12-depth-sweep");
  const auto [x, y] = curve(r.table);
  require(x.size() == 3 && x.front() == 1.0 && x.back() == 3.0, "depths 1..3");
  double wall = 0.0;
  for (const auto& m : r.records) wall = std::max(wall, m.wall_clock);
  return {y.back() <= y.front(), "mean rel_l2 L=3: " + num(y.back()) + " <= L=1: " + num(y.front()) + " {" +
                                     table_text(r.table) + "}; " + wall_note(wall)};
}

Outcome ks_finite(const Context& ctx) {
  const RunConfig c = desk(ctx, "ks-regular");
  require(c.problem == "ks-regular" && c.train.steps == 5000, "ks-regular, 5k steps");
  auto rs = cli::run_experiment(c, ctx.runs / "ks-regular-finite", options(ctx));
  const auto& r = rs.front();
  if (!r.error.empty()) return {false, r.error};
  const bool ok = r.report.status == RunStatus::Ok && r.report.steps_done == c.train.steps &&
                  std::isfinite(r.report.final_score.rel_l2);
  return {ok, to_string(r.report.status) + " after " + std::to_string(r.report.steps_done) +
                  " steps, rel_l2=" + num(r.report.final_score.rel_l2) + " (no threshold); " +
                  wall_note(r.report.wall_clock)};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"1", "autodiff gradients", autodiff},
      {"2", "wendland kernel", wendland},
      {"3", "gate convexity and boundedness", gates},
      {"4", "exact periodicity", periodic},
      {"5", "manufactured solutions", manufactured},
      {"6", "trainer math", trainer_math},
      {"7", "oracle self-convergence", oracle_convergence},
      {"8", "darcy2d smooth dirichlet desk run", darcy_desk},
      {"9", "allen-cahn desk: hyres vs pinn", allen_cahn_desk},
      {"10", "five-strip interface flux", five_strip},
      {"11", "darcy2d collocation sweep", collocation},
      {"12", "allen-cahn depth sweep", depth},
      {"ks", "ks-regular finite training", ks_finite},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria: one PASS/FAIL line per criterion"};
  std::vector<std::string> selected;
  Context ctx;
  const char* env_runs = std::getenv("HYRES_ACCEPTANCE_DIR");
  std::string runs = env_runs ? env_runs : HYRES_ACCEPTANCE_RUNS;
  std::string configs = HYRES_DESK_CONFIGS;
  bool fresh = false, quiet = false;
  app.add_option("--criterion", selected, "Criteria to run (1-12, ks); default all")->delimiter(',');
  app.add_option("--runs", runs, "Run directory root ($HYRES_ACCEPTANCE_DIR)");
  app.add_option("--configs", configs, "Desk profile directory");
  app.add_option("--jobs", ctx.jobs, "Concurrent training runs")->check(CLI::PositiveNumber);
  app.add_flag("--fresh", fresh, "Retrain instead of reusing completed runs");
  app.add_flag("--quiet", quiet, "No per-run progress lines");
  CLI11_PARSE(app, argc, argv);
  ctx.runs = runs;
  ctx.configs = configs;
  ctx.reuse = !fresh;
  if (!quiet) ctx.log = &std::cerr;

  std::vector<const Criterion*> chosen;
  for (const auto& c : criteria())
    if (selected.empty() || std::find(selected.begin(), selected.end(), c.id) != selected.end()) chosen.push_back(&c);
  for (const auto& s : selected)
    if (std::none_of(criteria().begin(), criteria().end(), [&](const Criterion& c) { return c.id == s; })) {
      std::cerr << "unknown criterion '" << s << "'\n";
      return cli::kExitConfig;
    }

  std::size_t failed = 0;
  for (const Criterion* c : chosen) {
    Outcome o;
    try {
      o = c->run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c->id << " (" << c->title << "): " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
