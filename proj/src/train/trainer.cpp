#include "hyres/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "hyres/autodiff/grad.hpp"
#include "util/json_fields.hpp"

namespace hyres {

using nlohmann::json;
using detail::read;
using detail::reject_unknown;

void LossWeights::validate() const {
  for (double w : {ic, b, r, p})
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("train.weights: weights must be finite and >= 0");
  if (update_period == 0) throw std::invalid_argument("train.weights.update_period: must be at least 1");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw std::invalid_argument("train.weights.ema_decay: must be in [0, 1)");
}

void CausalConfig::validate() const {
  if (chunks == 0) throw std::invalid_argument("train.causal.chunks: must be at least 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("train.causal.tolerance: must be positive");
}

void ScheduleConfig::validate() const {
  if (!(peak_lr > 0.0)) throw std::invalid_argument("train.schedule.peak_lr: must be positive");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0)) throw std::invalid_argument("train.schedule.decay_rate: must be in (0, 1]");
  if (decay_steps == 0) throw std::invalid_argument("train.schedule.decay_steps: must be at least 1");
}

double lr_schedule(std::size_t step, const ScheduleConfig& c) {
  const double s = static_cast<double>(step), w = static_cast<double>(c.warmup_steps);
  if (step <= c.warmup_steps) return c.warmup_steps == 0 ? c.peak_lr : c.peak_lr * s / w;
  return c.peak_lr * std::pow(c.decay_rate, (s - w) / static_cast<double>(c.decay_steps));
}

std::vector<double> causal_weights(const std::vector<double>& chunk_losses, double epsilon) {
  std::vector<double> w(chunk_losses.size());
  double prefix = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(-epsilon * prefix);
    prefix += chunk_losses[i];
  }
  return w;
}

std::vector<double> grad_norm_balance(const std::vector<double>& norms, const std::vector<double>& weights,
                                      double ema_decay) {
  if (norms.size() != weights.size()) throw std::invalid_argument("grad_norm_balance: size mismatch");
  double total = 0.0;
  for (double n : norms) total += n;
  std::vector<double> out = weights;
  if (total == 0.0) return out;
  for (std::size_t k = 0; k < norms.size(); ++k)
    if (norms[k] > 0.0) out[k] = ema_decay * weights[k] + (1.0 - ema_decay) * total / norms[k];
  return out;
}

OptimState OptimState::for_params(const ParamStore& params, const ScheduleConfig& schedule) {
  OptimState s;
  s.schedule = schedule;
  for (const auto& p : params.params()) {
    const bool t = p.trainable;
    s.m.push_back(t ? Array(p.value.rows(), p.value.cols(), 0.0) : Array());
    s.v.push_back(t ? Array(p.value.rows(), p.value.cols(), 0.0) : Array());
  }
  return s;
}

void adam_step(ParamStore& params, const std::vector<Array>& grads, OptimState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw std::invalid_argument("adam_step: gradient and state counts must match the parameter store");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Param& p = params.at(i);
    if (!p.trainable) continue;
    if (grads[i].shape() != p.value.shape())
      throw ShapeError("adam_step: gradient of " + p.name + " is " + to_string(grads[i].shape()) + ", parameter is " +
                       to_string(p.value.shape()));
    for (double g : grads[i].data())
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient for parameter " + p.name);
  }
  ++state.step;
  const double lr = lr_schedule(state.step, state.schedule);
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t), c2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params.at(i);
    if (!p.trainable) continue;
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    auto x = p.value.data();
    const auto& g = grads[i].data();
    for (std::size_t k = 0; k < x.size(); ++k) {
      m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g[k];
      v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g[k] * g[k];
      x[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + kAdamEps);
    }
  }
}

namespace {

Var mse(const Var& r) { return mean(mul(r, r)); }

/// Evaluates `f`, prefixing numeric failures with the term name.
template <typename F>
auto named_term(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const NumericError& e) {
    throw NumericError("loss term '" + name + "': " + e.what());
  }
}

Var weighted_total(const CompositeLoss& l, const LossWeights& w) {
  Var total = scale(l.reg, w.p);
  if (l.ic) total = total + scale(*l.ic, w.ic);
  if (l.b) total = total + scale(*l.b, w.b);
  if (l.r) total = total + scale(*l.r, w.r);
  return total;
}

void check_finite(const CompositeLoss& l) {
  auto check = [](const char* name, double v) {
    if (!std::isfinite(v)) throw NumericError(std::string("loss term '") + name + "' is not finite");
  };
  check("ic", l.ic_value);
  check("b", l.b_value);
  check("r", l.r_value);
  check("reg", l.reg_value);
}

}  // namespace

CompositeLoss composite_loss(const Field& u, const std::optional<Var>& reg, bool exact_periodic,
                             const PdeProblem& problem, const PointSet& batch, Tape& tape, const LossWeights& weights,
                             const CausalConfig& causal) {
  CompositeLoss out;
  out.reg = reg ? *reg : tape.constant(Array(1, 1, 0.0));
  out.reg_value = out.reg.value().item();

  // Residual term, causally weighted over time chunks when enabled.
  if (batch.interior.rows() > 0) {
    out.r = named_term("r", [&] {
      Var res = problem.residual(u, tape.variable(batch.interior));
      Var sq = mul(res, res);
      out.r_mse = mean(sq).value().item();
      if (!(causal.enabled && problem.time_dependent())) return mean(sq);
      const std::size_t m = causal.chunks, n = batch.interior.rows();
      const double t0 = problem.domain().lo()[0], t1 = problem.domain().hi()[0];
      std::vector<std::size_t> chunk(n), count(m, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = (batch.interior(i, 0) - t0) / (t1 - t0) * static_cast<double>(m);
        chunk[i] = std::min<std::size_t>(m - 1, static_cast<std::size_t>(std::max(0.0, std::floor(s))));
        ++count[chunk[i]];
      }
      Array c(n, m, 0.0);
      for (std::size_t i = 0; i < n; ++i) c(i, chunk[i]) = 1.0 / static_cast<double>(count[chunk[i]]);
      Var losses = matmul(sq, tape.constant(std::move(c)), true, false);  // 1 x M chunk MSEs
      const auto lv = losses.value().data();
      out.causal = causal_weights({lv.begin(), lv.end()}, causal.tolerance);
      Array w(1, m);
      for (std::size_t i = 0; i < m; ++i) w[i] = out.causal[i] / static_cast<double>(m);
      return sum(mul(losses, tape.constant(std::move(w))));
    });
    out.r_value = out.r_mse;
  }

  if (batch.initial && problem.time_dependent()) {
    out.ic = named_term("ic", [&] { return mse(problem.initial_residual(u, tape.constant(*batch.initial))); });
    out.ic_value = out.ic->value().item();
  }

  std::vector<ResidualTerm> parts;
  if (problem.time_dependent()) {
    if (!exact_periodic && !problem.periodic_dims().empty()) {
      Array ts;
      if (batch.boundary_count() > 0) {
        const Array bp = batch.boundary_points();
        ts = Array(bp.rows(), 1);
        for (std::size_t i = 0; i < bp.rows(); ++i) ts[i] = bp(i, 0);
      } else {
        const std::size_t n = std::min<std::size_t>(batch.interior.rows(), 256);
        ts = Array(n, 1);
        for (std::size_t i = 0; i < n; ++i) ts[i] = batch.interior(i, 0);
      }
      if (ts.rows() > 0) parts = named_term("b", [&] { return problem.periodic_residuals(u, tape, ts); });
    }
  } else {
    parts = named_term("b", [&] { return problem.boundary_residuals(u, tape, batch); });
  }
  if (!parts.empty()) {
    Var b;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      Var t = mse(parts[k].residual);
      out.boundary_parts.emplace_back(parts[k].label, t.value().item());
      b = k == 0 ? t : b + t;
    }
    out.b = b;
    out.b_value = b.value().item();
  }

  check_finite(out);
  out.total = weighted_total(out, weights);
  return out;
}

CompositeLoss composite_loss(const Model& model, const BoundParams& params, const PdeProblem& problem,
                             const PointSet& batch, const LossWeights& weights, const CausalConfig& causal) {
  Tape& tape = params.tape();
  std::optional<Var> reg;
  for (const auto& names : {model.alpha_names(), model.beta_names()})
    for (const auto& n : names) {
      Var a = params(n);
      Var sq = sum(mul(a, a));
      reg = reg ? *reg + sq : sq;
    }
  const Field u = [&](const Var& x) { return model.forward(params, x); };
  return composite_loss(u, reg, model.spec().embedding.has_periodic(), problem, batch, tape, weights, causal);
}

ModelSpec adapt_spec(ModelSpec spec, const PdeProblem& problem) {
  const Domain& d = problem.domain();
  spec.input_dim = d.dim();
  spec.input_lo = d.lo();
  spec.input_hi = d.hi();
  if (spec.embedding.has_periodic()) {
    if (problem.periodic_dims().empty())
      throw std::invalid_argument("model.embedding: " + problem.id() + " has no periodic direction");
    spec.embedding.periodic_dims = problem.periodic_dims();
    spec.embedding.period_lengths = problem.period_lengths();
  }
  spec.validate();
  return spec;
}

// ----- configuration -----

void TrainConfig::validate() const {
  if (points.interior == 0 && points.boundary == 0 && points.initial == 0)
    throw std::invalid_argument("train.points: all counts are zero");
  if (eval_every == 0) throw std::invalid_argument("train.eval_every: must be at least 1");
  if (log_every == 0) throw std::invalid_argument("train.log_every: must be at least 1");
  if (!(budget_seconds >= 0.0)) throw std::invalid_argument("train.budget_seconds: must be >= 0");
  weights.validate();
  causal.validate();
  schedule.validate();
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"steps", c.steps},
       {"minibatch", c.minibatch},
       {"points", {{"interior", c.points.interior}, {"boundary", c.points.boundary}, {"initial", c.points.initial}}},
       {"weights",
        {{"ic", c.weights.ic},
         {"b", c.weights.b},
         {"r", c.weights.r},
         {"p", c.weights.p},
         {"balance", c.weights.balance},
         {"update_period", c.weights.update_period},
         {"ema_decay", c.weights.ema_decay}}},
       {"causal", {{"enabled", c.causal.enabled}, {"chunks", c.causal.chunks}, {"tolerance", c.causal.tolerance}}},
       {"schedule",
        {{"peak_lr", c.schedule.peak_lr},
         {"warmup_steps", c.schedule.warmup_steps},
         {"decay_rate", c.schedule.decay_rate},
         {"decay_steps", c.schedule.decay_steps}}},
       {"eval_every", c.eval_every},
       {"log_every", c.log_every},
       {"budget_seconds", c.budget_seconds}};
  if (c.oracle) j["oracle"] = {{"modes", c.oracle->modes}, {"dt", c.oracle->dt}, {"t_samples", c.oracle->t_samples}};
}

void from_json(const json& j, TrainConfig& c) {
  reject_unknown(j,
                 {"steps", "minibatch", "points", "weights", "causal", "schedule", "eval_every", "log_every",
                  "budget_seconds", "oracle"},
                 "train");
  read(j, "steps", c.steps, "train");
  read(j, "minibatch", c.minibatch, "train");
  if (j.contains("points")) {
    const auto& p = j.at("points");
    reject_unknown(p, {"interior", "boundary", "initial"}, "train.points");
    read(p, "interior", c.points.interior, "train.points");
    read(p, "boundary", c.points.boundary, "train.points");
    read(p, "initial", c.points.initial, "train.points");
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    const std::string where = "train.weights";
    reject_unknown(w, {"ic", "b", "r", "p", "balance", "update_period", "ema_decay"}, where);
    read(w, "ic", c.weights.ic, where);
    read(w, "b", c.weights.b, where);
    read(w, "r", c.weights.r, where);
    read(w, "p", c.weights.p, where);
    read(w, "balance", c.weights.balance, where);
    read(w, "update_period", c.weights.update_period, where);
    read(w, "ema_decay", c.weights.ema_decay, where);
  }
  if (j.contains("causal")) {
    const auto& w = j.at("causal");
    reject_unknown(w, {"enabled", "chunks", "tolerance"}, "train.causal");
    read(w, "enabled", c.causal.enabled, "train.causal");
    read(w, "chunks", c.causal.chunks, "train.causal");
    read(w, "tolerance", c.causal.tolerance, "train.causal");
  }
  if (j.contains("schedule")) {
    const auto& w = j.at("schedule");
    const std::string where = "train.schedule";
    reject_unknown(w, {"peak_lr", "warmup_steps", "decay_rate", "decay_steps"}, where);
    read(w, "peak_lr", c.schedule.peak_lr, where);
    read(w, "warmup_steps", c.schedule.warmup_steps, where);
    read(w, "decay_rate", c.schedule.decay_rate, where);
    read(w, "decay_steps", c.schedule.decay_steps, where);
  }
  read(j, "eval_every", c.eval_every, "train");
  read(j, "log_every", c.log_every, "train");
  read(j, "budget_seconds", c.budget_seconds, "train");
  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    reject_unknown(o, {"modes", "dt", "t_samples"}, "train.oracle");
    OracleSettings s;
    s.t_samples = uniform_times(1.0, 101);
    read(o, "modes", s.modes, "train.oracle");
    read(o, "dt", s.dt, "train.oracle");
    read(o, "t_samples", s.t_samples, "train.oracle");
    c.oracle = s;
  }
  c.validate();
}

void RunConfig::validate() const {
  if (problem.empty()) throw std::invalid_argument("problem: missing");
  if (seeds.empty()) throw std::invalid_argument("seeds: need at least one seed");
  if (name.empty() || name.find('/') != std::string::npos)
    throw std::invalid_argument("name: must be non-empty and contain no '/'");
  make_problem(problem);
  train.validate();
}

void to_json(json& j, const RunConfig& c) {
  j = {{"name", c.name},   {"problem", c.problem}, {"output_dir", c.output_dir},
       {"seeds", c.seeds}, {"model", c.model},     {"train", c.train}};
}

void from_json(const json& j, RunConfig& c) {
  reject_unknown(j, {"name", "problem", "output_dir", "seeds", "model", "train"}, "config");
  read(j, "name", c.name, "config");
  read(j, "problem", c.problem, "config");
  read(j, "output_dir", c.output_dir, "config");
  read(j, "seeds", c.seeds, "config");
  if (j.contains("model")) from_json(j.at("model"), c.model);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  c.validate();
}

// ----- training loop -----

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::NumericAbort: return "numeric-abort";
    case RunStatus::Budget: return "budget";
  }
  return "";
}

MetricRecord RunReport::record(std::size_t depth, std::size_t collocation) const {
  MetricRecord r;
  r.problem_id = problem_id;
  r.model_kind = model_kind;
  r.seed = seed;
  r.rel_l2 = final_score.rel_l2;
  r.flux_x = final_score.flux_x;
  r.steps = steps_done;
  r.wall_clock = wall_clock;
  r.config_hash = config_hash;
  r.depth = depth;
  r.collocation = collocation;
  return r;
}

void write_report_csv(const RunReport& rep, std::ostream& os) {
  os.precision(10);
  os << "# problem: " << rep.problem_id << "\n# model: " << rep.model_kind << "\n# seed: " << rep.seed
     << "\n# config_hash: " << rep.config_hash << "\n# status: " << to_string(rep.status)
     << "\n# steps: " << rep.steps_done << "\n# wall_clock_seconds: " << rep.wall_clock
     << "\n# final_rel_l2: " << rep.final_score.rel_l2 << "\n";
  if (rep.final_score.flux_x) os << "# final_flux_x_rel_l2: " << *rep.final_score.flux_x << "\n";
  if (rep.horizon) os << "# scored_t_max: " << *rep.horizon << "\n";
  if (!rep.message.empty()) os << "# message: " << rep.message << "\n";
  const std::size_t blocks = rep.rows.empty() ? 0 : rep.rows.front().phi_alpha.size();
  os << "step,loss,loss_ic,loss_b,loss_r,loss_reg,lambda_ic,lambda_b,lambda_r,lr,rel_l2,flux_x_rel_l2";
  for (std::size_t l = 0; l < blocks; ++l) os << ",phi_alpha" << l << ",phi_beta" << l;
  os << "\n";
  for (const auto& r : rep.rows) {
    os << r.step << "," << r.total << "," << r.ic << "," << r.b << "," << r.r << "," << r.reg << "," << r.lambda_ic
       << "," << r.lambda_b << "," << r.lambda_r << "," << r.lr << ",";
    if (r.rel_l2) os << *r.rel_l2;
    os << ",";
    if (r.flux_x) os << *r.flux_x;
    for (std::size_t l = 0; l < r.phi_alpha.size(); ++l) os << "," << r.phi_alpha[l] << "," << r.phi_beta[l];
    os << "\n";
  }
}

namespace {

// Each step allocates and frees hundreds of megabytes of same-sized buffers.
// Keeping them on the heap instead of fresh mmap regions avoids repeated page
// faults, which otherwise cost about a third of the step time.
void keep_freed_memory() {
#ifdef __GLIBC__
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

}  // namespace

TrainResult train(const ModelSpec& spec_in, const PdeProblem& problem, const TrainConfig& config, std::uint64_t seed,
                  const Scorer* scorer) {
  config.validate();
  keep_freed_memory();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(); };

  const ModelSpec spec = adapt_spec(spec_in, problem);
  Model model = Model::build(spec, seed);
  std::optional<Scorer> own_scorer;
  if (!scorer) scorer = &own_scorer.emplace(Scorer::for_problem(problem, config.oracle));

  RunReport rep;
  rep.problem_id = problem.id();
  rep.model_kind = to_string(spec.kind);
  rep.seed = seed;
  rep.config_hash = config_hash({{"problem", problem.id()}, {"model", spec}, {"train", config}, {"seed", seed}});
  rep.horizon = scorer->horizon();

  SampleCounts counts = config.points;
  if (!problem.time_dependent()) counts.initial = 0;
  PointSet fixed;
  if (!config.minibatch) {
    fixed = poisson_disk(problem.domain(), counts, seed);
    problem.prepare_points(fixed);
  }
  Rng rng(seed ^ 0x5851f42d4c957f2dULL);

  LossWeights weights = config.weights;
  OptimState opt = OptimState::for_params(model.params(), config.schedule);
  const auto alpha = model.alpha_names(), beta = model.beta_names(), taus = model.tau_names();

  auto make_row = [&](std::size_t step, const CompositeLoss& l) {
    ReportRow row;
    row.step = step;
    row.total = l.total.value().item();
    row.ic = l.ic_value, row.b = l.b_value, row.r = l.r_value, row.reg = l.reg_value;
    row.lambda_ic = weights.ic, row.lambda_b = weights.b, row.lambda_r = weights.r;
    row.lr = lr_schedule(opt.step, opt.schedule);
    for (const auto& n : alpha) row.phi_alpha.push_back(phi(model.params().value(n).item()));
    for (const auto& n : beta) row.phi_beta.push_back(phi(model.params().value(n).item()));
    return row;
  };
  auto evaluate = [&](ReportRow& row) {
    const Score s = scorer->score(model);
    row.rel_l2 = s.rel_l2;
    row.flux_x = s.flux_x;
    rep.final_score = s;
  };

  for (std::size_t step = 0;; ++step) {
    const bool last = step == config.steps;
    try {
      PointSet batch;
      if (config.minibatch) {
        batch = minibatch(problem.domain(), counts, rng);
        problem.prepare_points(batch);
      }
      const PointSet& pts = config.minibatch ? batch : fixed;
      Tape tape;
      BoundParams bp(model.params(), tape, true);
      CompositeLoss loss = composite_loss(model, bp, problem, pts, weights, config.causal);

      if (!last && weights.balance && step % weights.update_period == 0) {
        std::vector<double*> lambdas;
        std::vector<double> norms, current;
        for (auto [term, lambda] : {std::pair{&loss.ic, &weights.ic}, {&loss.b, &weights.b}, {&loss.r, &weights.r}}) {
          if (!*term) continue;
          double sq = 0.0;
          for (const Array& g : grad(**term, bp.vars()))
            for (double v : g.data()) sq += v * v;
          norms.push_back(std::sqrt(sq));
          current.push_back(*lambda);
          lambdas.push_back(lambda);
        }
        if (lambdas.size() > 1) {
          const auto next = grad_norm_balance(norms, current, weights.ema_decay);
          for (std::size_t k = 0; k < lambdas.size(); ++k) *lambdas[k] = next[k];
          loss.total = weighted_total(loss, weights);
        }
      }

      const bool log = last || step % config.log_every == 0 || step % config.eval_every == 0;
      if (log) {
        ReportRow row = make_row(step, loss);
        if (last || step % config.eval_every == 0) evaluate(row);
        rep.rows.push_back(std::move(row));
      }
      if (last) break;

      const auto grads = grad(loss.total, bp.vars());
      adam_step(model.params(), grads, opt);
      for (const auto& n : taus)
        for (double& t : model.params().value(n).data()) t = std::max(t, kMinTau);
      rep.steps_done = step + 1;
    } catch (const NumericError& e) {
      rep.status = RunStatus::NumericAbort;
      rep.message = "step " + std::to_string(step) + ": " + e.what();
      break;
    }
    if (config.budget_seconds > 0.0 && elapsed() > config.budget_seconds) {
      rep.status = RunStatus::Budget;
      rep.message = "wall-clock budget of " + std::to_string(config.budget_seconds) + " s exhausted after step " +
                    std::to_string(step);
      break;
    }
  }
  if (rep.status != RunStatus::Ok) {
    ReportRow row;
    row.step = rep.steps_done;
    row.lambda_ic = weights.ic, row.lambda_b = weights.b, row.lambda_r = weights.r;
    row.lr = lr_schedule(opt.step, opt.schedule);
    row.total = row.ic = row.b = row.r = row.reg = std::nan("");
    for (const auto& n : alpha) row.phi_alpha.push_back(phi(model.params().value(n).item()));
    for (const auto& n : beta) row.phi_beta.push_back(phi(model.params().value(n).item()));
    try {
      evaluate(row);
    } catch (const std::exception&) {
    }
    rep.rows.push_back(std::move(row));
  }
  rep.wall_clock = elapsed();
  return {std::move(model), std::move(rep)};
}

}  // namespace hyres
