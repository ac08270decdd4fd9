#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hyres/autodiff/grad.hpp"
#include "hyres/train/trainer.hpp"

using namespace hyres;

namespace {

ModelSpec tiny_spec(std::size_t blocks = 1) {
  ModelSpec s;
  s.kind = ArchKind::HyRes;
  for (std::size_t l = 0; l < blocks; ++l) s.blocks.push_back({6, 8, 1, 6});
  s.head_depth = 2;
  s.head_width = 6;
  return s;
}

ScheduleConfig constant_lr(double lr) {
  ScheduleConfig c;
  c.peak_lr = lr;
  c.warmup_steps = 0;
  c.decay_rate = 1.0;
  return c;
}

TrainConfig tiny_train(std::size_t steps) {
  TrainConfig c;
  c.steps = steps;
  c.points = {40, 16, 0};
  c.schedule = constant_lr(1e-2);
  c.eval_every = 1000;
  c.log_every = 1;
  return c;
}

Field exact_darcy2d() {
  return [](const Var& x) { return mul(sin(col(x, 0)), sin(col(x, 1))); };
}

}  // namespace

// ----- learning-rate schedule -----

TEST(LrSchedule, TaggedValues) {
  const ScheduleConfig c;
  EXPECT_EQ(lr_schedule(0, c), 0.0);
  EXPECT_NEAR(lr_schedule(2500, c), 5e-4, 1e-18);
  EXPECT_NEAR(lr_schedule(5000, c), 1e-3, 1e-18);
  EXPECT_NEAR(lr_schedule(10000, c), 9e-4, 1e-15);
  EXPECT_NEAR(lr_schedule(15000, c), 8.1e-4, 1e-15);
}

TEST(LrSchedule, ContinuousAtWarmupEnd) {
  const ScheduleConfig c;
  // Neighbouring steps differ by at most one warmup increment.
  for (std::size_t s : {4999u, 5000u}) EXPECT_NEAR(lr_schedule(s, c), lr_schedule(s + 1, c), 1e-3 / 5000 + 1e-18);
  EXPECT_LT(lr_schedule(5001, c), lr_schedule(5000, c));
}

TEST(LrSchedule, NoWarmupStartsAtPeak) {
  EXPECT_EQ(lr_schedule(0, constant_lr(3e-3)), 3e-3);
  EXPECT_EQ(lr_schedule(123456, constant_lr(3e-3)), 3e-3);
}

// ----- causal weights -----

TEST(CausalWeights, TaggedExample) {
  const auto w = causal_weights({1.0, 1.0, 1.0}, 1.0);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], std::exp(-1.0));
  EXPECT_DOUBLE_EQ(w[2], std::exp(-2.0));
}

TEST(CausalWeights, ZeroLossesGiveOnes) {
  for (double w : causal_weights(std::vector<double>(32, 0.0), 1.0)) EXPECT_EQ(w, 1.0);
}

TEST(CausalWeights, MonotoneAndBounded) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> l(32);
    for (double& v : l) v = u(rng);
    const auto w = causal_weights(l, 0.7);
    EXPECT_EQ(w[0], 1.0);
    for (std::size_t i = 1; i < w.size(); ++i) {
      EXPECT_LE(w[i], w[i - 1]);
      EXPECT_GT(w[i], 0.0);
    }
  }
}

// ----- gradient-norm balancing -----

TEST(Balance, EqualNormsGiveTermCount) {
  const auto w = grad_norm_balance({2.0, 2.0, 2.0}, {1.0, 1.0, 1.0}, 0.0);
  for (double v : w) EXPECT_DOUBLE_EQ(v, 3.0);
}

TEST(Balance, TaggedExample) {
  const auto w = grad_norm_balance({1.0, 3.0}, {1.0, 1.0}, 0.0);
  EXPECT_DOUBLE_EQ(w[0], 4.0);
  EXPECT_DOUBLE_EQ(w[1], 4.0 / 3.0);
}

TEST(Balance, MovingAverage) {
  const auto w = grad_norm_balance({1.0, 3.0}, {1.0, 1.0}, 0.9);
  EXPECT_NEAR(w[0], 0.9 + 0.1 * 4.0, 1e-15);
  EXPECT_NEAR(w[1], 0.9 + 0.1 * 4.0 / 3.0, 1e-15);
}

TEST(Balance, FixedPointEqualizesWeightedNorms) {
  const std::vector<double> norms{0.5, 2.0, 8.0};
  std::vector<double> w{1.0, 1.0, 1.0};
  for (int i = 0; i < 400; ++i) w = grad_norm_balance(norms, w, 0.9);
  const double total = 10.5;
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(w[k] * norms[k], total, 1e-9);
  const auto again = grad_norm_balance(norms, w, 0.9);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(again[k], w[k], 1e-12);
}

TEST(Balance, ZeroNormsKeepWeights) {
  EXPECT_EQ(grad_norm_balance({0.0, 0.0}, {2.0, 5.0}, 0.5), (std::vector<double>{2.0, 5.0}));
  const auto w = grad_norm_balance({0.0, 1.0}, {2.0, 5.0}, 0.0);
  EXPECT_EQ(w[0], 2.0);
  EXPECT_EQ(w[1], 1.0);
  EXPECT_THROW(grad_norm_balance({1.0}, {1.0, 1.0}, 0.0), std::invalid_argument);
}

// ----- Adam -----

namespace {

ParamStore scalar_store(double v) {
  ParamStore s;
  s.add("w", Array(1, 1, v), "test");
  s.add("frozen", Array(1, 1, 7.0), "test", false);
  return s;
}

}  // namespace

TEST(Adam, TwoStepRecurrence) {
  ParamStore s = scalar_store(0.5);
  OptimState st = OptimState::for_params(s, constant_lr(1e-3));
  const std::vector<Array> g{Array(1, 1, 1.0), Array(1, 1, 0.0)};
  adam_step(s, g, st);
  // m1 = 0.1, v1 = 0.001; bias-corrected ratio 1 / (1 + eps).
  EXPECT_NEAR(s.value("w").item(), 0.5 - 1e-3 / (1.0 + kAdamEps), 1e-16);
  EXPECT_NEAR(st.m[0].item(), 0.1, 1e-16);
  EXPECT_NEAR(st.v[0].item(), 0.001, 1e-18);
  adam_step(s, g, st);
  EXPECT_NEAR(s.value("w").item(), 0.5 - 2e-3 / (1.0 + kAdamEps), 1e-15);
  EXPECT_NEAR(st.m[0].item(), 0.19, 1e-16);
  EXPECT_NEAR(st.v[0].item(), 0.001999, 1e-17);
  EXPECT_EQ(st.step, 2u);
  EXPECT_EQ(s.value("frozen").item(), 7.0);
}

TEST(Adam, CounterIncrementsBeforeRate) {
  ParamStore s = scalar_store(0.0);
  OptimState st = OptimState::for_params(s, ScheduleConfig{});
  adam_step(s, {Array(1, 1, -1.0), Array(1, 1, 0.0)}, st);
  // lr(1) = 1e-3 / 5000 under the default warmup.
  EXPECT_NEAR(s.value("w").item(), 2e-7 / (1.0 + kAdamEps), 1e-21);
}

TEST(Adam, ZeroGradientIsNoOp) {
  ParamStore s = scalar_store(0.25);
  OptimState st = OptimState::for_params(s, constant_lr(1e-2));
  for (int i = 0; i < 3; ++i) adam_step(s, {Array(1, 1, 0.0), Array(1, 1, 0.0)}, st);
  EXPECT_EQ(s.value("w").item(), 0.25);
}

TEST(Adam, RejectsBadGradientsWithoutUpdating) {
  ParamStore s = scalar_store(0.25);
  OptimState st = OptimState::for_params(s, constant_lr(1e-2));
  try {
    adam_step(s, {Array(1, 1, std::nan("")), Array(1, 1, 0.0)}, st);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("w"), std::string::npos);
  }
  EXPECT_EQ(s.value("w").item(), 0.25);
  EXPECT_EQ(st.step, 0u);
  EXPECT_THROW(adam_step(s, {Array(2, 1, 0.0), Array(1, 1, 0.0)}, st), ShapeError);
  EXPECT_THROW(adam_step(s, {Array(1, 1, 0.0)}, st), std::invalid_argument);
}

// ----- composite loss -----

TEST(CompositeLoss, RegularizerTaggedExample) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  Model m = Model::build(adapt_spec(tiny_spec(2), *problem), 0);
  const auto alpha = m.alpha_names(), beta = m.beta_names();
  ASSERT_EQ(alpha.size(), 2u);
  m.params().value(alpha[0])[0] = 1.0;
  m.params().value(alpha[1])[0] = -1.0;
  m.params().value(beta[0])[0] = 2.0;
  m.params().value(beta[1])[0] = 0.0;
  LossWeights w;
  w.p = 0.1;
  Tape tape;
  BoundParams bp(m.params(), tape);
  const PointSet empty;
  const CompositeLoss l = composite_loss(m, bp, *problem, empty, w, CausalConfig{});
  EXPECT_DOUBLE_EQ(l.reg_value, 6.0);
  EXPECT_NEAR(l.total.value().item(), 0.6, 1e-15);
  EXPECT_FALSE(l.r.has_value());
  EXPECT_FALSE(l.b.has_value());

  // d/d alpha of lambda_p * alpha^2.
  const auto g = grad(l.total, bp.vars());
  EXPECT_NEAR(g[m.params().index(alpha[0])].item(), 0.2, 1e-15);
  EXPECT_NEAR(g[m.params().index(beta[0])].item(), 0.4, 1e-15);

  w.p = 0.0;
  Tape t2;
  BoundParams bp2(m.params(), t2);
  EXPECT_EQ(composite_loss(m, bp2, *problem, empty, w, CausalConfig{}).total.value().item(), 0.0);
}

TEST(CompositeLoss, ExactSolutionHasNoResidual) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const PointSet set = poisson_disk(problem->domain(), {300, 60, 0}, 1);
  Tape tape;
  const CompositeLoss l =
      composite_loss(exact_darcy2d(), std::nullopt, false, *problem, set, tape, LossWeights{}, CausalConfig{});
  EXPECT_LT(l.r_value, 1e-20);
  EXPECT_LT(l.b_value, 1e-28);
  EXPECT_LT(l.total.value().item(), 1e-20);
  ASSERT_FALSE(l.boundary_parts.empty());
}

TEST(CompositeLoss, WeightsScaleTerms) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const PointSet set = poisson_disk(problem->domain(), {50, 20, 0}, 2);
  const Field u = [](const Var& x) { return scale(col(x, 0), 0.3); };
  LossWeights w;
  w.r = 2.0;
  w.b = 5.0;
  Tape tape;
  const CompositeLoss l = composite_loss(u, std::nullopt, false, *problem, set, tape, w, CausalConfig{});
  EXPECT_GT(l.r_value, 0.0);
  EXPECT_GT(l.b_value, 0.0);
  EXPECT_NEAR(l.total.value().item(), 2.0 * l.r_value + 5.0 * l.b_value, 1e-12 * l.total.value().item());
  double parts = 0.0;
  for (const auto& [label, v] : l.boundary_parts) parts += v;
  EXPECT_NEAR(parts, l.b_value, 1e-15 * parts);
}

TEST(CompositeLoss, GradientMatchesFiniteDifferences) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const ModelSpec spec = adapt_spec(tiny_spec(1), *problem);
  Model m = Model::build(spec, 4);
  const PointSet set = poisson_disk(problem->domain(), {12, 6, 0}, 4);
  LossWeights w;
  w.p = 0.3;
  auto loss_at = [&](const ParamStore& store) {
    Tape tape;
    BoundParams bp(store, tape);
    return composite_loss(m, bp, *problem, set, w, CausalConfig{}).total.value().item();
  };
  Tape tape;
  BoundParams bp(m.params(), tape);
  const auto g = grad(composite_loss(m, bp, *problem, set, w, CausalConfig{}).total, bp.vars());
  std::mt19937_64 rng(9);
  int checked = 0;
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    const Param& p = m.params().at(i);
    if (!p.trainable) continue;
    std::uniform_int_distribution<std::size_t> pick(0, p.value.size() - 1);
    for (int rep = 0; rep < 2; ++rep) {
      const std::size_t k = pick(rng);
      const double h = 1e-5 * std::max(1.0, std::abs(p.value[k]));
      ParamStore plus = m.params(), minus = m.params();
      plus.at(i).value[k] += h;
      minus.at(i).value[k] -= h;
      const double fd = (loss_at(plus) - loss_at(minus)) / (2 * h);
      EXPECT_NEAR(g[i][k], fd, 1e-5 * std::max(1.0, std::abs(fd))) << p.name << "[" << k << "]";
      ++checked;
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(CompositeLoss, NamesNonFiniteTerm) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const PointSet set = poisson_disk(problem->domain(), {20, 8, 0}, 1);
  const Field blowup = [](const Var& x) { return pow_int(scale(col(x, 0), 0.0), -1); };
  Tape tape;
  try {
    composite_loss(blowup, std::nullopt, false, *problem, set, tape, LossWeights{}, CausalConfig{});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("loss term 'r'"), std::string::npos) << e.what();
  }
}

TEST(CompositeLoss, CausalWeightingOfResidual) {
  const auto problem = make_problem("allen-cahn");
  Rng rng(5);
  const PointSet batch = minibatch(problem->domain(), {400, 0, 50}, rng);
  const Field u = [](const Var& x) { return mul(col(x, 0), col(x, 1)); };
  CausalConfig causal;
  causal.chunks = 8;
  Tape tape;
  const CompositeLoss on = composite_loss(u, std::nullopt, false, *problem, batch, tape, LossWeights{}, causal);
  ASSERT_EQ(on.causal.size(), 8u);
  EXPECT_EQ(on.causal[0], 1.0);
  for (std::size_t i = 1; i < 8; ++i) EXPECT_LE(on.causal[i], on.causal[i - 1]);
  // The weighted term lies below the plain mean when any chunk is down-weighted.
  EXPECT_LT(on.r->value().item(), on.r_mse);

  causal.enabled = false;
  const CompositeLoss off = composite_loss(u, std::nullopt, false, *problem, batch, tape, LossWeights{}, causal);
  EXPECT_TRUE(off.causal.empty());
  EXPECT_DOUBLE_EQ(off.r->value().item(), off.r_mse);
  EXPECT_DOUBLE_EQ(off.r_mse, on.r_mse);
}

TEST(CompositeLoss, PeriodicMismatchOnlyWithoutExactEmbedding) {
  const auto problem = make_problem("allen-cahn");
  Rng rng(6);
  const PointSet batch = minibatch(problem->domain(), {64, 0, 16}, rng);
  const Field u = [](const Var& x) { return col(x, 1); };  // u(t, 1) - u(t, -1) = 2
  Tape tape;
  const CompositeLoss plain = composite_loss(u, std::nullopt, false, *problem, batch, tape, LossWeights{}, {});
  ASSERT_TRUE(plain.b.has_value());
  EXPECT_NEAR(plain.boundary_parts.front().second, 4.0, 1e-12);
  const CompositeLoss exact = composite_loss(u, std::nullopt, true, *problem, batch, tape, LossWeights{}, {});
  EXPECT_FALSE(exact.b.has_value());
}

TEST(AdaptSpec, FillsInputBoxAndRejectsPeriodicOnDarcy) {
  const auto darcy = make_problem("darcy2d-smooth-dirichlet");
  const ModelSpec s = adapt_spec(tiny_spec(), *darcy);
  EXPECT_EQ(s.input_dim, 2u);
  EXPECT_EQ(s.input_lo, darcy->domain().lo());
  ModelSpec p = tiny_spec();
  p.embedding.kind = EmbeddingKind::Periodic;
  EXPECT_THROW(adapt_spec(p, *darcy), std::invalid_argument);
  const auto ac = make_problem("allen-cahn");
  const ModelSpec q = adapt_spec(p, *ac);
  EXPECT_EQ(q.embedding.periodic_dims, std::vector<std::size_t>{1});
}

// ----- training loop -----

TEST(Train, ZeroStepsEvaluatesInitialModel) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const auto r = train(tiny_spec(), *problem, tiny_train(0), 0);
  EXPECT_EQ(r.report.status, RunStatus::Ok);
  EXPECT_EQ(r.report.steps_done, 0u);
  ASSERT_EQ(r.report.rows.size(), 1u);
  ASSERT_TRUE(r.report.rows[0].rel_l2.has_value());
  EXPECT_EQ(*r.report.rows[0].rel_l2, r.report.final_score.rel_l2);
  EXPECT_TRUE(r.report.final_score.flux_x.has_value());
  EXPECT_EQ(r.model.params(), Model::build(adapt_spec(tiny_spec(), *problem), 0).params());
}

TEST(Train, LossDecreasesAndRunIsDeterministic) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const Scorer scorer = Scorer::for_problem(*problem);
  const auto a = train(tiny_spec(), *problem, tiny_train(40), 3, &scorer);
  const auto b = train(tiny_spec(), *problem, tiny_train(40), 3, &scorer);
  ASSERT_EQ(a.report.rows.size(), 41u);
  EXPECT_LT(a.report.rows.back().total, 0.5 * a.report.rows.front().total);
  EXPECT_EQ(a.model.params(), b.model.params());
  EXPECT_EQ(a.report.config_hash, b.report.config_hash);
  for (std::size_t i = 0; i < a.report.rows.size(); ++i) EXPECT_EQ(a.report.rows[i].total, b.report.rows[i].total);
  const auto c = train(tiny_spec(), *problem, tiny_train(40), 4, &scorer);
  EXPECT_NE(a.report.config_hash, c.report.config_hash);
  EXPECT_NE(a.report.rows.back().total, c.report.rows.back().total);
}

TEST(Train, BalancingUpdatesOnSchedule) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const Scorer scorer = Scorer::for_problem(*problem);
  TrainConfig c = tiny_train(6);
  c.weights.update_period = 3;
  const auto r = train(tiny_spec(), *problem, c, 0, &scorer);
  const auto& rows = r.report.rows;
  EXPECT_NE(rows[0].lambda_b, 1.0);
  EXPECT_EQ(rows[1].lambda_b, rows[0].lambda_b);
  EXPECT_EQ(rows[2].lambda_b, rows[0].lambda_b);
  EXPECT_NE(rows[3].lambda_b, rows[2].lambda_b);
  EXPECT_EQ(rows[0].lambda_ic, 1.0);  // no initial term on a steady problem
  c.weights.balance = false;
  const auto off = train(tiny_spec(), *problem, c, 0, &scorer);
  for (const auto& row : off.report.rows) EXPECT_EQ(row.lambda_b, 1.0);
}

TEST(Train, TauStaysAboveFloor) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const Scorer scorer = Scorer::for_problem(*problem);
  TrainConfig c = tiny_train(5);
  c.schedule = constant_lr(10.0);
  const auto r = train(tiny_spec(), *problem, c, 0, &scorer);
  for (const auto& n : r.model.tau_names())
    for (double t : r.model.params().value(n).data()) EXPECT_GE(t, kMinTau);
}

TEST(Train, NumericAbortKeepsLastGoodParameters) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const Scorer scorer = Scorer::for_problem(*problem);
  TrainConfig c = tiny_train(50);
  c.schedule = constant_lr(1e200);
  const auto r = train(tiny_spec(), *problem, c, 0, &scorer);
  EXPECT_EQ(r.report.status, RunStatus::NumericAbort);
  EXPECT_LT(r.report.steps_done, 50u);
  EXPECT_NE(r.report.message.find("step"), std::string::npos);
  for (const auto& p : r.model.params().params()) EXPECT_TRUE(p.value.all_finite()) << p.name;
  EXPECT_TRUE(std::isnan(r.report.rows.back().total));
}

TEST(Train, BudgetStopsEarlyWithPartialReport) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const Scorer scorer = Scorer::for_problem(*problem);
  TrainConfig c = tiny_train(100000);
  c.budget_seconds = 1e-9;
  const auto r = train(tiny_spec(), *problem, c, 0, &scorer);
  EXPECT_EQ(r.report.status, RunStatus::Budget);
  EXPECT_EQ(r.report.steps_done, 1u);
  ASSERT_TRUE(r.report.rows.back().rel_l2.has_value());
  EXPECT_EQ(r.report.rows.back().step, 1u);
}

TEST(Train, RegularizerPullsGatesTowardZero) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const Scorer scorer = Scorer::for_problem(*problem);
  TrainConfig c = tiny_train(20);
  c.weights.r = c.weights.b = 0.0;
  c.weights.balance = false;
  c.weights.p = 1.0;
  const auto r = train(tiny_spec(), *problem, c, 0, &scorer);
  const auto beta = r.model.beta_names();
  EXPECT_LT(r.model.params().value(beta[0]).item(), kBetaInit - 0.1);
  EXPECT_LT(r.report.rows.back().reg, r.report.rows.front().reg);
}

TEST(Train, ReportCsvLayout) {
  const auto problem = make_problem("darcy2d-smooth-dirichlet");
  const Scorer scorer = Scorer::for_problem(*problem);
  const auto r = train(tiny_spec(2), *problem, tiny_train(2), 0, &scorer);
  std::ostringstream os;
  write_report_csv(r.report, os);
  std::istringstream is(os.str());
  std::string line, header;
  std::size_t comments = 0, rows = 0;
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) == 0) {
      ++comments;
    } else if (header.empty()) {
      header = line;
    } else {
      ++rows;
      EXPECT_EQ(std::count(line.begin(), line.end(), ','), std::count(header.begin(), header.end(), ','));
    }
  }
  EXPECT_GE(comments, 8u);
  EXPECT_EQ(rows, 3u);
  EXPECT_EQ(header,
            "step,loss,loss_ic,loss_b,loss_r,loss_reg,lambda_ic,lambda_b,lambda_r,lr,rel_l2,flux_x_rel_l2,"
            "phi_alpha0,phi_beta0,phi_alpha1,phi_beta1");
  EXPECT_NE(os.str().find("# final_rel_l2: "), std::string::npos);
  EXPECT_NE(os.str().find("# status: ok"), std::string::npos);
}

TEST(Train, RecordCarriesSweepAxes) {
  RunReport rep;
  rep.problem_id = "p";
  rep.model_kind = "hyres";
  rep.steps_done = 12;
  rep.final_score.rel_l2 = 0.5;
  const MetricRecord m = rep.record(3, 1000);
  EXPECT_EQ(m.depth, 3u);
  EXPECT_EQ(m.collocation, 1000u);
  EXPECT_EQ(m.steps, 12u);
  EXPECT_EQ(m.rel_l2, 0.5);
}

// ----- configuration -----

TEST(TrainConfigJson, RoundTrip) {
  TrainConfig c = tiny_train(123);
  c.minibatch = true;
  c.points = {256, 0, 128};
  c.causal.chunks = 16;
  c.weights.ema_decay = 0.5;
  c.oracle = OracleSettings{128, 5e-4, uniform_times(1.0, 11)};
  const nlohmann::json j = c;
  const TrainConfig back = j.get<TrainConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(back.steps, 123u);
  EXPECT_EQ(back.oracle->modes, 128u);
}

TEST(TrainConfigJson, RejectsUnknownAndInvalidFields) {
  auto err = [](const nlohmann::json& j) {
    try {
      (void)j.get<TrainConfig>();
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(err({{"stepz", 3}}).find("stepz"), std::string::npos);
  EXPECT_NE(err({{"weights", {{"lambda", 1}}}}).find("lambda"), std::string::npos);
  EXPECT_NE(err({{"schedule", {{"decay_rate", 0.0}}}}).find("decay_rate"), std::string::npos);
  EXPECT_NE(err({{"causal", {{"chunks", 0}}}}).find("chunks"), std::string::npos);
  EXPECT_NE(err({{"steps", "many"}}).find("steps"), std::string::npos);
}

TEST(RunConfigJson, RoundTripAndValidation) {
  RunConfig c;
  c.name = "demo";
  c.problem = "allen-cahn";
  c.seeds = {0, 1, 2};
  c.model = tiny_spec();
  c.train = tiny_train(10);
  const nlohmann::json j = c;
  const RunConfig back = j.get<RunConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  nlohmann::json bad = j;
  bad["problem"] = "heat";
  EXPECT_THROW((void)bad.get<RunConfig>(), std::invalid_argument);
  bad = j;
  bad["seeds"] = nlohmann::json::array();
  EXPECT_THROW((void)bad.get<RunConfig>(), std::invalid_argument);
  bad = j;
  bad["extra"] = 1;
  EXPECT_THROW((void)bad.get<RunConfig>(), std::invalid_argument);
}
