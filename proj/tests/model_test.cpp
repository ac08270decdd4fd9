#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hyres/autodiff/grad.hpp"
#include "hyres/model/checkpoint.hpp"
#include "hyres/model/model.hpp"

using namespace hyres;

namespace {

ModelSpec hyres_spec(std::size_t blocks = 2, std::size_t p = 8, std::size_t nc = 16) {
  ModelSpec s;
  s.kind = ArchKind::HyRes;
  s.input_dim = 2;
  s.input_lo = {0.0, 0.0};
  s.input_hi = {1.0, 1.0};
  for (std::size_t l = 0; l < blocks; ++l) s.blocks.push_back({p, nc, 2, p});
  s.head_depth = 2;
  s.head_width = p;
  return s;
}

ModelSpec ac_spec(ArchKind kind, std::uint64_t) {
  ModelSpec s = hyres_spec(2, 8, 16);
  s.kind = kind;
  s.input_lo = {0.0, -1.0};
  s.input_hi = {1.0, 1.0};
  s.embedding.kind = kind == ArchKind::Expert ? EmbeddingKind::FourierPeriodic : EmbeddingKind::Periodic;
  s.embedding.fourier_count = 8;
  s.embedding.periodic_dims = {1};
  s.embedding.period_lengths = {2.0};
  s.mlp_depth = 4;
  s.mlp_width = 8;
  return s;
}

Array random_points(std::size_t n, std::size_t d, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Array a(n, d);
  for (double& v : a.data()) v = u(rng);
  return a;
}

/// A store bound as constants with the given overrides applied.
Model with_values(Model m, const std::vector<std::pair<std::string, double>>& fills) {
  for (const auto& [name, v] : fills)
    for (double& x : m.params().value(name).data()) x = v;
  return m;
}

}  // namespace

// ----- Wendland kernel -----

TEST(Wendland, ClosedFormValues) {
  Array tau(1, 4, 0.7);
  Array r{{0.0, 0.7, 1.4, 0.35}};
  Array k = wendland_c4(r, tau);
  EXPECT_DOUBLE_EQ(k(0, 0), 3.0);
  EXPECT_EQ(k(0, 1), 0.0);
  EXPECT_EQ(k(0, 2), 0.0);
  EXPECT_NEAR(k(0, 3), 0.32421875, 1e-15);
  EXPECT_THROW(wendland_c4(r, Array(1, 4, 0.0)), std::invalid_argument);
  EXPECT_THROW(wendland_c4(r, Array(1, 4, -1.0)), std::invalid_argument);
}

TEST(Wendland, SmoothAtSupportEdge) {
  const double tau = 1.3;
  Tape t;
  Var r = t.variable(Array::scalar(tau * (1 - 1e-6)));
  Var T = t.variable(Array::scalar(tau));
  auto g = grad(wendland_c4(r, T), std::vector<Var>{r, T});
  EXPECT_LT(std::abs(g[0].item()), 1e-3);
  EXPECT_LT(std::abs(g[1].item()), 1e-3);
}

TEST(Wendland, DerivativesMatchClosedForm) {
  // psi'(r) = -56 r (1 - s)^5 (5 s + 1) / tau^2 with s = r / tau.
  const double tau = 0.9;
  for (double s : {0.1, 0.4, 0.8}) {
    Tape t;
    Var r = t.variable(Array::scalar(s * tau));
    auto g = grad(wendland_c4(r, t.constant(Array::scalar(tau))), std::vector<Var>{r});
    const double want = -56 * s * tau * std::pow(1 - s, 5) * (5 * s + 1) / (tau * tau);
    EXPECT_NEAR(g[0].item(), want, 1e-12);
  }
}

// ----- embeddings -----

TEST(Embed, PeriodicEndpointsIdentical) {
  EmbeddingSpec spec;
  spec.kind = EmbeddingKind::Periodic;
  spec.periodic_dims = {1};
  spec.period_lengths = {2.0};
  ParamStore store;
  Tape t;
  BoundParams bp(store, t);
  Var e = embed(t.constant(Array{{0.3, -1.0}, {0.3, 1.0}}), spec, bp);
  ASSERT_EQ(e.cols(), 3u);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(e.value()(0, c), e.value()(1, c), 1e-15);
}

TEST(Embed, FourierBounded) {
  ModelSpec s = hyres_spec();
  s.embedding.kind = EmbeddingKind::Fourier;
  s.embedding.fourier_count = 16;
  s.input_lo.clear();
  s.input_hi.clear();
  Model m = Model::build(s, 3);
  Tape t;
  BoundParams bp(m.params(), t);
  Var e = embed(t.constant(random_points(50, 2, 1, -100, 100)), s.embedding, bp);
  EXPECT_EQ(e.cols(), 32u);
  for (double v : e.value().data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Embed, IdentityIsExact) {
  ParamStore store;
  Tape t;
  BoundParams bp(store, t);
  Array x = random_points(7, 3, 2);
  EXPECT_EQ(embed(t.constant(x), EmbeddingSpec{}, bp).value(), x);
}

TEST(Embed, MissingPeriodRejected) {
  EmbeddingSpec spec;
  spec.kind = EmbeddingKind::Periodic;
  spec.periodic_dims = {1};
  EXPECT_THROW(spec.validate(2), std::invalid_argument);
  spec.kind = EmbeddingKind::Fourier;
  spec.fourier_scale = 0.0;
  EXPECT_THROW(spec.validate(2), std::invalid_argument);
}

// ----- RBF layer -----

TEST(RbfNet, CoincidentQueryPicksOneCenter) {
  Tape t;
  Var c = t.constant(Array{{0.0, 0.0}, {5.0, 5.0}});
  Var tau = t.variable(Array{{1.0, 1.0}});
  Var W = t.variable(Array{{1.0, -2.0}, {4.0, 7.0}});
  Var y = rbf_net_forward(t.constant(Array{{5.0, 5.0}}), c, tau, W);
  EXPECT_EQ(y.value(), (Array{{12.0, 21.0}}));
}

TEST(RbfNet, OutsideSupportIsZero) {
  Tape t;
  Var y = rbf_net_forward(t.constant(Array{{10.0, 10.0}, {-3.0, 0.0}}), t.constant(Array{{0.0, 0.0}, {1.0, 1.0}}),
                          t.variable(Array{{1.0, 2.0}}), t.variable(Array{{1.0}, {1.0}}));
  EXPECT_EQ(y.value(), Array(2, 1, 0.0));
}

TEST(RbfNet, HandSetDistances) {
  // Query 0 sits on center 0 and tau/2 from center 1; query 1 the reverse.
  const double tau = 2.0;
  Tape t;
  Var c = t.constant(Array{{0.0}, {1.0}});
  Var y = rbf_net_forward(t.constant(Array{{0.0}, {1.0}}), c, t.variable(Array{{tau, tau}}),
                          t.variable(Array{{1.0, 0.0}, {0.0, 1.0}}));
  EXPECT_NEAR(y.value()(0, 0), 3.0, 1e-15);
  EXPECT_NEAR(y.value()(0, 1), 0.32421875, 1e-15);
  EXPECT_NEAR(y.value()(1, 0), 0.32421875, 1e-15);
  EXPECT_NEAR(y.value()(1, 1), 3.0, 1e-15);
}

TEST(RbfNet, DimensionMismatch) {
  Tape t;
  EXPECT_THROW(rbf_net_forward(t.constant(Array(1, 3)), t.constant(Array(2, 2)), t.variable(Array(1, 2, 1.0)),
                               t.variable(Array(2, 1))),
               ShapeError);
}

// ----- dense layers -----

TEST(Dense, ZeroInputZeroBias) {
  ParamStore s;
  s.add("l.W", Array{{0.3, -1.0}}, "test");
  s.add("l.b", Array(1, 2), "test");
  Tape t;
  BoundParams bp(s, t);
  EXPECT_EQ(dense_forward(t.constant(Array(4, 1)), bp, "l", true).value(), Array(4, 2, 0.0));
}

TEST(Dense, RwfWithZeroScaleIsBaseMatrix) {
  ParamStore s;
  s.add("l.V", Array{{0.3, -1.0}, {2.0, 0.5}}, "test");
  s.add("l.g", Array(1, 2, 0.0), "test");
  s.add("l.b", Array(1, 2), "test");
  Tape t;
  BoundParams bp(s, t);
  Array x{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_EQ(dense_forward(t.constant(x), bp, "l", false).value(), s.value("l.V"));
}

TEST(Dense, SingleTanhUnit) {
  ParamStore s;
  s.add("l.W", Array{{1.0}}, "test");
  s.add("l.b", Array{{0.0}}, "test");
  Tape t;
  BoundParams bp(s, t);
  EXPECT_NEAR(dense_forward(t.constant(Array{{0.5}}), bp, "l", true).value().item(), 0.46211715726000974, 1e-15);
}

TEST(Dense, RwfInitMatchesGlorotScale) {
  ModelSpec s = hyres_spec(0, 64, 8);
  s.head_depth = 2;
  Model m = Model::build(s, 4);
  const Array& V = m.params().value("head.0.V");
  const Array& g = m.params().value("head.0.g");
  double mg = 0.0, ss = 0.0;
  for (double v : g.data()) mg += v / g.size();
  for (std::size_t i = 0; i < V.rows(); ++i)
    for (std::size_t j = 0; j < V.cols(); ++j) ss += std::pow(V(i, j) * std::exp(g(0, j)), 2);
  EXPECT_NEAR(mg, 1.0, 0.05);
  EXPECT_NEAR(std::sqrt(ss / V.size()), std::sqrt(2.0 / 128), 0.02);
}

// ----- hybrid block and full model -----

namespace {

struct BlockOut {
  Array out, rbf, nn;
};

BlockOut run_block(double alpha) {
  Model m = with_values(Model::build(hyres_spec(1), 5), {{"block0.alpha", alpha}});
  Tape t;
  BoundParams bp(m.params(), t);
  ForwardTrace tr;
  m.forward(bp, t.constant(random_points(20, 2, 6)), &tr);
  return {tr.blocks[0].output, tr.blocks[0].rbf, tr.blocks[0].nn};
}

}  // namespace

TEST(HybridBlock, GateSaturatesToRbf) {
  auto b = run_block(38.0);
  for (std::size_t i = 0; i < b.out.size(); ++i) EXPECT_NEAR(b.out[i], std::tanh(b.rbf[i]), 1e-15);
}

TEST(HybridBlock, GateSaturatesToNn) {
  auto b = run_block(-38.0);
  for (std::size_t i = 0; i < b.out.size(); ++i) EXPECT_NEAR(b.out[i], std::tanh(b.nn[i]), 1e-15);
}

TEST(HybridBlock, ZeroGateIsEqualWeighting) {
  auto b = run_block(0.0);
  for (std::size_t i = 0; i < b.out.size(); ++i) EXPECT_NEAR(b.out[i], std::tanh(0.5 * b.rbf[i] + 0.5 * b.nn[i]), 1e-15);
}

TEST(HybridBlock, InitialGates) {
  Model m = Model::build(hyres_spec(3), 1);
  for (const auto& n : m.alpha_names()) EXPECT_EQ(phi(m.params().value(n).item()), 0.5);
  for (const auto& n : m.beta_names()) EXPECT_NEAR(phi(m.params().value(n).item()), 0.999, 1e-7);
}

TEST(HyRes, SaturatedBetaDropsSkip) {
  Model m = with_values(Model::build(hyres_spec(2), 7), {{"block0.beta", 38.0}, {"block1.beta", 38.0}});
  Tape t;
  BoundParams bp(m.params(), t);
  ForwardTrace tr;
  m.forward(bp, t.constant(random_points(10, 2, 8)), &tr);
  for (const auto& b : tr.blocks)
    for (std::size_t i = 0; i < b.skip.size(); ++i) EXPECT_NEAR(b.skip[i], b.output[i], 1e-15);
}

TEST(HyRes, ClosedBetaIsPureSkip) {
  Model m = with_values(Model::build(hyres_spec(2), 7), {{"block0.beta", -38.0}, {"block1.beta", -38.0}});
  Model none = Model::build(hyres_spec(0), 7);
  Tape t;
  BoundParams bp(m.params(), t);
  ForwardTrace tr;
  Array x = random_points(10, 2, 8);
  Var y = m.forward(bp, t.constant(x), &tr);
  for (std::size_t i = 0; i < tr.abar0.size(); ++i) EXPECT_NEAR(tr.blocks[1].skip[i], tr.abar0[i], 1e-15);
  // Same output as the head applied to abar0 directly.
  Tape t2;
  BoundParams bp2(m.params(), t2);
  Var head = mlp_forward(t2.constant(tr.abar0), bp2, "head", 2);
  for (std::size_t i = 0; i < y.value().size(); ++i) EXPECT_NEAR(y.value()[i], head.value()[i], 1e-14);
}

TEST(HyRes, NoBlocksIsAnMlp) {
  Model m = Model::build(hyres_spec(0), 3);
  EXPECT_EQ(m.block_count(), 0u);
  Array x = random_points(5, 2, 4);
  Tape t;
  BoundParams bp(m.params(), t);
  Var z = add_row(mul_row(t.constant(x), t.constant(Array{{2.0, 2.0}})), t.constant(Array{{-1.0, -1.0}}));
  Var want = mlp_forward(dense_forward(z, bp, "proj", true), bp, "head", 2);
  EXPECT_EQ(m.predict(x), want.value());
}

TEST(HyRes, WidthMismatchRejectedAtBuild) {
  ModelSpec s = hyres_spec(2);
  s.blocks[1].width = 9;
  EXPECT_THROW(Model::build(s, 1), std::invalid_argument);
}

TEST(HyRes, TauStartsAtTwicePoissonRadius) {
  Model m = Model::build(hyres_spec(1, 8, 32), 2);
  const Array& tau = m.params().value("block0.rbf.tau");
  const Array& c = m.params().value("block0.rbf.centers");
  double dmin = INFINITY;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = i + 1; j < c.rows(); ++j) dmin = std::min(dmin, std::hypot(c(i, 0) - c(j, 0), c(i, 1) - c(j, 1)));
  for (double v : tau.data()) EXPECT_NEAR(v, 2 * dmin, 1e-12);
}

// ----- baselines -----

TEST(Baseline, PinnZeroWeightsGivesBias) {
  ModelSpec s;
  s.kind = ArchKind::Pinn;
  s.rwf = false;
  s.mlp_depth = 2;
  s.mlp_width = 4;
  Model m = with_values(Model::build(s, 1), {{"mlp.0.W", 0.0}, {"mlp.1.W", 0.0}, {"mlp.1.b", 0.25}});
  EXPECT_EQ(m.predict(random_points(3, 2, 1)), Array(3, 1, 0.25));
}

TEST(Baseline, ResPinnZeroBranchIsIdentity) {
  ModelSpec s;
  s.kind = ArchKind::ResPinn;
  s.rwf = false;
  s.mlp_depth = 6;
  s.mlp_width = 5;
  Model m = Model::build(s, 1);
  std::vector<std::pair<std::string, double>> zero;
  for (const char* n : {"res0.0.W", "res0.0.b", "res0.1.W", "res0.1.b", "res1.0.W", "res1.0.b", "res1.1.W", "res1.1.b"})
    zero.emplace_back(n, 0.0);
  m = with_values(m, zero);
  Array x = random_points(4, 2, 2);
  Tape t;
  BoundParams bp(m.params(), t);
  Var want = dense_forward(dense_forward(t.constant(x), bp, "in", true), bp, "out", false);
  EXPECT_EQ(m.predict(x), want.value());
}

TEST(Baseline, RbfNetFarFromCentersIsZero) {
  ModelSpec s;
  s.kind = ArchKind::RbfNet;
  s.blocks = {{1, 16, 1, 1}};
  Model m = Model::build(s, 1);
  EXPECT_EQ(m.predict(Array{{40.0, 40.0}, {-40.0, 3.0}}), Array(2, 1, 0.0));
}

TEST(Baseline, ExpertUsesFourierAndRwf) {
  Model m = Model::build(ac_spec(ArchKind::Expert, 1), 1);
  EXPECT_TRUE(m.params().contains("embed.B"));
  EXPECT_TRUE(m.params().contains("mlp.0.g"));
  EXPECT_FALSE(m.params().at("embed.B").trainable);
}

TEST(Baseline, UnknownKindRejected) {
  EXPECT_THROW(arch_kind_from_string("pirate"), std::invalid_argument);
  nlohmann::json j = {{"kind", "stacked"}};
  ModelSpec s;
  EXPECT_THROW(from_json(j, s), std::invalid_argument);
}

// ----- invariants -----

TEST(ModelProperty, ConvexityAndBoundednessOnRandomModels) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gate(0.0, 4.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Model m = Model::build(hyres_spec(3, 6, 12), seed);
    for (const auto& n : m.alpha_names()) m.params().value(n)[0] = gate(rng);
    for (const auto& n : m.beta_names()) m.params().value(n)[0] = gate(rng);
    Tape t;
    BoundParams bp(m.params(), t);
    ForwardTrace tr;
    m.forward(bp, t.constant(random_points(30, 2, seed, -0.5, 1.5)), &tr);
    for (double v : tr.abar0.data()) ASSERT_LE(std::abs(v), 1.0);
    for (const auto& b : tr.blocks)
      for (std::size_t i = 0; i < b.mixed.size(); ++i) {
        ASSERT_GE(b.mixed[i], std::min(b.rbf[i], b.nn[i]) - 1e-12);
        ASSERT_LE(b.mixed[i], std::max(b.rbf[i], b.nn[i]) + 1e-12);
        ASSERT_LE(std::abs(b.skip[i]), 1.0);
      }
  }
  for (double a : {-30.0, -1.0, 0.0, 0.3, 17.0}) EXPECT_EQ(phi(a) + (1.0 - phi(a)), 1.0);
}

TEST(ModelProperty, CompactSupportZeroCoefficientGradient) {
  Tape t;
  Var c = t.constant(Array{{0.0, 0.0}, {3.0, 0.0}});
  Var tau = t.variable(Array{{1.0, 1.0}});
  Var W = t.variable(Array{{1.0, 2.0}, {3.0, 4.0}});
  Var y = rbf_net_forward(t.constant(Array{{0.2, 0.1}, {0.0, 0.9}}), c, tau, W);
  auto g = grad(sum(pow_int(y, 2)), std::vector<Var>{W, tau});
  EXPECT_EQ(g[0](1, 0), 0.0);
  EXPECT_EQ(g[0](1, 1), 0.0);
  EXPECT_EQ(g[1](0, 1), 0.0);
  EXPECT_NE(g[0](0, 0), 0.0);
}

TEST(ModelProperty, GateGradientMatchesFiniteDifferences) {
  Model m = Model::build(hyres_spec(2, 6, 12), 9);
  m.params().value("block0.alpha")[0] = 0.4;
  m.params().value("block1.beta")[0] = -0.7;
  Array x = random_points(15, 2, 3);
  auto loss = [&](const Model& mm) {
    Array y = mm.predict(x);
    double s = 0.0;
    for (double v : y.data()) s += v * v;
    return s;
  };
  Tape t;
  BoundParams bp(m.params(), t);
  Var y = m.forward(bp, t.constant(x));
  const std::vector<std::string> names{"block0.alpha", "block1.alpha", "block0.beta", "block1.beta"};
  std::vector<Var> wrt;
  for (const auto& n : names) wrt.push_back(bp(n));
  auto g = grad(sum(pow_int(y, 2)), wrt);
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double h = 1e-6;
    Model p = m, q = m;
    p.params().value(names[k])[0] += h;
    q.params().value(names[k])[0] -= h;
    const double fd = (loss(p) - loss(q)) / (2 * h);
    EXPECT_NEAR(g[k].item(), fd, 1e-6 * std::max(1.0, std::abs(fd))) << names[k];
  }
}

TEST(ModelProperty, PeriodicExactnessForAllenCahnModels) {
  for (ArchKind kind : {ArchKind::HyRes, ArchKind::Expert}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Model m = Model::build(ac_spec(kind, seed), seed);
      Array ts = random_points(16, 1, seed + 100);
      Array x(32, 2);
      for (std::size_t i = 0; i < 16; ++i) {
        x(i, 0) = x(i + 16, 0) = ts[i];
        x(i, 1) = -1.0;
        x(i + 16, 1) = 1.0;
      }
      Tape t;
      BoundParams bp(m.params(), t, false);
      Var in = t.variable(x);
      Var u = m.forward(bp, in);
      Var ux = jacobian_column(u, in, 1);
      for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_NEAR(u.value()[i], u.value()[i + 16], 1e-12);
        EXPECT_NEAR(ux.value()[i], ux.value()[i + 16], 1e-12);
      }
    }
  }
}

TEST(ModelProperty, BuildIsDeterministic) {
  for (ArchKind kind : {ArchKind::HyRes, ArchKind::Pinn, ArchKind::ResPinn, ArchKind::Expert, ArchKind::RbfNet}) {
    ModelSpec s = ac_spec(kind, 0);
    if (kind == ArchKind::RbfNet) s.blocks.resize(1);
    EXPECT_TRUE(Model::build(s, 42).params() == Model::build(s, 42).params()) << to_string(kind);
    EXPECT_FALSE(Model::build(s, 42).params() == Model::build(s, 43).params()) << to_string(kind);
  }
}

// ----- serialization -----

TEST(Checkpoint, BitwiseRoundTrip) {
  Model m = Model::build(ac_spec(ArchKind::HyRes, 0), 5);
  m.params().value("block0.alpha")[0] = -0.0;
  m.params().value("head.0.b")[0] = 1e-310;
  std::stringstream ss;
  save_checkpoint(m, ss);
  Model back = load_checkpoint(ss);
  EXPECT_TRUE(back.params() == m.params());
  EXPECT_EQ(back.seed(), 5u);
  EXPECT_EQ(nlohmann::json(back.spec()), nlohmann::json(m.spec()));
}

TEST(Checkpoint, RejectsMismatchedParameters) {
  Model m = Model::build(hyres_spec(1), 5);
  std::stringstream ss;
  save_checkpoint(m, ss);
  auto j = nlohmann::json::parse(ss);
  j["params"].erase(j["params"].size() - 1);
  std::stringstream bad(j.dump());
  EXPECT_THROW(load_checkpoint(bad), std::invalid_argument);
  std::stringstream junk("{\"format\": \"other\"}");
  EXPECT_THROW(load_checkpoint(junk), std::invalid_argument);
}

TEST(Checkpoint, HexfloatRoundTrip) {
  for (double v : {0.1, -3.0, 1e-300, 6.02214076e23, -0.0})
    EXPECT_EQ(std::bit_cast<std::uint64_t>(parse_hexfloat(hexfloat(v))), std::bit_cast<std::uint64_t>(v));
}

TEST(ModelSpecJson, RoundTripAndFieldErrors) {
  ModelSpec s = ac_spec(ArchKind::HyRes, 0);
  nlohmann::json j = s;
  ModelSpec back;
  from_json(j, back);
  EXPECT_EQ(nlohmann::json(back), j);
  j["blocks"][0]["widht"] = 3;
  try {
    from_json(j, back);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("block.widht"), std::string::npos);
  }
}
