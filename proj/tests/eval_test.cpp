#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include "hyres/eval/metrics.hpp"

using namespace hyres;

namespace {

Field darcy_exact_field(DarcyCase c) {
  switch (c) {
    case DarcyCase::Smooth2d: return [](const Var& x) { return sin(col(x, 0)) * sin(col(x, 1)); };
    case DarcyCase::Smooth3d: return [](const Var& x) { return sin(col(x, 0)) * sin(col(x, 1)) * sin(col(x, 2)); };
    case DarcyCase::FiveStrip: return [](const Var& x) { return shift(neg(col(x, 0)), 1.0); };
  }
  return {};
}

Field constant_field(double c) {
  return [c](const Var& x) { return x.tape().constant(Array(x.rows(), 1, c)); };
}

MetricRecord record(const std::string& kind, std::uint64_t seed, double err, std::size_t depth) {
  MetricRecord r;
  r.problem_id = "allen-cahn";
  r.model_kind = kind;
  r.seed = seed;
  r.rel_l2 = err;
  r.depth = depth;
  r.steps = 1000;
  r.wall_clock = 10.0 + static_cast<double>(seed);
  return r;
}

}  // namespace

TEST(RelativeL2, Examples) {
  Array truth{{1.0}, {-2.0}, {3.0}, {0.5}};
  EXPECT_EQ(relative_l2(truth, truth), 0.0);
  Array twice = truth;
  for (double& v : twice.data()) v *= 2.0;
  EXPECT_DOUBLE_EQ(relative_l2(twice, truth), 1.0);
  double norm = 0.0;
  for (double v : truth.data()) norm += v * v;
  norm = std::sqrt(norm);
  Array shifted = truth;
  for (double& v : shifted.data()) v += norm * 0.1 / 2.0;  // sqrt(M) = 2
  EXPECT_NEAR(relative_l2(shifted, truth), 0.1, 1e-15);
}

TEST(RelativeL2, Errors) {
  EXPECT_THROW(relative_l2(Array(3, 1, 1.0), Array(3, 1, 0.0)), std::invalid_argument);
  EXPECT_THROW(relative_l2(Array(3, 1, 1.0), Array(4, 1, 1.0)), ShapeError);
}

TEST(RelativeL2, LinearInErrorScale) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  Array truth(50, 1), e(50, 1);
  for (std::size_t i = 0; i < 50; ++i) truth[i] = n(rng), e[i] = n(rng);
  auto at = [&](double c) {
    Array p = truth;
    for (std::size_t i = 0; i < 50; ++i) p[i] += c * e[i];
    return relative_l2(p, truth);
  };
  const double base = at(1.0);
  for (double c : {-3.0, 0.25, 7.0}) EXPECT_NEAR(at(c), std::abs(c) * base, 1e-13 * std::abs(c));
}

TEST(FluxError, ExactFieldGivesZero) {
  for (const char* id : {"darcy2d-smooth-dirichlet", "darcy2d-rough-neumann"}) {
    auto p = std::dynamic_pointer_cast<const Darcy>(make_problem(id));
    const Array grid = eval_grid(p->domain(), {41, 41});
    for (const auto& e : flux_error(darcy_exact_field(p->darcy_case()), *p, grid))
      if (e) {
        EXPECT_LT(*e, 1e-14) << id;
      }
  }
}

TEST(FluxError, ZeroModelOnFiveStrip) {
  auto p = make_problem("darcy2d-rough-neumann");
  const auto e = flux_error(constant_field(0.0), *p, eval_grid(p->domain(), {50, 50}));
  ASSERT_EQ(e.size(), 2u);
  EXPECT_DOUBLE_EQ(*e[0], 1.0);
  EXPECT_FALSE(e[1].has_value());
}

TEST(FluxError, KnownPerturbation) {
  auto p = make_problem("darcy2d-smooth-dirichlet");
  const Array grid = eval_grid(p->domain(), {60, 60});
  const double eps = 0.03;
  const Field u = [eps](const Var& x) { return sin(col(x, 0)) * sin(col(x, 1)) + scale(col(x, 0), eps); };
  double qq = 0.0;
  for (std::size_t i = 0; i < grid.rows(); ++i) qq += std::pow(std::cos(grid(i, 0)) * std::sin(grid(i, 1)), 2);
  const double want = eps * std::sqrt(static_cast<double>(grid.rows()) / qq);
  const auto e = flux_error(u, *p, grid);
  EXPECT_NEAR(*e[0], want, 1e-12);
  EXPECT_LT(*e[1], 1e-14);
}

TEST(FluxRows, RoughBandExcluded) {
  auto p = make_problem("darcy2d-rough-neumann");
  Array grid{{0.5, 0.1}, {0.5, 0.2015}, {0.5, 0.203}, {0.5, 0.7981}};
  EXPECT_EQ(flux_rows(*p, grid), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(flux_rows(*make_problem("darcy2d-smooth-dirichlet"), grid).size(), 4u);
}

TEST(InterfaceJump, ExactFieldJumps) {
  auto p = make_problem("darcy2d-rough-neumann");
  const auto j = interface_jump(darcy_exact_field(DarcyCase::FiveStrip), *p, 32);
  ASSERT_EQ(j.size(), 4u);
  const double want[] = {10, 5, 9, 8};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(j[k].normal, 0.0, 1e-10);
    EXPECT_NEAR(j[k].tangential, want[k], 1e-10);
  }
}

TEST(InterfaceJump, ConstantModelHasNoJumps) {
  auto p = make_problem("darcy2d-rough-neumann");
  for (const auto& j : interface_jump(constant_field(2.0), *p, 8)) {
    EXPECT_EQ(j.normal, 0.0);
    EXPECT_EQ(j.tangential, 0.0);
  }
}

TEST(InterfaceJump, SwappingSidesFlipsSign) {
  auto p = make_problem("darcy2d-rough-neumann");
  const Field u = [](const Var& x) { return sin(scale(col(x, 0), 3.0)) * col(x, 1) + col(x, 1) * col(x, 1); };
  const auto a = interface_jump(u, *p, 16), b = interface_jump(u, *p, 16, -kInterfaceOffset);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(a[k].tangential_signed, -b[k].tangential_signed, 1e-12);
    EXPECT_NEAR(a[k].normal_signed, -b[k].normal_signed, 1e-12);
    EXPECT_NEAR(a[k].tangential, b[k].tangential, 1e-12);
    EXPECT_NEAR(a[k].normal, b[k].normal, 1e-12);
  }
  EXPECT_THROW(interface_jump(u, *make_problem("darcy2d-smooth-dirichlet"), 4), std::invalid_argument);
}

TEST(Scorer, DarcyExactFieldScoresZero) {
  auto p = make_problem("darcy2d-smooth-dirichlet");
  const auto s = Scorer::for_problem(*p);
  EXPECT_TRUE(s.scores_flux());
  const auto score = s.score(darcy_exact_field(DarcyCase::Smooth2d), s.truth());
  EXPECT_EQ(score.rel_l2, 0.0);
  EXPECT_LT(*score.flux_x, 1e-14);
  for (std::size_t i = 0; i < s.grid().rows(); ++i) {
    const double r = std::hypot(s.grid()(i, 0), s.grid()(i, 1));
    EXPECT_TRUE(r >= 1.0 && r <= 2.0);
  }
}

TEST(Scorer, OracleProblemsUseSpectralNodes) {
  const auto dir = std::filesystem::temp_directory_path() / "hyres-eval-test-cache";
  ::setenv("HYRES_CACHE_DIR", dir.c_str(), 1);
  OracleSettings small{64, 1e-3, uniform_times(1.0, 11)};
  auto ac = make_problem("allen-cahn");
  const auto s = Scorer::for_problem(*ac, small);
  EXPECT_EQ(s.grid().rows(), 11u * 64u);
  EXPECT_FALSE(s.scores_flux());
  EXPECT_FALSE(s.horizon());
  const auto sol = cached_oracle("allen-cahn", small);
  EXPECT_EQ(s.truth()[64 * 3 + 5], sol.field(3, 5));
  EXPECT_EQ(s.grid()(64 * 3 + 5, 1), sol.x[5]);

  auto ks = make_problem("ks-chaotic");
  const auto c = Scorer::for_problem(*ks, small);
  ASSERT_TRUE(c.horizon());
  EXPECT_DOUBLE_EQ(*c.horizon(), 0.5);
  EXPECT_EQ(c.grid().rows(), 6u * 64u);
  ::unsetenv("HYRES_CACHE_DIR");
  std::filesystem::remove_all(dir);
}

TEST(Aggregate, SingleRecordAndSeedMean) {
  auto t = aggregate_study({record("hyres", 0, 0.2, 2)}, StudyAxis::Depth);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].mean_rel_l2, 0.2);
  t = aggregate_study({record("hyres", 0, 0.2, 2), record("hyres", 1, 0.4, 2)}, StudyAxis::Depth);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(t.rows[0].mean_rel_l2, 0.3);
  EXPECT_EQ(t.rows[0].count, 2u);
}

TEST(Aggregate, FiveSeedCellIsTheMean) {
  std::vector<MetricRecord> rs;
  const double e[] = {1e-4, 2e-4, 3e-4, 4e-4, 5e-4};
  for (std::uint64_t s = 0; s < 5; ++s) rs.push_back(record("hyres", s, e[s], 2));
  EXPECT_NEAR(aggregate_study(rs, StudyAxis::Depth).rows[0].mean_rel_l2, 3e-4, 1e-18);
}

TEST(Aggregate, GroupsByKindAndAxis) {
  std::vector<MetricRecord> rs{record("hyres", 0, 0.1, 1), record("hyres", 0, 0.05, 3), record("pinn", 0, 0.3, 1),
                               record("hyres", 1, 0.3, 1)};
  auto t = aggregate_study(rs, StudyAxis::Depth);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0].model_kind, "hyres");
  EXPECT_EQ(t.rows[0].axis_value, 1.0);
  EXPECT_DOUBLE_EQ(t.rows[0].mean_rel_l2, 0.2);
  EXPECT_EQ(t.rows[1].axis_value, 3.0);
  EXPECT_EQ(t.rows[2].model_kind, "pinn");
  auto w = aggregate_study(rs, StudyAxis::WallClock);
  ASSERT_EQ(w.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(w.rows[0].axis_value, (10.0 + 10.0 + 11.0) / 3.0);
}

TEST(Aggregate, PermutationInvariant) {
  std::vector<MetricRecord> rs;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t s = 0; s < 12; ++s) rs.push_back(record(s % 2 ? "hyres" : "pinn", s, u(rng), 1 + s % 3));
  auto a = aggregate_study(rs, StudyAxis::Depth);
  std::shuffle(rs.begin(), rs.end(), rng);
  auto b = aggregate_study(rs, StudyAxis::Depth);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].mean_rel_l2, b.rows[i].mean_rel_l2);
}

TEST(Aggregate, MixedProblemsRejected) {
  auto other = record("hyres", 0, 0.1, 1);
  other.problem_id = "ks-regular";
  EXPECT_THROW(aggregate_study({record("hyres", 0, 0.1, 1), other}, StudyAxis::Depth), std::invalid_argument);
  EXPECT_THROW(aggregate_study({}, StudyAxis::Depth), std::invalid_argument);
  EXPECT_THROW(study_axis_from_string("epochs"), std::invalid_argument);
  EXPECT_EQ(study_axis_from_string("collocation-count"), StudyAxis::Collocation);
}

TEST(Aggregate, CsvLayout) {
  auto t = aggregate_study({record("hyres", 0, 0.25, 2)}, StudyAxis::Depth);
  std::ostringstream os;
  write_study_csv(t, os);
  EXPECT_EQ(os.str(),
            "# study problem=allen-cahn axis=depth columns: model kind, axis value, mean rel-L2 over seeds, mean "
            "flux-x rel-L2 (blank if absent), seed count\n"
            "model_kind,depth,rel_l2,flux_x_rel_l2,seeds\nhyres,2,0.25,,1\n");
}

TEST(Spearman, Examples) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 35, 100}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 1, 2, 2}), 2.0 / std::sqrt(5.0), 1e-15);
  EXPECT_THROW(spearman({1}, {1}), std::invalid_argument);
}

TEST(ConfigHash, DeterministicAndOrderFree) {
  nlohmann::json a = {{"x", 1}, {"y", {1, 2}}};
  nlohmann::json b;
  b["y"] = {1, 2};
  b["x"] = 1;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b["x"] = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
}
