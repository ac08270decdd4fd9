#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hyres/fingerprint.hpp"
#include "hyres/model/checkpoint.hpp"

namespace hyres::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_double(const json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

RunStatus status_from_string(const std::string& s) {
  for (RunStatus r : {RunStatus::Ok, RunStatus::NumericAbort, RunStatus::Budget})
    if (to_string(r) == s) return r;
  throw std::invalid_argument("unknown run status '" + s + "'");
}

std::string run_hash(const RunConfig& config, const PdeProblem& problem, std::uint64_t seed) {
  return config_hash(
      {{"problem", problem.id()}, {"model", adapt_spec(config.model, problem)}, {"train", config.train}, {"seed", seed}});
}

json summary_json(const RunReport& r) {
  return {{"problem", r.problem_id},
          {"model_kind", r.model_kind},
          {"seed", r.seed},
          {"status", to_string(r.status)},
          {"message", r.message},
          {"steps", r.steps_done},
          {"rel_l2", r.final_score.rel_l2},
          {"flux_x_rel_l2", optional_json(r.final_score.flux_x)},
          {"horizon", optional_json(r.horizon)},
          {"wall_clock_seconds", r.wall_clock},
          {"config_hash", r.config_hash},
          {"source_fingerprint", kSourceFingerprint}};
}

RunReport report_from_summary(const json& j) {
  RunReport r;
  r.problem_id = j.at("problem").get<std::string>();
  r.model_kind = j.at("model_kind").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.status = status_from_string(j.at("status").get<std::string>());
  r.message = j.at("message").get<std::string>();
  r.steps_done = j.at("steps").get<std::size_t>();
  r.final_score.rel_l2 = j.at("rel_l2").get<double>();
  r.final_score.flux_x = optional_double(j.at("flux_x_rel_l2"));
  r.horizon = optional_double(j.at("horizon"));
  r.wall_clock = j.at("wall_clock_seconds").get<double>();
  r.config_hash = j.at("config_hash").get<std::string>();
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

std::string describe(const SeedResult& r) {
  if (!r.error.empty()) return "seed " + std::to_string(r.seed) + ": error: " + r.error;
  const RunReport& p = r.report;
  std::string s = "seed " + std::to_string(r.seed) + ": " + to_string(p.status) + " steps=" +
                  std::to_string(p.steps_done) + " rel_l2=" + fmt(p.final_score.rel_l2);
  if (p.final_score.flux_x) s += " flux_x=" + fmt(p.final_score.flux_x);
  s += " wall_clock=" + fmt(p.wall_clock) + "s";
  if (r.reused) s += " (reused)";
  if (!p.message.empty()) s += " [" + p.message + "]";
  return s;
}

void write_metrics_csv(const std::vector<SeedResult>& results, const fs::path& path) {
  std::ostringstream os;
  os.precision(10);
  os << "seed,status,steps,rel_l2,flux_x_rel_l2,wall_clock_seconds,config_hash,reused\n";
  for (const SeedResult& r : results) {
    if (!r.error.empty()) {
      os << r.seed << ",error,,,,,,0\n";
      continue;
    }
    const RunReport& p = r.report;
    os << r.seed << ',' << to_string(p.status) << ',' << p.steps_done << ',' << p.final_score.rel_l2 << ',';
    if (p.final_score.flux_x) os << *p.final_score.flux_x;
    os << ',' << p.wall_clock << ',' << p.config_hash << ',' << (r.reused ? 1 : 0) << '\n';
  }
  write_text(path, os.str());
}

void write_config(const RunConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "config.json", json(config).dump(2) + "\n");
}

/// Calls task(i) for i < n on up to `jobs` threads.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) task(i);
    });
  for (auto& t : workers) t.join();
}

struct Cell {
  RunConfig config;
  std::uint64_t seed;
  fs::path dir;
};

std::vector<SeedResult> run_cells(const std::vector<Cell>& cells, const Scorer& scorer,
                                  const RunOptions& options) {
  std::vector<SeedResult> results(cells.size());
  std::mutex log_mutex;
  parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    SeedResult r;
    try {
      r = run_seed(c.config, c.seed, c.dir, scorer, options.reuse);
    } catch (const std::exception& e) {
      r.seed = c.seed;
      r.dir = c.dir / ("seed-" + std::to_string(c.seed));
      r.error = e.what();
    }
    if (options.log) {
      std::lock_guard<std::mutex> lock(log_mutex);
      *options.log << c.dir.filename().string() << ' ' << describe(r) << std::endl;
    }
    results[i] = std::move(r);
  });
  return results;
}

std::shared_ptr<const PdeProblem> problem_or_config_error(const std::string& id) {
  try {
    return make_problem(id);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

RunConfig load_config(const fs::path& path) {
  const json j = read_json(path);
  RunConfig c;
  try {
    from_json(j, c);
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return c;
}

SeedResult run_seed(const RunConfig& config, std::uint64_t seed, const fs::path& dir, const Scorer& scorer,
                    bool reuse) {
  const auto problem = make_problem(config.problem);
  SeedResult out;
  out.seed = seed;
  out.dir = dir / ("seed-" + std::to_string(seed));
  const fs::path summary = out.dir / "summary.json";
  if (reuse && fs::exists(summary)) {
    try {
      const json j = read_json(summary);
      if (j.at("config_hash") == run_hash(config, *problem, seed) && j.at("source_fingerprint") == kSourceFingerprint) {
        out.report = report_from_summary(j);
        out.reused = true;
        return out;
      }
    } catch (const std::exception&) {
      // stale or partial summary: train again
    }
  }
  fs::create_directories(out.dir);
  fs::remove(summary);
  TrainResult res = train(config.model, *problem, config.train, seed, &scorer);
  {
    std::ostringstream os;
    write_report_csv(res.report, os);
    write_text(out.dir / "report.csv", os.str());
  }
  save_checkpoint(res.model, out.dir / "checkpoint.json");
  write_text(summary, summary_json(res.report).dump(2) + "\n");
  out.report = std::move(res.report);
  return out;
}

std::vector<SeedResult> run_experiment(const RunConfig& config, const fs::path& dir, const RunOptions& options) {
  config.validate();
  const auto problem = make_problem(config.problem);
  const Scorer scorer = Scorer::for_problem(*problem, config.train.oracle);
  write_config(config, dir);
  std::vector<Cell> cells;
  for (std::uint64_t s : config.seeds) cells.push_back({config, s, dir});
  auto results = run_cells(cells, scorer, options);
  write_metrics_csv(results, dir / "metrics.csv");
  return results;
}

fs::path fresh_run_dir(const RunConfig& config) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  const fs::path base = fs::path(config.output_dir) / (config.name + "-" + stamp);
  fs::path dir = base;
  for (int k = 2; fs::exists(dir); ++k) dir = base.string() + "-" + std::to_string(k);
  return dir;
}

int exit_code(const std::vector<SeedResult>& results) {
  int code = kExitOk;
  for (const SeedResult& r : results) {
    if (!r.error.empty()) code = std::max(code, kExitFailure);
    if (r.error.empty() && r.report.status == RunStatus::NumericAbort) return kExitNumeric;
  }
  return code;
}

std::size_t model_depth(const ModelSpec& spec) {
  switch (spec.kind) {
    case ArchKind::HyRes:
      return spec.blocks.size();
    case ArchKind::RbfNet:
      return 1;
    default:
      return spec.mlp_depth;
  }
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Depth:
      return "depth";
    case SweepAxis::Collocation:
      return "collocation-count";
    case SweepAxis::ModelKind:
      return "model-kind";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  for (SweepAxis a : {SweepAxis::Depth, SweepAxis::Collocation, SweepAxis::ModelKind})
    if (to_string(a) == s) return a;
  throw ConfigError("unknown sweep axis '" + s + "' (depth, collocation-count, model-kind)");
}

RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const std::string& value) {
  RunConfig c = base;
  c.name = base.name + "-" + to_string(axis) + "-" + value;
  auto count = [&] {
    std::size_t pos = 0;
    unsigned long long n = 0;
    try {
      n = std::stoull(value, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != value.size() || value.empty() || value[0] == '-' || n == 0)
      throw ConfigError(to_string(axis) + ": expected a positive integer, got '" + value + "'");
    return static_cast<std::size_t>(n);
  };
  switch (axis) {
    case SweepAxis::Depth: {
      const std::size_t n = count();
      if (c.model.kind == ArchKind::HyRes) {
        const HybridBlockSpec proto = c.model.blocks.empty() ? HybridBlockSpec{} : c.model.blocks.back();
        c.model.blocks.resize(n, proto);
      } else if (c.model.kind == ArchKind::RbfNet) {
        throw ConfigError("depth: rbfnet has a single layer");
      } else {
        c.model.mlp_depth = n;
      }
      break;
    }
    case SweepAxis::Collocation: {
      const std::size_t n = count();
      SampleCounts& p = c.train.points;
      if (p.interior > 0)
        p.boundary = static_cast<std::size_t>(
            std::max(1.0, std::round(static_cast<double>(p.boundary) * static_cast<double>(n) / static_cast<double>(p.interior))));
      p.interior = n;
      break;
    }
    case SweepAxis::ModelKind:
      try {
        c.model.kind = arch_kind_from_string(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      break;
  }
  try {
    c.validate();
    adapt_spec(c.model, *make_problem(c.problem));
  } catch (const std::exception& e) {
    throw ConfigError(c.name + ": " + e.what());
  }
  return c;
}

SweepResult run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                      const fs::path& dir, const RunOptions& options) {
  if (values.empty()) throw ConfigError("sweep: no values");
  base.validate();
  std::vector<RunConfig> configs;
  for (const std::string& v : values) configs.push_back(apply_axis(base, axis, v));

  const auto problem = make_problem(base.problem);
  const Scorer scorer = Scorer::for_problem(*problem, base.train.oracle);
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const fs::path cell_dir = dir / (to_string(axis) + "-" + values[i]);
    write_config(configs[i], cell_dir);
    for (std::uint64_t s : configs[i].seeds) cells.push_back({configs[i], s, cell_dir});
  }
  const auto results = run_cells(cells, scorer, options);

  SweepResult out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SeedResult& r = results[i];
    if (!r.error.empty()) {
      out.failures.push_back(cells[i].dir.filename().string() + "/seed-" + std::to_string(r.seed) + ": " + r.error);
      continue;
    }
    if (r.report.status == RunStatus::NumericAbort)
      out.failures.push_back(cells[i].dir.filename().string() + "/seed-" + std::to_string(r.seed) + ": " +
                             r.report.message);
    out.records.push_back(r.report.record(model_depth(cells[i].config.model), cells[i].config.train.points.interior));
  }

  std::ostringstream rec;
  rec.precision(10);
  rec << "problem,model_kind,seed,depth,collocation,steps,rel_l2,flux_x_rel_l2,wall_clock_seconds,config_hash\n";
  for (const MetricRecord& m : out.records) {
    rec << m.problem_id << ',' << m.model_kind << ',' << m.seed << ',' << m.depth << ',' << m.collocation << ','
        << m.steps << ',' << m.rel_l2 << ',';
    if (m.flux_x) rec << *m.flux_x;
    rec << ',' << m.wall_clock << ',' << m.config_hash << '\n';
  }
  write_text(dir / "records.csv", rec.str());

  if (!out.records.empty()) {
    const StudyAxis study_axis = axis == SweepAxis::Depth         ? StudyAxis::Depth
                                 : axis == SweepAxis::Collocation ? StudyAxis::Collocation
                                                                  : StudyAxis::Iteration;
    out.table = aggregate_study(out.records, study_axis);
    std::ostringstream os;
    write_study_csv(out.table, os);
    write_text(dir / "study.csv", os.str());
  }
  return out;
}

void dump_kernels(const Model& model, std::size_t block, std::ostream& os) {
  const auto names = model.tau_names();
  if (block >= names.size())
    throw ConfigError("block " + std::to_string(block) + " out of range: model has " + std::to_string(names.size()) +
                      " RBF layer(s)");
  const std::string prefix = names[block].substr(0, names[block].size() - std::string(".tau").size());
  const Array& centers = model.params().value(prefix + ".centers");
  const Array& tau = model.params().value(prefix + ".tau");
  const Array& w = model.params().value(prefix + ".W");
  os.precision(10);
  for (std::size_t d = 0; d < centers.cols(); ++d) os << 'c' << d << ',';
  os << "tau,mean_abs_w\n";
  for (std::size_t i = 0; i < centers.rows(); ++i) {
    for (std::size_t d = 0; d < centers.cols(); ++d) os << centers(i, d) << ',';
    double s = 0.0;
    for (std::size_t k = 0; k < w.cols(); ++k) s += std::abs(w(i, k));
    os << tau(0, i) << ',' << s / static_cast<double>(w.cols()) << '\n';
  }
}

void evaluate(const Model& model, const PdeProblem& problem, std::ostream& os) {
  if (model.spec().input_dim != problem.domain().dim())
    throw ConfigError("checkpoint input dimension " + std::to_string(model.spec().input_dim) + " does not match " +
                      problem.id());
  const Scorer scorer = Scorer::for_problem(problem);
  const Score s = scorer.score(model);
  os << std::setprecision(8);
  os << "problem: " << problem.id() << "\nmodel_kind: " << to_string(model.spec().kind) << "\nrel_l2: " << s.rel_l2
     << "\nflux_x_rel_l2: " << (s.flux_x ? fmt(*s.flux_x) : "n/a") << '\n';
  if (scorer.horizon()) os << "scored_t_max: " << *scorer.horizon() << '\n';
  const auto* mu = problem.coefficient();
  if (mu && mu->kind() == CoefficientKind::FiveStrip) {
    const auto jumps = interface_jump(model_field(model), problem, 200);
    for (std::size_t k = 0; k < jumps.size(); ++k)
      os << "interface " << k + 1 << " y=" << jumps[k].y << ": normal_jump=" << jumps[k].normal
         << " tangential_jump=" << jumps[k].tangential << " tangential_jump_signed=" << jumps[k].tangential_signed
         << '\n';
  }
}

void oracle_build(const std::string& id, const OracleSettings& settings, std::ostream& os) {
  SpectralProblem p;
  try {
    p = spectral_problem_for(id);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto t0 = std::chrono::steady_clock::now();
  bool hit = false;
  const SpectralSolution sol = cached_oracle(id, settings, &hit);
  const double build = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double t_final = settings.t_samples.empty() ? 1.0 : settings.t_samples.back();
  const double sc = self_convergence(p, settings.modes, settings.dt, t_final);
  os << std::setprecision(6);
  os << "problem: " << id << "\ncache: " << (hit ? "hit" : "miss") << "\ncache_dir: " << oracle_cache_dir().string()
     << "\nmodes: " << settings.modes << "\ndt: " << settings.dt << "\nsamples: " << settings.t_samples.size()
     << "\nt_final: " << t_final << "\nseconds: " << build
     << "\nself_convergence_rel_l2 (" << settings.modes << " -> " << 2 * settings.modes << " modes, dt/2): " << sc
     << '\n';
  (void)sol;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"HyResPINN solver: train, sweep, evaluate, inspect kernels, build reference solutions"};
  app.require_subcommand(1);

  std::string config_path, out_dir, axis_name, checkpoint_path, problem_id;
  std::size_t jobs = 1, block = 0, modes = 0, samples = 0;
  double dt = 0.0;
  bool reuse = false;
  std::vector<std::string> values;

  auto* train_cmd = app.add_subcommand("train", "Train every seed of a run configuration");
  train_cmd->add_option("config", config_path, "Run configuration (JSON)")->required();
  train_cmd->add_option("--out", out_dir, "Run directory (default <output_dir>/<name>-<timestamp>)");
  train_cmd->add_option("--jobs", jobs, "Concurrent seeds")->check(CLI::PositiveNumber);
  train_cmd->add_flag("--reuse", reuse, "Keep seeds already completed in --out with identical settings");

  auto* sweep_cmd = app.add_subcommand("sweep", "Train a configuration across values of one axis");
  sweep_cmd->add_option("config", config_path, "Base run configuration (JSON)")->required();
  sweep_cmd->add_option("--axis", axis_name, "depth | collocation-count | model-kind")->required();
  sweep_cmd->add_option("--values", values, "Axis values")->required()->delimiter(',');
  sweep_cmd->add_option("--out", out_dir, "Sweep directory (default <output_dir>/<name>-<timestamp>)");
  sweep_cmd->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--reuse", reuse, "Keep runs already completed in --out with identical settings");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint against the reference solution");
  eval_cmd->add_option("checkpoint", checkpoint_path, "Checkpoint (JSON)")->required();
  eval_cmd->add_option("--problem", problem_id, "Problem id")->required();

  auto* dump_cmd = app.add_subcommand("dump-kernels", "Print RBF centers, radii and mean |W| as CSV");
  dump_cmd->add_option("checkpoint", checkpoint_path, "Checkpoint (JSON)")->required();
  dump_cmd->add_option("--block", block, "RBF layer index")->required();

  auto* oracle_cmd = app.add_subcommand("oracle-build", "Build or load a cached spectral reference solution");
  oracle_cmd->add_option("problem", problem_id, "allen-cahn | ks-regular | ks-chaotic")->required();
  oracle_cmd->add_option("--modes", modes, "Fourier modes (power of two)");
  oracle_cmd->add_option("--dt", dt, "Time step");
  oracle_cmd->add_option("--samples", samples, "Uniform time samples on the problem's window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunOptions options;
    options.jobs = jobs;
    options.reuse = reuse;
    options.log = &out;
    if (*train_cmd) {
      const RunConfig config = load_config(config_path);
      const fs::path dir = out_dir.empty() ? fresh_run_dir(config) : fs::path(out_dir);
      out << "run directory: " << dir.string() << std::endl;
      const auto results = run_experiment(config, dir, options);
      for (const SeedResult& r : results)
        if (!r.error.empty()) err << "seed " << r.seed << ": " << r.error << '\n';
      return exit_code(results);
    }
    if (*sweep_cmd) {
      const RunConfig config = load_config(config_path);
      const SweepAxis axis = sweep_axis_from_string(axis_name);
      const fs::path dir = out_dir.empty() ? fresh_run_dir(config) : fs::path(out_dir);
      out << "sweep directory: " << dir.string() << std::endl;
      const SweepResult res = run_sweep(config, axis, values, dir, options);
      out << "runs: " << res.records.size() << " study rows: " << res.table.rows.size() << '\n';
      for (const std::string& f : res.failures) err << "failed: " << f << '\n';
      return res.failures.empty() ? kExitOk : kExitFailure;
    }
    if (*eval_cmd) {
      const auto problem = problem_or_config_error(problem_id);
      evaluate(load_checkpoint(fs::path(checkpoint_path)), *problem, out);
      return kExitOk;
    }
    if (*dump_cmd) {
      dump_kernels(load_checkpoint(fs::path(checkpoint_path)), block, out);
      return kExitOk;
    }
    if (*oracle_cmd) {
      OracleSettings s;
      try {
        s = default_oracle_settings(problem_id);
        spectral_problem_for(problem_id);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      if (modes) s.modes = modes;
      if (dt > 0.0) s.dt = dt;
      if (samples) s.t_samples = uniform_times(s.t_samples.empty() ? 1.0 : s.t_samples.back(), samples);
      oracle_build(problem_id, s, out);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace hyres::cli
