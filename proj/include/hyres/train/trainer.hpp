#pragma once
// Composite loss, loss balancing, causal weighting, Adam with a warmup and
// exponential decay schedule, and the training loop.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyres/eval/metrics.hpp"
#include "hyres/model/model.hpp"
#include "hyres/pde/problem.hpp"

namespace hyres {

struct LossWeights {
  double ic = 1.0, b = 1.0, r = 1.0;
  /// Gate regularization strength; never balanced.
  double p = 1e-6;
  bool balance = true;
  std::size_t update_period = 1000;
  double ema_decay = 0.9;
  void validate() const;
};

struct CausalConfig {
  bool enabled = true;
  std::size_t chunks = 32;
  double tolerance = 1.0;
  void validate() const;
};

struct ScheduleConfig {
  double peak_lr = 1e-3;
  std::size_t warmup_steps = 5000;
  double decay_rate = 0.9;
  std::size_t decay_steps = 5000;
  void validate() const;
};

/// peak * step / W up to W, then peak * decay^((step - W) / decay_steps).
double lr_schedule(std::size_t step, const ScheduleConfig& c);

/// w_0 = 1, w_i = exp(-eps * sum_{k<i} L_k).
std::vector<double> causal_weights(const std::vector<double>& chunk_losses, double epsilon);

/// lambda_k <- decay * lambda_k + (1 - decay) * (sum_j |g_j|) / |g_k|. Terms
/// with zero norm keep their weight; all-zero norms leave every weight as is.
std::vector<double> grad_norm_balance(const std::vector<double>& norms, const std::vector<double>& weights,
                                      double ema_decay);

struct OptimState {
  std::vector<Array> m, v;  // one per parameter, empty for frozen ones
  std::size_t step = 0;
  ScheduleConfig schedule;
  static OptimState for_params(const ParamStore& params, const ScheduleConfig& schedule);
};

inline constexpr double kAdamBeta1 = 0.9, kAdamBeta2 = 0.999, kAdamEps = 1e-8;

/// One bias-corrected Adam update of the trainable parameters. The step
/// counter is incremented first and the rate is lr_schedule(counter). `grads`
/// is indexed like the store; entries of frozen parameters are ignored.
/// Throws NumericError naming the parameter on a non-finite gradient.
void adam_step(ParamStore& params, const std::vector<Array>& grads, OptimState& state);

/// Lower bound applied to RBF support radii after each update.
inline constexpr double kMinTau = 1e-4;

struct CompositeLoss {
  Var total;
  /// Unweighted terms as recorded values (absent terms are empty).
  std::optional<Var> ic, b, r;
  Var reg;  // sum of alpha^2 + beta^2
  double ic_value = 0.0, b_value = 0.0, r_value = 0.0, reg_value = 0.0;
  /// Plain residual MSE (the r term is causally weighted when enabled).
  double r_mse = 0.0;
  std::vector<std::pair<std::string, double>> boundary_parts;
  std::vector<double> causal;
};

/// lambda_ic MSE(R_ic) + lambda_b sum_parts MSE(R_b) + lambda_r MSE(R_r)
/// + lambda_p sum(alpha^2 + beta^2). Boundary terms come from the problem,
/// or from the periodic mismatch when the problem is periodic and the model
/// lacks an exact periodic embedding. Throws NumericError naming a NaN term.
CompositeLoss composite_loss(const Model& model, const BoundParams& params, const PdeProblem& problem,
                             const PointSet& batch, const LossWeights& weights, const CausalConfig& causal);

/// Field-level form: `reg` is the gate penalty sum (or empty), `exact_periodic`
/// disables the periodic mismatch term.
CompositeLoss composite_loss(const Field& u, const std::optional<Var>& reg, bool exact_periodic,
                             const PdeProblem& problem, const PointSet& batch, Tape& tape, const LossWeights& weights,
                             const CausalConfig& causal);

/// Fills input_dim, the input box and the periodic embedding from the problem.
ModelSpec adapt_spec(ModelSpec spec, const PdeProblem& problem);

struct TrainConfig {
  std::size_t steps = 300000;
  /// Fixed point set (Poisson disk) or a fresh uniform batch every step.
  bool minibatch = false;
  SampleCounts points{2000, 400, 0};
  LossWeights weights;
  CausalConfig causal;
  ScheduleConfig schedule;
  std::size_t eval_every = 500;
  std::size_t log_every = 100;
  /// Wall-clock budget in seconds, 0 for none.
  double budget_seconds = 0.0;
  /// Oracle resolution override for time-dependent problems.
  std::optional<OracleSettings> oracle;
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// problem id, seeds, model and training settings of one experiment.
struct RunConfig {
  std::string name = "run";
  std::string problem;
  /// Parent directory of the run directories.
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds{0};
  ModelSpec model;
  TrainConfig train;
  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

enum class RunStatus { Ok, NumericAbort, Budget };
std::string to_string(RunStatus s);

struct ReportRow {
  std::size_t step = 0;
  double total = 0.0, ic = 0.0, b = 0.0, r = 0.0, reg = 0.0;
  double lambda_ic = 0.0, lambda_b = 0.0, lambda_r = 0.0;
  double lr = 0.0;
  std::optional<double> rel_l2, flux_x;
  std::vector<double> phi_alpha, phi_beta;
};

struct RunReport {
  std::string problem_id;
  std::string model_kind;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t steps_done = 0;
  RunStatus status = RunStatus::Ok;
  std::string message;
  double wall_clock = 0.0;
  std::optional<double> horizon;
  std::vector<ReportRow> rows;
  Score final_score;

  MetricRecord record(std::size_t depth, std::size_t collocation) const;
};

/// Summary block of "# key: value" lines, then one CSV row per logged step.
void write_report_csv(const RunReport& report, std::ostream& os);

struct TrainResult {
  Model model;
  RunReport report;
};

/// Trains a model for `problem` from `spec` (adapted to the problem) and seed.
/// On a NaN the parameters of the last good step are kept and the status is
/// NumericAbort; an exhausted budget ends the run early with status Budget.
TrainResult train(const ModelSpec& spec, const PdeProblem& problem, const TrainConfig& config, std::uint64_t seed,
                  const Scorer* scorer = nullptr);

}  // namespace hyres
