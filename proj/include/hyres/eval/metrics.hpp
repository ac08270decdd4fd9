#pragma once
// Error metrics, flux and interface diagnostics, scoring against references,
// and aggregation of run records into study tables.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyres/model/model.hpp"
#include "hyres/oracle/spectral.hpp"
#include "hyres/pde/problem.hpp"

namespace hyres {

/// ||pred - truth|| / ||truth||. Throws ShapeError on a size mismatch and
/// std::invalid_argument when truth has zero norm.
double relative_l2(const Array& pred, const Array& truth);

/// The model as a field with constant parameters.
Field model_field(const Model& model);

/// Half-width of the band around coefficient interfaces excluded from flux metrics.
inline constexpr double kInterfaceOffset = 1e-3;

/// Rows of `grid` farther than 2 * kInterfaceOffset from every interface of
/// the problem's coefficient (all rows when it has none).
std::vector<std::size_t> flux_rows(const PdeProblem& problem, const Array& grid);

/// Relative L2 of each flux component against the exact flux, over flux_rows;
/// empty where the exact component vanishes on the grid.
std::vector<std::optional<double>> flux_error(const Field& u, const PdeProblem& problem, const Array& grid);

/// Model flux at the rows of grid, evaluated in chunks.
Array field_flux(const Field& u, const PdeProblem& problem, const Array& grid);

struct InterfaceJump {
  double y = 0.0;
  double normal = 0.0;       // mean |q_y(+) - q_y(-)|
  double tangential = 0.0;   // mean |q_x(+) - q_x(-)|
  double normal_signed = 0.0;
  double tangential_signed = 0.0;
};

/// Flux jumps across each interface of a five-strip problem, from `n` point
/// pairs at x = (i + 1/2) / n, y = y_k +- offset. A negative offset swaps sides.
std::vector<InterfaceJump> interface_jump(const Field& u, const PdeProblem& problem, std::size_t n,
                                          double offset = kInterfaceOffset);

struct Score {
  double rel_l2 = 0.0;
  std::optional<double> flux_x;
};

/// Fixed evaluation grid and reference values for one problem.
class Scorer {
 public:
  /// Darcy problems use the exact solution on the clipped tensor grid. Oracle
  /// problems use the cached spectral solution on its nodes; `oracle` overrides
  /// the default settings. ks-chaotic is scored on t <= half the horizon.
  static Scorer for_problem(const PdeProblem& problem, std::optional<OracleSettings> oracle = std::nullopt);

  const Array& grid() const { return grid_; }
  const Array& truth() const { return truth_; }
  bool scores_flux() const { return flux_truth_.has_value(); }
  /// Upper end of the scored time window, when restricted.
  std::optional<double> horizon() const { return horizon_; }

  Score score(const Model& model) const;
  Score score(const Field& u, const Array& prediction) const;

 private:
  const PdeProblem* problem_ = nullptr;  // must outlive the scorer
  Array grid_, truth_;
  Array flux_grid_;
  std::optional<Array> flux_truth_;  // x-component on flux_grid_
  std::optional<double> horizon_;
};

struct MetricRecord {
  std::string problem_id;
  std::string model_kind;
  std::uint64_t seed = 0;
  double rel_l2 = 0.0;
  std::optional<double> flux_x;
  std::size_t steps = 0;
  double wall_clock = 0.0;
  std::string config_hash;
  std::size_t depth = 0;
  std::size_t collocation = 0;
};

/// Hex FNV-1a of the compact JSON dump (object keys are sorted).
std::string config_hash(const nlohmann::json& config);

enum class StudyAxis { Depth, Collocation, Iteration, WallClock };
std::string to_string(StudyAxis a);
StudyAxis study_axis_from_string(const std::string& s);

struct StudyRow {
  std::string model_kind;
  double axis_value = 0.0;
  double mean_rel_l2 = 0.0;
  std::optional<double> mean_flux_x;
  std::size_t count = 0;
};

struct StudyTable {
  std::string problem_id;
  StudyAxis axis = StudyAxis::Depth;
  std::vector<StudyRow> rows;  // sorted by (model_kind, axis_value)
};

/// Mean over seeds per (model kind, axis value). For the wall-clock axis runs
/// are grouped by step count and the reported axis value is their mean time.
/// Throws std::invalid_argument for an empty list or mixed problem ids.
StudyTable aggregate_study(const std::vector<MetricRecord>& records, StudyAxis axis);

/// Tidy CSV with a leading comment line naming the study and its columns.
void write_study_csv(const StudyTable& table, std::ostream& os);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hyres
