#pragma once
// Benchmark PDE problems: residual operators, boundary and initial data,
// coefficient fields and exact solutions.

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hyres/autodiff/ops.hpp"
#include "hyres/pde/domain.hpp"
#include "hyres/sampling/samplers.hpp"

namespace hyres {

/// A batched scalar field: N x d points (recorded input) to N x 1 values.
using Field = std::function<Var(const Var&)>;

struct ResidualTerm {
  std::string label;
  Var residual;  // N x 1
};

enum class CoefficientKind { Constant, FiveStrip };

/// Scalar permeability mu(x). The five-strip field varies with y = x[1].
class CoefficientField {
 public:
  static CoefficientField constant(double v);
  static CoefficientField five_strip();

  CoefficientKind kind() const { return kind_; }
  const std::vector<double>& values() const { return values_; }
  /// Interface y-positions, increasing.
  std::vector<double> interfaces() const;
  /// Strip index (0-based) of y; throws within 1e-12 of an interface.
  std::size_t strip(double y) const;
  /// N x 1 values at point rows.
  Array eval(const Array& pts) const;

 private:
  CoefficientKind kind_ = CoefficientKind::Constant;
  std::vector<double> values_{1.0};
};

class PdeProblem {
 public:
  virtual ~PdeProblem() = default;

  const std::string& id() const { return id_; }
  const Domain& domain() const { return domain_; }
  /// Column 0 is time.
  bool time_dependent() const { return domain_.kind() == DomainKind::IntervalTimeSlab; }
  const std::vector<std::size_t>& periodic_dims() const { return periodic_dims_; }
  const std::vector<double>& period_lengths() const { return period_lengths_; }

  /// Interior residual at the rows of x (a recorded input, differentiable).
  virtual Var residual(const Field& u, const Var& x) const = 0;
  /// Boundary residuals, one term per boundary part.
  virtual std::vector<ResidualTerm> boundary_residuals(const Field& u, Tape& tape, const PointSet& set) const;
  /// u(t0, x) - u0(x).
  virtual Var initial_residual(const Field& u, const Var& x) const;
  /// Periodic mismatch terms for models without an exact periodic embedding:
  /// value and first derivative at the two ends, for times `ts` (N x 1).
  std::vector<ResidualTerm> periodic_residuals(const Field& u, Tape& tape, const Array& ts) const;

  virtual bool has_exact_solution() const { return false; }
  /// Analytic solution (N x 1); throws for problems scored against an oracle.
  virtual Array exact_solution(const Array& pts) const;
  /// Analytic flux -mu grad u (N x d).
  virtual Array exact_flux(const Array& pts) const;
  /// Model flux -mu grad u (N x d).
  virtual Var flux(const Field& u, const Var& x) const;
  virtual const CoefficientField* coefficient() const { return nullptr; }

  /// Moves sample points off coefficient discontinuities (no-op by default).
  virtual void prepare_points(PointSet& set) const;
  /// Default evaluation grid resolution, one entry per domain axis.
  virtual std::vector<std::size_t> eval_resolution() const = 0;
  /// Problem parameters for reports and cache keys.
  virtual nlohmann::json describe() const = 0;

 protected:
  PdeProblem(std::string id, Domain domain) : id_(std::move(id)), domain_(std::move(domain)) {}

  std::string id_;
  Domain domain_;
  std::vector<std::size_t> periodic_dims_;
  std::vector<double> period_lengths_;
};

class AllenCahn final : public PdeProblem {
 public:
  static constexpr double kDiffusion = 1e-4;
  static constexpr double kReaction = 5.0;

  AllenCahn();
  Var residual(const Field& u, const Var& x) const override;
  Var initial_residual(const Field& u, const Var& x) const override;
  static double initial_value(double x);
  std::vector<std::size_t> eval_resolution() const override { return {101, 256}; }
  nlohmann::json describe() const override;
};

struct KsCoefficients {
  double a, b, c;  // advection, u_xx and u_xxxx coefficients
};

class KuramotoSivashinsky final : public PdeProblem {
 public:
  KuramotoSivashinsky(std::string id, KsCoefficients coeffs);
  static KsCoefficients chaotic() { return {100.0 / 16.0, 100.0 / (16.0 * 16.0), 100.0 / (16.0 * 16.0 * 16.0 * 16.0)}; }
  static KsCoefficients regular() { return {5.0, 0.5, 0.005}; }
  const KsCoefficients& coefficients() const { return coeffs_; }

  Var residual(const Field& u, const Var& x) const override;
  Var initial_residual(const Field& u, const Var& x) const override;
  static double initial_value(double x);
  std::vector<std::size_t> eval_resolution() const override { return {101, 512}; }
  nlohmann::json describe() const override;

 private:
  KsCoefficients coeffs_;
};

enum class DarcyCase { Smooth2d, Smooth3d, FiveStrip };
enum class BoundaryType { Dirichlet, Neumann };

class Darcy final : public PdeProblem {
 public:
  Darcy(std::string id, DarcyCase c, BoundaryType bc);

  DarcyCase darcy_case() const { return case_; }
  BoundaryType boundary_type() const { return bc_; }
  /// Point fixing the additive constant in Neumann runs.
  const std::vector<double>& pin() const { return pin_; }

  Var residual(const Field& u, const Var& x) const override;
  std::vector<ResidualTerm> boundary_residuals(const Field& u, Tape& tape, const PointSet& set) const override;
  bool has_exact_solution() const override { return true; }
  Array exact_solution(const Array& pts) const override;
  Array exact_flux(const Array& pts) const override;
  /// Forcing f (N x 1).
  Array forcing(const Array& pts) const;
  Var flux(const Field& u, const Var& x) const override;
  const CoefficientField* coefficient() const override { return &mu_; }
  void prepare_points(PointSet& set) const override;
  std::vector<std::size_t> eval_resolution() const override;
  nlohmann::json describe() const override;

 private:
  DarcyCase case_;
  BoundaryType bc_;
  CoefficientField mu_;
  std::vector<double> pin_;
};

/// Offset applied to points closer than this to a strip interface.
inline constexpr double kInterfaceJitter = 1e-9;

/// Ids accepted by make_problem.
const std::vector<std::string>& problem_ids();
/// Throws std::invalid_argument for an unknown id.
std::shared_ptr<const PdeProblem> make_problem(const std::string& id);

}  // namespace hyres
