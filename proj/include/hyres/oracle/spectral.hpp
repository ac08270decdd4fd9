#pragma once
// Fourier pseudo-spectral reference solvers with ETDRK4 time stepping, and
// interpolation of their trajectories.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyres/autodiff/array.hpp"
#include "hyres/pde/problem.hpp"

namespace hyres {

/// Raised when a trajectory leaves its plausible range (dt too large).
class BlowUpError : public NumericError {
 public:
  using NumericError::NumericError;
};

struct SpectralSolution {
  std::vector<double> x;  // K uniform nodes, left end included, right end excluded
  std::vector<double> t;  // S sample times
  Array field;            // S x K
  std::size_t modes = 0;
  double dt = 0.0;
  double x0 = 0.0, period = 0.0;
  std::string method = "etdrk4";
  nlohmann::json header;  // full parameter record

  /// Complex Fourier coefficients of slice s (K/2 + 1 entries), computed on demand.
  const std::vector<std::complex<double>>& coefficients(std::size_t s) const;

 private:
  mutable std::vector<std::vector<std::complex<double>>> coeffs_;
};

/// u_t = L u + N(u) on a periodic interval, with L diagonal in Fourier space.
struct SpectralProblem {
  std::string id;
  double x0 = 0.0, period = 2.0;
  /// Linear symbol L(k) for wavenumber k = 2 pi n / period.
  std::function<double(double)> linear;
  /// Nonlinear term in physical space: given u, write N(u) contributions.
  /// Either a pointwise function g(u) (transformed as is) or, when
  /// `derivative` is set, (d/dx) g(u).
  std::function<double(double)> pointwise;
  bool derivative = false;
  std::function<double(double)> u0;
  std::string u0_id;
  double blowup = 10.0;
  nlohmann::json params;
};

SpectralProblem allen_cahn_spectral_problem();
SpectralProblem ks_spectral_problem(const KsCoefficients& c, const std::string& id,
                                    std::function<double(double)> u0 = KuramotoSivashinsky::initial_value,
                                    std::string u0_id = "cos(x)(1+sin(x))");

/// ETDRK4 with 2/3-rule dealiasing. `modes` is the grid size K (a power of
/// two, >= 16); every sample time must be a multiple of dt.
SpectralSolution solve_spectral(const SpectralProblem& p, std::size_t modes, double dt, const std::vector<double>& t_samples);

/// Spectral description of an oracle-scored problem id; throws
/// std::invalid_argument for other ids.
SpectralProblem spectral_problem_for(const std::string& id);

/// Defaults modes >= 64 and dt <= 1e-3 are enforced here.
SpectralSolution solve_allen_cahn_spectral(std::size_t modes, double dt, const std::vector<double>& t_samples);
SpectralSolution solve_ks_spectral(const KsCoefficients& c, std::size_t modes, double dt,
                                   const std::vector<double>& t_samples);

/// Trigonometric interpolation in x, cubic Lagrange in t; exact on nodes.
/// pts: N x 2 rows (t, x). Throws std::out_of_range outside the time window.
Array oracle_eval(const SpectralSolution& sol, const Array& pts);

/// Default oracle settings per problem id.
struct OracleSettings {
  std::size_t modes = 512;
  double dt = 1e-4;
  std::vector<double> t_samples;  // default: 101 uniform samples on [0, 1]
};
OracleSettings default_oracle_settings(const std::string& problem_id);

std::vector<double> uniform_times(double t1, std::size_t count);

/// Cache directory: $HYRES_CACHE_DIR, else <temp>/hyres-oracle-cache.
std::filesystem::path oracle_cache_dir();

/// Solves or loads from the disk cache. `hit`, when given, reports a cache hit.
SpectralSolution cached_oracle(const std::string& problem_id, const OracleSettings& s, bool* hit = nullptr);

/// Rel-L2 change of the final slice from (modes, dt) to (2 modes, dt / 2),
/// compared on the coarse grid nodes.
double self_convergence(const SpectralProblem& p, std::size_t modes, double dt, double t_final);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& s);

}  // namespace hyres
