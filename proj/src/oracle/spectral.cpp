#include "hyres/oracle/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hyres {

using cplx = std::complex<double>;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Real-to-complex transform pair of size K with owned FFTW buffers.
class Rfft {
 public:
  explicit Rfft(std::size_t k) : k_(k) {
    real_ = fftw_alloc_real(k);
    spec_ = fftw_alloc_complex(k / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(k), real_, spec_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(k), spec_, real_, FFTW_ESTIMATE);
  }
  ~Rfft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  Rfft(const Rfft&) = delete;
  Rfft& operator=(const Rfft&) = delete;

  void forward(const std::vector<double>& u, std::vector<cplx>& out) {
    std::copy(u.begin(), u.end(), real_);
    fftw_execute(fwd_);
    out.resize(k_ / 2 + 1);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = {spec_[n][0], spec_[n][1]};
  }
  /// Normalized inverse.
  void inverse(const std::vector<cplx>& v, std::vector<double>& out) {
    for (std::size_t n = 0; n < v.size(); ++n) {
      spec_[n][0] = v[n].real();
      spec_[n][1] = v[n].imag();
    }
    fftw_execute(inv_);
    out.resize(k_);
    const double s = 1.0 / static_cast<double>(k_);
    for (std::size_t j = 0; j < k_; ++j) out[j] = real_[j] * s;
  }

 private:
  std::size_t k_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan fwd_, inv_;
};

bool is_power_of_two(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

}  // namespace

const std::vector<cplx>& SpectralSolution::coefficients(std::size_t s) const {
  if (coeffs_.size() != t.size()) coeffs_.assign(t.size(), {});
  auto& c = coeffs_.at(s);
  if (c.empty()) {
    Rfft fft(x.size());
    std::vector<double> row(field.ptr() + s * x.size(), field.ptr() + (s + 1) * x.size());
    fft.forward(row, c);
    for (auto& v : c) v /= static_cast<double>(x.size());
  }
  return c;
}

SpectralProblem allen_cahn_spectral_problem() {
  SpectralProblem p;
  p.id = "allen-cahn";
  p.x0 = -1.0;
  p.period = 2.0;
  p.linear = [](double k) { return AllenCahn::kReaction - AllenCahn::kDiffusion * k * k; };
  p.pointwise = [](double u) { return -AllenCahn::kReaction * u * u * u; };
  p.u0 = AllenCahn::initial_value;
  p.u0_id = "x^2 cos(pi x)";
  p.blowup = 10.0;
  p.params = {{"diffusion", AllenCahn::kDiffusion}, {"reaction", AllenCahn::kReaction}};
  return p;
}

SpectralProblem ks_spectral_problem(const KsCoefficients& c, const std::string& id, std::function<double(double)> u0,
                                    std::string u0_id) {
  SpectralProblem p;
  p.id = id;
  p.x0 = 0.0;
  p.period = 2.0 * kPi;
  p.linear = [c](double k) { return c.b * k * k - c.c * k * k * k * k; };
  // a u u_x = (a / 2) (u^2)_x
  p.pointwise = [a = c.a](double u) { return -0.5 * a * u * u; };
  p.derivative = true;
  p.u0 = std::move(u0);
  p.u0_id = std::move(u0_id);
  p.blowup = 1e4;
  p.params = {{"a", c.a}, {"b", c.b}, {"c", c.c}};
  return p;
}

SpectralSolution solve_spectral(const SpectralProblem& p, std::size_t K, double dt, const std::vector<double>& ts) {
  if (!is_power_of_two(K) || K < 16) throw std::invalid_argument("spectral solve: modes must be a power of two >= 16");
  if (!(dt > 0.0)) throw std::invalid_argument("spectral solve: dt must be positive");
  if (ts.empty()) throw std::invalid_argument("spectral solve: no sample times");

  std::vector<std::int64_t> sample_step(ts.size());
  for (std::size_t s = 0; s < ts.size(); ++s) {
    const double r = ts[s] / dt;
    sample_step[s] = std::llround(r);
    if (ts[s] < 0.0 || std::abs(r - static_cast<double>(sample_step[s])) > 1e-6)
      throw std::invalid_argument("spectral solve: sample time " + std::to_string(ts[s]) + " is not a multiple of dt");
    if (s > 0 && sample_step[s] <= sample_step[s - 1])
      throw std::invalid_argument("spectral solve: sample times must increase");
  }

  SpectralSolution sol;
  sol.modes = K;
  sol.dt = dt;
  sol.x0 = p.x0;
  sol.period = p.period;
  sol.t = ts;
  sol.x.resize(K);
  for (std::size_t j = 0; j < K; ++j) sol.x[j] = p.x0 + p.period * static_cast<double>(j) / static_cast<double>(K);
  sol.field = Array(ts.size(), K);

  const std::size_t nk = K / 2 + 1;
  std::vector<double> E(nk), E2(nk), Q(nk), f1(nk), f2(nk), f3(nk), kw(nk);
  std::vector<char> keep(nk);
  constexpr int M = 64;
  for (std::size_t n = 0; n < nk; ++n) {
    kw[n] = 2.0 * kPi * static_cast<double>(n) / p.period;
    keep[n] = 3 * n < K;
    const double hL = dt * p.linear(kw[n]);
    E[n] = std::exp(hL);
    E2[n] = std::exp(hL / 2);
    cplx q = 0, a = 0, b = 0, c = 0;
    for (int j = 1; j <= M; ++j) {
      const cplx z = hL + std::exp(cplx(0, kPi * (j - 0.5) / M * 2.0));
      const cplx ez = std::exp(z);
      q += (std::exp(z / 2.0) - 1.0) / z;
      a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / (z * z * z);
      b += (2.0 + z + ez * (-2.0 + z)) / (z * z * z);
      c += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / (z * z * z);
    }
    Q[n] = dt * (q / static_cast<double>(M)).real();
    f1[n] = dt * (a / static_cast<double>(M)).real();
    f2[n] = dt * (b / static_cast<double>(M)).real();
    f3[n] = dt * (c / static_cast<double>(M)).real();
  }

  Rfft fft(K);
  std::vector<double> u(K), w(K);
  for (std::size_t j = 0; j < K; ++j) u[j] = p.u0(sol.x[j]);
  std::vector<cplx> v, Nv, Na, Nb, Nc, a(nk), b(nk), c(nk);
  fft.forward(u, v);

  double umax = 0.0;
  auto nonlinear = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
    fft.inverse(in, w);
    for (double& x : w) {
      umax = std::max(umax, std::abs(x));
      x = p.pointwise(x);
    }
    fft.forward(w, out);
    for (std::size_t n = 0; n < nk; ++n) {
      if (!keep[n]) out[n] = 0.0;
      else if (p.derivative) out[n] *= cplx(0.0, kw[n]);
    }
  };

  std::size_t next = 0;
  auto store = [&](std::int64_t step) {
    while (next < ts.size() && sample_step[next] == step) {
      if (step == 0) {
        std::copy(u.begin(), u.end(), sol.field.ptr() + next * K);
      } else {
        fft.inverse(v, w);
        std::copy(w.begin(), w.end(), sol.field.ptr() + next * K);
      }
      ++next;
    }
  };
  store(0);
  const std::int64_t total = sample_step.back();
  for (std::int64_t step = 1; step <= total; ++step) {
    umax = 0.0;
    nonlinear(v, Nv);
    for (std::size_t n = 0; n < nk; ++n) a[n] = E2[n] * v[n] + Q[n] * Nv[n];
    nonlinear(a, Na);
    for (std::size_t n = 0; n < nk; ++n) b[n] = E2[n] * v[n] + Q[n] * Na[n];
    nonlinear(b, Nb);
    for (std::size_t n = 0; n < nk; ++n) c[n] = E2[n] * a[n] + Q[n] * (2.0 * Nb[n] - Nv[n]);
    nonlinear(c, Nc);
    for (std::size_t n = 0; n < nk; ++n)
      v[n] = E[n] * v[n] + Nv[n] * f1[n] + 2.0 * (Na[n] + Nb[n]) * f2[n] + Nc[n] * f3[n];
    if (!(umax <= p.blowup))
      throw BlowUpError(p.id + ": spectral solution blew up near t = " + std::to_string(step * dt) +
                        " (|u| > " + std::to_string(p.blowup) + "); reduce dt");
    store(step);
  }
  return sol;
}

SpectralSolution solve_allen_cahn_spectral(std::size_t modes, double dt, const std::vector<double>& ts) {
  if (modes < 64) throw std::invalid_argument("allen-cahn oracle: modes must be at least 64");
  if (dt > 1e-3) throw std::invalid_argument("allen-cahn oracle: dt must be at most 1e-3");
  return solve_spectral(allen_cahn_spectral_problem(), modes, dt, ts);
}

SpectralSolution solve_ks_spectral(const KsCoefficients& c, std::size_t modes, double dt, const std::vector<double>& ts) {
  if (modes < 64) throw std::invalid_argument("ks oracle: modes must be at least 64");
  if (dt > 1e-3) throw std::invalid_argument("ks oracle: dt must be at most 1e-3");
  return solve_spectral(ks_spectral_problem(c, "ks"), modes, dt, ts);
}

Array oracle_eval(const SpectralSolution& sol, const Array& pts) {
  if (pts.cols() != 2) throw ShapeError("oracle_eval: points must be N x 2 (t, x), got " + to_string(pts.shape()));
  const std::size_t K = sol.x.size(), S = sol.t.size();
  const double tol = 1e-12;
  Array out(pts.rows(), 1);
  std::vector<double> phase_cos(K / 2 + 1), phase_sin(K / 2 + 1);
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    const double t = pts(i, 0), x = pts(i, 1);
    if (t < sol.t.front() - tol || t > sol.t.back() + tol)
      throw std::out_of_range("oracle_eval: t = " + std::to_string(t) + " outside the solved window");

    // Time stencil.
    std::size_t s0 = 0, ns = 1;
    std::vector<double> wt{1.0};
    auto hit = std::find_if(sol.t.begin(), sol.t.end(), [&](double ts) { return std::abs(ts - t) <= 1e-14; });
    if (hit != sol.t.end()) {
      s0 = static_cast<std::size_t>(hit - sol.t.begin());
    } else {
      ns = std::min<std::size_t>(4, S);
      const std::size_t idx = static_cast<std::size_t>(std::upper_bound(sol.t.begin(), sol.t.end(), t) - sol.t.begin());
      s0 = std::min(idx >= 2 ? idx - 2 : 0, S - ns);
      wt.assign(ns, 1.0);
      for (std::size_t a = 0; a < ns; ++a)
        for (std::size_t b = 0; b < ns; ++b)
          if (a != b) wt[a] *= (t - sol.t[s0 + b]) / (sol.t[s0 + a] - sol.t[s0 + b]);
    }

    // Space: node hit or trigonometric interpolation.
    double xi = (x - sol.x0) / sol.period;
    xi -= std::floor(xi);
    const double jr = xi * static_cast<double>(K);
    const double jn = std::round(jr);
    const bool node = std::abs(jr - jn) <= 1e-9;
    const std::size_t j = static_cast<std::size_t>(jn) % K;
    if (!node) {
      const double th = 2.0 * kPi * xi;
      for (std::size_t n = 0; n <= K / 2; ++n) {
        phase_cos[n] = std::cos(th * static_cast<double>(n));
        phase_sin[n] = std::sin(th * static_cast<double>(n));
      }
    }
    double val = 0.0;
    for (std::size_t a = 0; a < ns; ++a) {
      const std::size_t s = s0 + a;
      double f;
      if (node) {
        f = sol.field(s, j);
      } else {
        const auto& c = sol.coefficients(s);
        f = c[0].real();
        for (std::size_t n = 1; n < K / 2; ++n) f += 2.0 * (c[n].real() * phase_cos[n] - c[n].imag() * phase_sin[n]);
        f += c[K / 2].real() * phase_cos[K / 2];
      }
      val += wt[a] * f;
    }
    out[i] = val;
  }
  return out;
}

std::vector<double> uniform_times(double t1, std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t s = 0; s < count; ++s) t[s] = t1 * static_cast<double>(s) / static_cast<double>(count - 1);
  return t;
}

OracleSettings default_oracle_settings(const std::string& id) {
  OracleSettings s;
  s.t_samples = uniform_times(1.0, 101);
  if (id == "allen-cahn") s.dt = 1e-4;
  else if (id == "ks-regular") s.dt = 1e-4;
  else if (id == "ks-chaotic") s.dt = 2.5e-5;
  else throw std::invalid_argument("no spectral oracle for problem '" + id + "'");
  return s;
}

std::filesystem::path oracle_cache_dir() {
  if (const char* env = std::getenv("HYRES_CACHE_DIR"); env && *env) return env;
  return std::filesystem::temp_directory_path() / "hyres-oracle-cache";
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

SpectralProblem spectral_problem_for(const std::string& id) {
  if (id == "allen-cahn") return allen_cahn_spectral_problem();
  if (id == "ks-regular") return ks_spectral_problem(KuramotoSivashinsky::regular(), id);
  if (id == "ks-chaotic") return ks_spectral_problem(KuramotoSivashinsky::chaotic(), id);
  throw std::invalid_argument("no spectral oracle for problem '" + id + "'");
}

SpectralSolution cached_oracle(const std::string& id, const OracleSettings& s, bool* hit) {
  const SpectralProblem p = spectral_problem_for(id);
  json header = {{"format", "hyres-oracle"}, {"version", 1},       {"problem", id},
                 {"params", p.params},       {"u0", p.u0_id},      {"modes", s.modes},
                 {"dt", s.dt},               {"t_samples", s.t_samples}, {"method", "etdrk4"},
                 {"dealias", "2/3"}};
  const std::string key = header.dump();
  std::ostringstream name;
  name << "oracle-" << id << "-" << std::hex << fnv1a(key) << ".bin";
  const auto dir = oracle_cache_dir();
  const auto path = dir / name.str();
  if (hit) *hit = false;

  if (std::ifstream is{path, std::ios::binary}) {
    std::string line;
    std::getline(is, line);
    if (line == key) {
      SpectralSolution sol;
      sol.modes = s.modes;
      sol.dt = s.dt;
      sol.x0 = p.x0;
      sol.period = p.period;
      sol.header = header;
      sol.x.resize(s.modes);
      sol.t.resize(s.t_samples.size());
      sol.field = Array(sol.t.size(), sol.x.size());
      is.read(reinterpret_cast<char*>(sol.x.data()), static_cast<std::streamsize>(sol.x.size() * sizeof(double)));
      is.read(reinterpret_cast<char*>(sol.t.data()), static_cast<std::streamsize>(sol.t.size() * sizeof(double)));
      is.read(reinterpret_cast<char*>(sol.field.ptr()), static_cast<std::streamsize>(sol.field.size() * sizeof(double)));
      if (is) {
        if (hit) *hit = true;
        return sol;
      }
    }
  }

  SpectralSolution sol = solve_spectral(p, s.modes, s.dt, s.t_samples);
  sol.header = header;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    os << key << "\n";
    os.write(reinterpret_cast<const char*>(sol.x.data()), static_cast<std::streamsize>(sol.x.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(sol.t.data()), static_cast<std::streamsize>(sol.t.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(sol.field.ptr()),
             static_cast<std::streamsize>(sol.field.size() * sizeof(double)));
  }
  std::filesystem::rename(tmp, path, ec);
  return sol;
}

double self_convergence(const SpectralProblem& p, std::size_t modes, double dt, double t_final) {
  const auto coarse = solve_spectral(p, modes, dt, {t_final});
  const auto fine = solve_spectral(p, 2 * modes, dt / 2, {t_final});
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < modes; ++j) {
    const double d = fine.field(0, 2 * j) - coarse.field(0, j);
    num += d * d;
    den += coarse.field(0, j) * coarse.field(0, j);
  }
  return std::sqrt(num / den);
}

}  // namespace hyres
