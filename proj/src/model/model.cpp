#include "hyres/model/model.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <stdexcept>

#include "hyres/sampling/samplers.hpp"

namespace hyres {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string layer(const std::string& prefix, std::size_t k) { return prefix + "." + std::to_string(k); }
std::string block_prefix(std::size_t l) { return "block" + std::to_string(l); }

void check_bounded(const Array& a, const char* what) {
  for (double v : a.data())
    if (!(v >= -1.0 && v <= 1.0)) throw std::logic_error(std::string(what) + ": entry outside [-1, 1]");
}

}  // namespace

Var embed(const Var& z, const EmbeddingSpec& spec, const BoundParams& params) {
  Var out = z;
  if (spec.has_periodic()) {
    Var acc;
    for (std::size_t c = 0; c < z.cols(); ++c) {
      Var piece = col(z, c);
      auto it = std::find(spec.periodic_dims.begin(), spec.periodic_dims.end(), c);
      if (it != spec.periodic_dims.end()) {
        const double L = spec.period_lengths.at(static_cast<std::size_t>(it - spec.periodic_dims.begin()));
        Var arg = scale(piece, kTwoPi / L);
        piece = concat_cols(cos(arg), sin(arg));
      }
      acc = acc.attached() ? concat_cols(acc, piece) : piece;
    }
    out = acc;
  }
  if (spec.has_fourier()) {
    Var arg = scale(matmul(out, params("embed.B")), kTwoPi);
    out = concat_cols(cos(arg), sin(arg));
  }
  return out;
}

Var dense_forward(const Var& a, const BoundParams& params, const std::string& prefix, bool activate) {
  const ParamStore& store = params.store();
  Var W = store.contains(prefix + ".g") ? mul_row(params(prefix + ".V"), exp(params(prefix + ".g")))
                                        : params(prefix + ".W");
  if (a.cols() != W.rows())
    throw ShapeError(prefix + ": input " + to_string(a.shape()) + " does not match weight " + to_string(W.shape()));
  Var h = add_row(matmul(a, W), params(prefix + ".b"));
  return activate ? tanh(h) : h;
}

Var mlp_forward(const Var& a, const BoundParams& params, const std::string& prefix, std::size_t depth) {
  Var h = a;
  for (std::size_t k = 0; k < depth; ++k) h = dense_forward(h, params, layer(prefix, k), k + 1 < depth);
  return h;
}

Var rbf_net_forward(const Var& a, const Var& centers, const Var& tau, const Var& W) {
  if (a.cols() != centers.cols())
    throw ShapeError("rbf_net_forward: query " + to_string(a.shape()) + " does not match centers " +
                     to_string(centers.shape()));
  if (tau.rows() != 1 || tau.cols() != centers.rows() || W.rows() != centers.rows())
    throw ShapeError("rbf_net_forward: tau " + to_string(tau.shape()) + " / W " + to_string(W.shape()) +
                     " do not match centers " + to_string(centers.shape()));
  for (double t : tau.value().data())
    if (!(t > 0.0)) throw std::invalid_argument("rbf_net_forward: support radius tau must be positive");
  Var q = mul_row(sqdist(a, centers), pow_int(tau, -2));
  return matmul(wendland_q(q, 0), W);
}

Var hybrid_block_forward(const Var& a, const BoundParams& params, const std::string& prefix, std::size_t nn_depth,
                         BlockTrace* trace) {
  Var fr = rbf_net_forward(a, params(prefix + ".rbf.centers"), params(prefix + ".rbf.tau"), params(prefix + ".rbf.W"));
  Var fn = mlp_forward(a, params, prefix + ".nn", nn_depth);
  if (fr.shape() != fn.shape())
    throw ShapeError(prefix + ": RBF output " + to_string(fr.shape()) + " and NN output " + to_string(fn.shape()) +
                     " differ");
  Var g = sigmoid(params(prefix + ".alpha"));
  Var mixed = fr * g + fn * shift(neg(g), 1.0);
  Var out = tanh(mixed);
  if (trace) {
    trace->rbf = fr.value();
    trace->nn = fn.value();
    trace->mixed = mixed.value();
    trace->output = out.value();
  }
  return out;
}

namespace {

struct Builder {
  ParamStore& store;
  std::mt19937_64 rng;
  bool rwf;
  double mu, sigma;

  Array normal(std::size_t r, std::size_t c, double mean, double sd) {
    std::normal_distribution<double> dist(mean, sd);
    Array a(r, c);
    for (double& v : a.data()) v = dist(rng);
    return a;
  }

  void dense(const std::string& prefix, std::size_t in, std::size_t out) {
    Array w = normal(in, out, 0.0, std::sqrt(2.0 / static_cast<double>(in + out)));
    if (rwf) {
      // Base matrix scaled so the effective weight starts Glorot-distributed.
      Array g = normal(1, out, mu, sigma);
      for (std::size_t i = 0; i < in; ++i)
        for (std::size_t j = 0; j < out; ++j) w(i, j) /= std::exp(g(0, j));
      store.add(prefix + ".V", std::move(w), "glorot-normal/exp(g)");
      store.add(prefix + ".g", std::move(g), "normal(mu,sigma)");
    } else {
      store.add(prefix + ".W", std::move(w), "glorot-normal");
    }
    store.add(prefix + ".b", Array(1, out), "zeros");
  }

  void mlp(const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out, std::size_t depth) {
    for (std::size_t k = 0; k < depth; ++k)
      dense(layer(prefix, k), k == 0 ? in : hidden, k + 1 == depth ? out : hidden);
  }

  void rbf(const std::string& prefix, std::size_t in, std::size_t centers, std::size_t out, double tau_init,
           std::uint64_t seed) {
    const auto pd = poisson_disk_cube(in, centers, seed);
    const double tau = tau_init > 0.0 ? tau_init : 2.0 * pd.radius;
    store.add(prefix + ".centers", pd.points, "poisson-disk", false);
    store.add(prefix + ".tau", Array(1, centers, tau), tau_init > 0.0 ? "constant" : "2*poisson-radius");
    store.add(prefix + ".W", normal(centers, out, 0.0, std::sqrt(2.0 / static_cast<double>(centers + out))),
              "glorot-normal");
  }
};

}  // namespace

Model::Model(ModelSpec spec, std::uint64_t seed, ParamStore params)
    : spec_(std::move(spec)), seed_(seed), params_(std::move(params)) {
  spec_.validate();
}

Model Model::build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  m.seed_ = seed;
  Builder b{m.params_, std::mt19937_64(seed), spec.rwf, spec.rwf_mu, spec.rwf_sigma};

  const EmbeddingSpec& emb = spec.embedding;
  std::size_t width = spec.input_dim;
  if (emb.has_periodic()) width += emb.periodic_dims.size();
  if (emb.has_fourier()) {
    m.params_.add("embed.B", b.normal(width, emb.fourier_count, 0.0, emb.fourier_scale), "normal(0,scale)", false);
    width = 2 * emb.fourier_count;
  }
  const std::size_t out = spec.output_dim;

  switch (spec.kind) {
    case ArchKind::HyRes: {
      const std::size_t p = spec.blocks.empty() ? spec.head_width : spec.blocks.front().width;
      b.dense("proj", width, p);
      for (std::size_t l = 0; l < spec.blocks.size(); ++l) {
        const auto& bs = spec.blocks[l];
        const std::string pre = block_prefix(l);
        const std::size_t in = l == 0 ? width : p;
        b.rbf(pre + ".rbf", in, bs.rbf_centers, p, bs.tau_init, seed * 1000003ULL + l + 1);
        b.mlp(pre + ".nn", in, bs.nn_width, p, bs.nn_depth);
        m.params_.add(pre + ".alpha", Array::scalar(0.0), "constant");
        m.params_.add(pre + ".beta", Array::scalar(kBetaInit), "constant");
      }
      b.mlp("head", p, spec.head_width, out, spec.head_depth);
      break;
    }
    case ArchKind::Pinn:
    case ArchKind::Expert:
      b.mlp("mlp", width, spec.mlp_width, out, spec.mlp_depth);
      break;
    case ArchKind::ResPinn: {
      b.dense("in", width, spec.mlp_width);
      for (std::size_t u = 0; u < (spec.mlp_depth - 2) / 2; ++u)
        b.mlp("res" + std::to_string(u), spec.mlp_width, spec.mlp_width, spec.mlp_width, 2);
      b.dense("out", spec.mlp_width, out);
      break;
    }
    case ArchKind::RbfNet: {
      const auto& bs = spec.blocks.front();
      b.rbf("rbf", width, bs.rbf_centers, out, bs.tau_init, seed * 1000003ULL + 1);
      break;
    }
  }
  return m;
}

Var Model::rescale(const Var& x) const {
  if (spec_.input_lo.empty()) return x;
  const std::size_t d = spec_.input_dim;
  Array s(1, d, 1.0), o(1, d, 0.0);
  const auto& per = spec_.embedding.periodic_dims;
  const bool periodic = spec_.embedding.has_periodic();
  for (std::size_t k = 0; k < d; ++k) {
    if (periodic && std::find(per.begin(), per.end(), k) != per.end()) continue;
    s[k] = 2.0 / (spec_.input_hi[k] - spec_.input_lo[k]);
    o[k] = -1.0 - spec_.input_lo[k] * s[k];
  }
  Tape& t = x.tape();
  return add_row(mul_row(x, t.constant(std::move(s))), t.constant(std::move(o)));
}

Var Model::forward(const BoundParams& params, const Var& x, ForwardTrace* trace) const {
  if (x.cols() != spec_.input_dim)
    throw ShapeError("model input " + to_string(x.shape()) + " does not have " + std::to_string(spec_.input_dim) +
                     " columns");
  Var e = embed(rescale(x), spec_.embedding, params);
  if (trace) {
    trace->embedding = e.value();
    trace->blocks.clear();
  }
  switch (spec_.kind) {
    case ArchKind::HyRes: {
      Var abar = dense_forward(e, params, "proj", true);
      if (trace) trace->abar0 = abar.value();
      check_bounded(abar.value(), "abar0");
      for (std::size_t l = 0; l < spec_.blocks.size(); ++l) {
        const std::string pre = block_prefix(l);
        BlockTrace* bt = nullptr;
        if (trace) bt = &trace->blocks.emplace_back();
        Var f = hybrid_block_forward(l == 0 ? e : abar, params, pre, spec_.blocks[l].nn_depth, bt);
        Var g = sigmoid(params(pre + ".beta"));
        abar = f * g + abar * shift(neg(g), 1.0);
        check_bounded(abar.value(), "abar");
        if (bt) bt->skip = abar.value();
      }
      return mlp_forward(abar, params, "head", spec_.head_depth);
    }
    case ArchKind::Pinn:
    case ArchKind::Expert:
      return mlp_forward(e, params, "mlp", spec_.mlp_depth);
    case ArchKind::ResPinn: {
      Var h = dense_forward(e, params, "in", true);
      for (std::size_t u = 0; u < (spec_.mlp_depth - 2) / 2; ++u) {
        const std::string pre = "res" + std::to_string(u);
        h = h + tanh(mlp_forward(h, params, pre, 2));
      }
      return dense_forward(h, params, "out", false);
    }
    case ArchKind::RbfNet:
      return rbf_net_forward(e, params("rbf.centers"), params("rbf.tau"), params("rbf.W"));
  }
  throw std::logic_error("unknown architecture");
}

Array Model::predict(const Array& x) const {
  constexpr std::size_t kChunk = 2048;
  Array out(x.rows(), spec_.output_dim);
  for (std::size_t r0 = 0; r0 < x.rows(); r0 += kChunk) {
    const std::size_t r1 = std::min(x.rows(), r0 + kChunk);
    Tape tape;
    BoundParams bp(params_, tape, false);
    Var y = forward(bp, tape.constant(x.row_range(r0, r1)));
    std::copy(y.value().data().begin(), y.value().data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(r0 * spec_.output_dim));
  }
  return out;
}

std::size_t Model::block_count() const { return spec_.kind == ArchKind::HyRes ? spec_.blocks.size() : 0; }

std::vector<std::string> Model::alpha_names() const {
  std::vector<std::string> n;
  for (std::size_t l = 0; l < block_count(); ++l) n.push_back(block_prefix(l) + ".alpha");
  return n;
}

std::vector<std::string> Model::beta_names() const {
  std::vector<std::string> n;
  for (std::size_t l = 0; l < block_count(); ++l) n.push_back(block_prefix(l) + ".beta");
  return n;
}

std::vector<std::string> Model::tau_names() const {
  std::vector<std::string> n;
  for (std::size_t l = 0; l < block_count(); ++l) n.push_back(block_prefix(l) + ".rbf.tau");
  if (spec_.kind == ArchKind::RbfNet) n.push_back("rbf.tau");
  return n;
}

}  // namespace hyres
