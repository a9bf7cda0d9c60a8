#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "desireme/errors.hpp"
#include "desireme/vecmath.hpp"

namespace desireme {

/// Bottleneck expert: d -> d/2 -> d.
template <class T>
struct SpecializerParams {
  Matrix<T> w_down;  // (d/2) x d
  Vector<T> b_down;  // d/2
  Matrix<T> w_up;    // d x (d/2)
  Vector<T> b_up;    // d

  bool operator==(const SpecializerParams&) const = default;
};

/// Multi-label domain classifier: d -> 2d -> 4d -> M, sigmoid on the output.
template <class T>
struct GatingParams {
  Matrix<T> w1;     // 2d x d
  Vector<T> b1;     // 2d
  Matrix<T> w2;     // 4d x 2d
  Vector<T> b2;     // 4d
  Matrix<T> w_out;  // M x 4d
  Vector<T> b_out;  // M

  bool operator==(const GatingParams&) const = default;
};

enum class Pooling : std::uint32_t { weighted = 0, top1 = 1 };
enum class GateNormalization : std::uint32_t { none = 0, sum_to_one = 1 };

struct MoEOptions {
  Pooling pooling = Pooling::weighted;
  GateNormalization normalization = GateNormalization::none;

  bool operator==(const MoEOptions&) const = default;
};

enum class InitScheme {
  adapter,  // zero specializer w_up and gating w_out: identity map, all gates 0.5
  glorot,   // Glorot for every weight matrix
};

inline constexpr std::size_t kDefaultNumDomains = 37;

template <class T>
struct MoEParams {
  std::size_t dim = 0;
  std::size_t num_domains = 0;
  MoEOptions options;
  GatingParams<T> gating;
  std::vector<SpecializerParams<T>> specializers;

  /// All weights and biases zero.
  static MoEParams zeros(std::size_t dim, std::size_t num_domains, MoEOptions options = {}) {
    check_dims(dim, num_domains);
    const std::size_t h = dim / 2;
    MoEParams p;
    p.dim = dim;
    p.num_domains = num_domains;
    p.options = options;
    p.gating = GatingParams<T>{Matrix<T>(2 * dim, dim),      Vector<T>(2 * dim),
                               Matrix<T>(4 * dim, 2 * dim),  Vector<T>(4 * dim),
                               Matrix<T>(num_domains, 4 * dim), Vector<T>(num_domains)};
    p.specializers.assign(num_domains, SpecializerParams<T>{Matrix<T>(h, dim), Vector<T>(h),
                                                            Matrix<T>(dim, h), Vector<T>(dim)});
    return p;
  }

  /// Biases zero; weights per `scheme`. Draw order is gating w1, w2, w_out,
  /// then each specializer's w_down and w_up, skipping the matrices the
  /// adapter scheme leaves at zero.
  static MoEParams initialized(std::size_t dim, std::size_t num_domains, Rng& rng,
                               InitScheme scheme = InitScheme::adapter,
                               MoEOptions options = {}) {
    MoEParams p = zeros(dim, num_domains, options);
    p.gating.w1 = glorot_uniform_init<T>(2 * dim, dim, rng);
    p.gating.w2 = glorot_uniform_init<T>(4 * dim, 2 * dim, rng);
    if (scheme == InitScheme::glorot) p.gating.w_out = glorot_uniform_init<T>(num_domains, 4 * dim, rng);
    for (auto& s : p.specializers) {
      s.w_down = glorot_uniform_init<T>(dim / 2, dim, rng);
      if (scheme == InitScheme::glorot) s.w_up = glorot_uniform_init<T>(dim, dim / 2, rng);
    }
    return p;
  }

  static void check_dims(std::size_t dim, std::size_t num_domains) {
    require(dim >= 2, "model dimension must be at least 2");
    require(dim % 2 == 0, "model dimension must be even (specializers project to d/2), got " +
                              std::to_string(dim));
    require(num_domains >= 1, "number of domains must be at least 1");
  }

  /// Visits every tensor in checkpoint order as f(name, span).
  template <class F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::string&, std::span<const T> t) { n += t.size(); });
    return n;
  }

  /// Same shapes, all zero. Used for gradients and optimizer moments.
  MoEParams zeros_like() const { return zeros(dim, num_domains, options); }

  bool same_shape(const MoEParams& other) const {
    if (dim != other.dim || num_domains != other.num_domains) return false;
    std::vector<std::size_t> a, b;
    for_each_tensor([&](const std::string&, std::span<const T> t) { a.push_back(t.size()); });
    other.for_each_tensor([&](const std::string&, std::span<const T> t) { b.push_back(t.size()); });
    return a == b;
  }

  bool operator==(const MoEParams&) const = default;

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    auto& g = self.gating;
    f(std::string("gating.w1"), g.w1.span());
    f(std::string("gating.b1"), g.b1.span());
    f(std::string("gating.w2"), g.w2.span());
    f(std::string("gating.b2"), g.b2.span());
    f(std::string("gating.w_out"), g.w_out.span());
    f(std::string("gating.b_out"), g.b_out.span());
    for (std::size_t i = 0; i < self.specializers.size(); ++i) {
      auto& s = self.specializers[i];
      const std::string prefix = "specializer[" + std::to_string(i) + "].";
      f(prefix + "w_down", s.w_down.span());
      f(prefix + "b_down", s.b_down.span());
      f(prefix + "w_up", s.w_up.span());
      f(prefix + "b_up", s.b_up.span());
    }
  }
};

template <class To, class From>
MoEParams<To> convert(const MoEParams<From>& p) {
  MoEParams<To> out;
  out.dim = p.dim;
  out.num_domains = p.num_domains;
  out.options = p.options;
  const auto& g = p.gating;
  out.gating = GatingParams<To>{convert<To>(g.w1), convert<To>(g.b1),    convert<To>(g.w2),
                                convert<To>(g.b2), convert<To>(g.w_out), convert<To>(g.b_out)};
  for (const auto& s : p.specializers) {
    out.specializers.push_back(SpecializerParams<To>{convert<To>(s.w_down), convert<To>(s.b_down),
                                                     convert<To>(s.w_up), convert<To>(s.b_up)});
  }
  return out;
}

template <class T>
Vector<T> specializer_forward(const Vector<T>& x, const SpecializerParams<T>& p) {
  require(x.dim() == p.w_down.cols(), "specializer_forward: input dimension " +
                                          std::to_string(x.dim()) + " does not match " +
                                          std::to_string(p.w_down.cols()));
  return affine(p.w_up, elementwise(affine(p.w_down, x, p.b_down), Activation::relu), p.b_up);
}

/// Pre-sigmoid gate outputs.
template <class T>
Vector<T> gate_logits(const Vector<T>& x, const GatingParams<T>& g) {
  require(x.dim() == g.w1.cols(), "gate_forward: input dimension " + std::to_string(x.dim()) +
                                      " does not match " + std::to_string(g.w1.cols()));
  const Vector<T> h1 = elementwise(affine(g.w1, x, g.b1), Activation::relu);
  const Vector<T> h2 = elementwise(affine(g.w2, h1, g.b2), Activation::relu);
  return affine(g.w_out, h2, g.b_out);
}

/// Independent per-domain probabilities; not constrained to sum to one.
template <class T>
Vector<T> gate_forward(const Vector<T>& x, const GatingParams<T>& g) {
  return elementwise(gate_logits(x, g), Activation::sigmoid);
}

template <class T>
void check_pool_args(const Vector<T>& scores, std::span<const Vector<T>> outputs) {
  require(!outputs.empty(), "pool: no specializer outputs");
  require(scores.dim() == outputs.size(), "pool: " + std::to_string(scores.dim()) +
                                              " scores for " + std::to_string(outputs.size()) +
                                              " specializer outputs");
  for (const auto& o : outputs) {
    require(o.dim() == outputs.front().dim(), "pool: specializer outputs differ in dimension");
  }
}

/// sum_i scores[i] * outputs[i]
template <class T>
Vector<T> pool_weighted(const Vector<T>& scores, std::span<const Vector<T>> outputs) {
  check_pool_args(scores, outputs);
  Vector<T> out(outputs.front().dim());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const T s = scores[i];
    for (std::size_t j = 0; j < out.dim(); ++j) out[j] += s * outputs[i][j];
  }
  return out;
}

/// Index of the largest score; ties go to the lowest index.
template <class T>
std::size_t argmax_lowest(const Vector<T>& scores) {
  require(scores.dim() > 0, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.dim(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

template <class T>
Vector<T> pool_top1(const Vector<T>& scores, std::span<const Vector<T>> outputs) {
  check_pool_args(scores, outputs);
  return outputs[argmax_lowest(scores)];
}

/// Pooling weights derived from raw gate scores.
template <class T>
Vector<T> normalize_gates(Vector<T> scores, GateNormalization normalization) {
  if (normalization == GateNormalization::sum_to_one) {
    T total = T(0);
    for (T s : scores) total += s;
    if (!(total > T(0))) throw NumericalError("gate scores sum to zero; cannot normalize");
    for (T& s : scores) s /= total;
  }
  return scores;
}

/// x + pool(gates, f_1(x) ... f_M(x)) for externally supplied gate scores
/// (learned or random). Normalization from params.options is applied first.
template <class T>
Vector<T> moe_transform_with_gates(const Vector<T>& x, const MoEParams<T>& params,
                                   const Vector<T>& gates, Pooling pooling) {
  require(x.dim() == params.dim, "moe_transform: query dimension " + std::to_string(x.dim()) +
                                     " does not match model dimension " +
                                     std::to_string(params.dim));
  require(gates.dim() == params.num_domains, "moe_transform: gate vector has wrong length");
  Vector<T> out = x;
  if (pooling == Pooling::top1) {
    out += specializer_forward(x, params.specializers[argmax_lowest(gates)]);
    return out;
  }
  const Vector<T> weights = normalize_gates(gates, params.options.normalization);
  std::vector<Vector<T>> outputs;
  outputs.reserve(params.num_domains);
  for (const auto& s : params.specializers) outputs.push_back(specializer_forward(x, s));
  out += pool_weighted(weights, std::span<const Vector<T>>(outputs));
  return out;
}

template <class T>
Vector<T> moe_transform(const Vector<T>& x, const MoEParams<T>& params, Pooling pooling) {
  require(x.dim() == params.dim, "moe_transform: query dimension " + std::to_string(x.dim()) +
                                     " does not match model dimension " +
                                     std::to_string(params.dim));
  return moe_transform_with_gates(x, params, gate_forward(x, params.gating), pooling);
}

template <class T>
Vector<T> moe_transform(const Vector<T>& x, const MoEParams<T>& params) {
  return moe_transform(x, params, params.options.pooling);
}

/// Uniform gate weights in (0, 1) for the random-gating baseline.
template <class T>
Vector<T> random_gate(std::size_t m, Rng& rng) {
  require(m >= 1, "random_gate: need at least one domain");
  Vector<T> g(m);
  for (std::size_t i = 0; i < m; ++i) {
    T v = static_cast<T>(rng.uniform_open());
    // float rounding can land on 1.0
    g[i] = std::clamp(v, std::numeric_limits<T>::denorm_min(), std::nextafter(T(1), T(0)));
  }
  return g;
}

}  // namespace desireme
