#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "desireme/domain_labels.hpp"
#include "desireme/errors.hpp"
#include "desireme/losses.hpp"
#include "desireme/moe.hpp"
#include "desireme/parallel.hpp"
#include "desireme/vecmath.hpp"

namespace desireme {

template <class T>
struct TrainingExample {
  std::string query_id;
  Vector<T> query_embedding;
  Vector<T> positive_doc_embedding;
  DomainLabelVector domain_labels;
};

struct TrainConfig {
  std::size_t batch_size = 512;
  double learning_rate = 1e-5;
  std::size_t epochs = 60;
  double validation_fraction = 0.05;
  double temperature = 1.0;
  double loss_weight = 1.0;  // weight of the gating BCE term
  std::uint64_t seed = 42;
  Similarity similarity = Similarity::dot;
  MoEOptions model;
  InitScheme init = InitScheme::adapter;
  unsigned threads = 1;

  void validate() const {
    require(batch_size >= 2, "batch_size must be at least 2 (in-batch negatives)");
    require(validation_fraction > 0.0 && validation_fraction < 1.0,
            "validation_fraction must lie strictly between 0 and 1");
    require(temperature > 0.0, "temperature must be positive");
    require(loss_weight >= 0.0, "loss_weight must be non-negative");
    require(learning_rate >= 0.0, "learning_rate must be non-negative");
  }
};

template <class T>
struct LossBreakdown {
  T total{};
  T contrastive{};
  T bce{};
};

template <class T>
struct TotalLossResult {
  LossBreakdown<T> loss;
  MoEParams<T> grads;
};

namespace detail {

template <class T>
struct ForwardCache {
  Vector<T> a1, h1, a2, h2;  // gating pre/post activations
  Vector<T> logits, gates;
  Vector<T> weights;  // pooling weights (gates after optional normalization)
  std::size_t top = 0;
  std::vector<Vector<T>> spec_pre;  // w_down x + b_down
  std::vector<Vector<T>> spec_out;  // f_k(x); empty slot when not evaluated
  Vector<T> output;
};

template <class T>
ForwardCache<T> forward_cached(const Vector<T>& x, const MoEParams<T>& p, Pooling pooling) {
  require(x.dim() == p.dim, "training: embedding dimension " + std::to_string(x.dim()) +
                                " does not match model dimension " + std::to_string(p.dim));
  ForwardCache<T> c;
  const auto& g = p.gating;
  c.a1 = affine(g.w1, x, g.b1);
  c.h1 = elementwise(c.a1, Activation::relu);
  c.a2 = affine(g.w2, c.h1, g.b2);
  c.h2 = elementwise(c.a2, Activation::relu);
  c.logits = affine(g.w_out, c.h2, g.b_out);
  c.gates = elementwise(c.logits, Activation::sigmoid);

  const std::size_t m = p.num_domains;
  c.spec_pre.resize(m);
  c.spec_out.resize(m);
  c.output = x;
  auto eval = [&](std::size_t k) {
    const auto& s = p.specializers[k];
    c.spec_pre[k] = affine(s.w_down, x, s.b_down);
    c.spec_out[k] = affine(s.w_up, elementwise(c.spec_pre[k], Activation::relu), s.b_up);
  };
  if (pooling == Pooling::top1) {
    c.top = argmax_lowest(c.gates);
    eval(c.top);
    c.output += c.spec_out[c.top];
  } else {
    c.weights = normalize_gates(c.gates, p.options.normalization);
    for (std::size_t k = 0; k < m; ++k) {
      eval(k);
      const T w = c.weights[k];
      for (std::size_t j = 0; j < p.dim; ++j) c.output[j] += w * c.spec_out[k][j];
    }
  }
  return c;
}

template <class T>
LossBreakdown<T> loss_impl(std::span<const TrainingExample<T>> batch, const MoEParams<T>& params,
                           const TrainConfig& config, MoEParams<T>* grads) {
  const std::size_t n = batch.size();
  require(n >= 2, "training batch must contain at least 2 examples");
  const Pooling pooling = params.options.pooling;
  const std::size_t m = params.num_domains;
  for (const auto& ex : batch) {
    require(ex.domain_labels.size() == m, "example " + ex.query_id + " has " +
                                              std::to_string(ex.domain_labels.size()) +
                                              " domain labels, model has " + std::to_string(m));
  }

  std::vector<ForwardCache<T>> cache(n);
  parallel_for(n, config.threads,
               [&](std::size_t i) { cache[i] = forward_cached(batch[i].query_embedding, params, pooling); });

  std::vector<Vector<T>> outputs, docs;
  outputs.reserve(n);
  docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    outputs.push_back(cache[i].output);
    docs.push_back(batch[i].positive_doc_embedding);
  }
  const auto con = contrastive_loss<T>(outputs, docs, static_cast<T>(config.temperature),
                                       config.similarity);

  const T lambda = static_cast<T>(config.loss_weight);
  const T inv_n = T(1) / static_cast<T>(n);
  std::vector<BceResult<T>> bce(n);
  T bce_mean = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    bce[i] = bce_with_logits(cache[i].logits, batch[i].domain_labels);
    bce_mean += bce[i].loss;
  }
  bce_mean *= inv_n;

  LossBreakdown<T> loss{con.loss + lambda * bce_mean, con.loss, bce_mean};
  if (!std::isfinite(loss.total)) throw NumericalError("total loss is not finite");
  if (grads == nullptr) return loss;

  require(grads->same_shape(params), "gradient buffer shape does not match parameters");

  // Per-example deltas of the gating network.
  std::vector<Vector<T>> dz(n), da2(n), da1(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    const auto& c = cache[i];
    const Vector<T>& dy = con.grad_queries[i];
    Vector<T> dlogit = bce[i].grad_logits;
    dlogit *= lambda * inv_n;
    if (pooling == Pooling::weighted) {
      Vector<T> dw(m);
      for (std::size_t k = 0; k < m; ++k) dw[k] = dot(c.spec_out[k], dy);
      Vector<T> dp = dw;
      if (params.options.normalization == GateNormalization::sum_to_one) {
        T total = T(0), proj = T(0);
        for (std::size_t k = 0; k < m; ++k) {
          total += c.gates[k];
          proj += dw[k] * c.weights[k];
        }
        for (std::size_t k = 0; k < m; ++k) dp[k] = (dw[k] - proj) / total;
      }
      for (std::size_t k = 0; k < m; ++k) {
        dlogit[k] += dp[k] * c.gates[k] * (T(1) - c.gates[k]);
      }
    }
    Vector<T> d2 = matvec_transposed(params.gating.w_out, dlogit);
    for (std::size_t r = 0; r < d2.dim(); ++r) {
      if (!(c.a2[r] > T(0))) d2[r] = T(0);
    }
    Vector<T> d1 = matvec_transposed(params.gating.w2, d2);
    for (std::size_t r = 0; r < d1.dim(); ++r) {
      if (!(c.a1[r] > T(0))) d1[r] = T(0);
    }
    dz[i] = std::move(dlogit);
    da2[i] = std::move(d2);
    da1[i] = std::move(d1);
  });

  // Accumulate in example order within each output row: the summation order
  // is fixed regardless of how rows are spread across threads.
  auto accumulate_rows = [&](Matrix<T>& gw, Vector<T>& gb, const std::vector<Vector<T>>& delta,
                             auto&& input_of) {
    parallel_for(gw.rows(), config.threads, [&](std::size_t r) {
      auto row = gw.row(r);
      for (std::size_t i = 0; i < n; ++i) {
        const T s = delta[i][r];
        if (s == T(0)) continue;
        gb[r] += s;
        const Vector<T>& in = input_of(i);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += s * in[c];
      }
    });
  };
  auto& gg = grads->gating;
  accumulate_rows(gg.w_out, gg.b_out, dz, [&](std::size_t i) -> const Vector<T>& { return cache[i].h2; });
  accumulate_rows(gg.w2, gg.b2, da2, [&](std::size_t i) -> const Vector<T>& { return cache[i].h1; });
  accumulate_rows(gg.w1, gg.b1, da1,
                  [&](std::size_t i) -> const Vector<T>& { return batch[i].query_embedding; });

  // Specializers are independent of each other; each loops examples in order.
  parallel_for(m, config.threads, [&](std::size_t k) {
    const auto& s = params.specializers[k];
    auto& gs = grads->specializers[k];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = cache[i];
      T w;
      if (pooling == Pooling::top1) {
        w = c.top == k ? T(1) : T(0);
      } else {
        w = c.weights[k];
      }
      if (w == T(0)) continue;
      Vector<T> df = con.grad_queries[i];
      df *= w;
      const Vector<T> hidden = elementwise(c.spec_pre[k], Activation::relu);
      add_outer(gs.w_up, df, hidden);
      gs.b_up += df;
      Vector<T> da = matvec_transposed(s.w_up, df);
      for (std::size_t r = 0; r < da.dim(); ++r) {
        if (!(c.spec_pre[k][r] > T(0))) da[r] = T(0);
      }
      add_outer(gs.w_down, da, batch[i].query_embedding);
      gs.b_down += da;
    }
  });
  return loss;
}

}  // namespace detail

/// Loss value only (validation).
template <class T>
LossBreakdown<T> evaluate_loss(std::span<const TrainingExample<T>> batch,
                               const MoEParams<T>& params, const TrainConfig& config) {
  return detail::loss_impl<T>(batch, params, config, nullptr);
}

/// L = L_contrastive(moe_transform(q), d+) + lambda * mean BCE(gate logits, labels),
/// with gradients for every parameter by reverse-mode accumulation.
template <class T>
TotalLossResult<T> total_loss(std::span<const TrainingExample<T>> batch,
                              const MoEParams<T>& params, const TrainConfig& config) {
  TotalLossResult<T> r{{}, params.zeros_like()};
  r.loss = detail::loss_impl<T>(batch, params, config, &r.grads);
  return r;
}

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckEntry {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  GradCheckEntry worst;  // largest relative error among all entries
  std::vector<GradCheckEntry> failures;
  bool passed = true;
};

/// Multiplies one analytic gradient entry before comparison (self-test of the checker).
struct FaultInjection {
  std::string tensor;
  std::size_t index = 0;
  double factor = 1.01;
};

/// The analytic gradient entry of largest magnitude, as a fault-injection target.
inline FaultInjection largest_gradient_entry(const MoEParams<double>& grads) {
  FaultInjection fault;
  double best = -1.0;
  grads.for_each_tensor([&](const std::string& name, std::span<const double> t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (std::abs(t[i]) > best) {
        best = std::abs(t[i]);
        fault.tensor = name;
        fault.index = i;
      }
    }
  });
  return fault;
}

/// Compares every analytic dL/dtheta against (L(theta+h) - L(theta-h)) / 2h.
/// An entry passes when |a - n| <= max(tol * max(|a|, |n|), abs_floor).
inline GradCheckReport grad_check(const MoEParams<double>& params,
                                  std::span<const TrainingExample<double>> batch,
                                  const TrainConfig& config, double h, double tol,
                                  double abs_floor = 1e-6,
                                  const std::optional<FaultInjection>& fault = std::nullopt) {
  require(h > 0.0 && tol > 0.0, "grad_check: h and tol must be positive");
  TrainConfig serial = config;
  serial.threads = 1;
  auto analytic = total_loss<double>(batch, params, serial).grads;
  if (fault) {
    bool found = false;
    analytic.for_each_tensor([&](const std::string& name, std::span<double> t) {
      if (name == fault->tensor && fault->index < t.size()) {
        t[fault->index] *= fault->factor;
        found = true;
      }
    });
    require(found, "grad_check: fault target " + fault->tensor + "[" +
                       std::to_string(fault->index) + "] does not exist");
  }

  std::vector<std::span<const double>> analytic_tensors;
  analytic.for_each_tensor(
      [&](const std::string&, std::span<const double> t) { analytic_tensors.push_back(t); });

  MoEParams<double> probe = params;
  GradCheckReport report;
  std::size_t tensor_index = 0;
  probe.for_each_tensor([&](const std::string& name, std::span<double> t) {
    const auto a_tensor = analytic_tensors[tensor_index++];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = evaluate_loss<double>(batch, probe, serial).total;
      t[i] = saved - h;
      const double down = evaluate_loss<double>(batch, probe, serial).total;
      t[i] = saved;

      GradCheckEntry e{name, i, a_tensor[i], (up - down) / (2.0 * h), 0.0, 0.0};
      e.abs_error = std::abs(e.analytic - e.numeric);
      const double scale = std::max(std::abs(e.analytic), std::abs(e.numeric));
      e.rel_error = scale > 0.0 ? e.abs_error / scale : 0.0;
      ++report.checked;
      report.max_abs_error = std::max(report.max_abs_error, e.abs_error);
      if (report.checked == 1 || e.rel_error > report.worst.rel_error) report.worst = e;
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      if (e.abs_error > std::max(tol * scale, abs_floor)) {
        report.failures.push_back(e);
        report.passed = false;
      }
    }
  });
  return report;
}

// ---------------------------------------------------------------------------
// Optimizer

template <class T>
struct AdamState {
  MoEParams<T> first_moment;
  MoEParams<T> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MoEParams<T>& params) {
    return AdamState{params.zeros_like(), params.zeros_like()};
  }
};

/// Adam with bias correction.
template <class T>
void adam_step(MoEParams<T>& params, const MoEParams<T>& grads, AdamState<T>& state, double lr) {
  require(params.same_shape(grads), "adam_step: gradient shapes do not match parameters");
  require(params.same_shape(state.first_moment) && params.same_shape(state.second_moment),
          "adam_step: optimizer state shapes do not match parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  std::vector<std::span<const T>> g;
  std::vector<std::span<T>> m, v;
  grads.for_each_tensor([&](const std::string&, std::span<const T> s) { g.push_back(s); });
  state.first_moment.for_each_tensor([&](const std::string&, std::span<T> s) { m.push_back(s); });
  state.second_moment.for_each_tensor([&](const std::string&, std::span<T> s) { v.push_back(s); });

  std::size_t k = 0;
  params.for_each_tensor([&](const std::string&, std::span<T> p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[k][i];
      const double mi = state.beta1 * m[k][i] + (1.0 - state.beta1) * gi;
      const double vi = state.beta2 * v[k][i] + (1.0 - state.beta2) * gi * gi;
      m[k][i] = static_cast<T>(mi);
      v[k][i] = static_cast<T>(vi);
      const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + state.epsilon);
      p[i] = static_cast<T>(p[i] - update);
    }
    ++k;
  });
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_total = 0.0;
  double train_contrastive = 0.0;
  double train_bce = 0.0;
  double val_total = 0.0;
  double val_contrastive = 0.0;
  double val_bce = 0.0;
};

/// Keeps the snapshot with the strictly lowest validation loss (earliest wins ties).
template <class T>
class BestCheckpoint {
 public:
  bool offer(std::size_t epoch, double val_loss, const MoEParams<T>& params) {
    if (best_ && !(val_loss < best_loss_)) return false;
    best_ = params;
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    return true;
  }

  bool has_value() const { return best_.has_value(); }
  std::size_t epoch() const { return best_epoch_; }
  double loss() const { return best_loss_; }
  const MoEParams<T>& params() const { return *best_; }

 private:
  std::optional<MoEParams<T>> best_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
};

/// [begin, end) ranges of at most batch_size; a trailing batch of one example
/// is folded into its predecessor so every batch has a negative.
inline std::vector<std::pair<std::size_t, std::size_t>> make_batches(std::size_t n,
                                                                     std::size_t batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch_size) out.emplace_back(b, std::min(n, b + batch_size));
  if (out.size() >= 2 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

/// Validation size: max(2, round(fraction * n)). Both splits need >= 2 examples.
inline std::pair<std::size_t, std::size_t> split_sizes(std::size_t n, double fraction) {
  const auto val = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  if (n < val + 2) {
    throw InputError("training needs at least " + std::to_string(val + 2) +
                     " examples (2 for validation, 2 for training); got " + std::to_string(n));
  }
  return {n - val, val};
}

template <class T>
struct TrainResult {
  MoEParams<T> params;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
};

template <class T>
LossBreakdown<double> mean_loss(std::span<const TrainingExample<T>> set, const MoEParams<T>& params,
                                const TrainConfig& config) {
  LossBreakdown<double> acc;
  for (auto [b, e] : make_batches(set.size(), config.batch_size)) {
    const auto l = evaluate_loss<T>(set.subspan(b, e - b), params, config);
    const double w = static_cast<double>(e - b) / static_cast<double>(set.size());
    acc.total += w * l.total;
    acc.contrastive += w * l.contrastive;
    acc.bce += w * l.bce;
  }
  return acc;
}

/// Deterministic split, per-epoch shuffling, Adam updates, and selection of
/// the snapshot with the lowest validation loss.
template <class T>
TrainResult<T> train(std::vector<TrainingExample<T>> examples, const TrainConfig& config,
                     const std::function<void(const EpochLog&)>& on_epoch = {}) {
  config.validate();
  require(!examples.empty(), "train: no training examples");
  const std::size_t dim = examples.front().query_embedding.dim();
  const std::size_t m = examples.front().domain_labels.size();
  for (const auto& ex : examples) {
    require(ex.query_embedding.dim() == dim && ex.positive_doc_embedding.dim() == dim,
            "train: example " + ex.query_id + " has inconsistent embedding dimension");
    require(ex.domain_labels.size() == m,
            "train: example " + ex.query_id + " has inconsistent label length");
  }
  const auto [n_train, n_val] = split_sizes(examples.size(), config.validation_fraction);

  const Rng root(config.seed);
  Rng init_rng = root.derive(1);
  Rng split_rng = root.derive(2);
  Rng shuffle_rng = root.derive(3);

  shuffle(examples, split_rng);
  std::vector<TrainingExample<T>> train_set(std::make_move_iterator(examples.begin()),
                                            std::make_move_iterator(examples.begin() + n_train));
  const std::vector<TrainingExample<T>> val_set(std::make_move_iterator(examples.begin() + n_train),
                                                std::make_move_iterator(examples.end()));

  TrainResult<T> result{MoEParams<T>::initialized(dim, m, init_rng, config.init, config.model), {},
                        0};
  if (config.epochs == 0) return result;

  MoEParams<T> params = result.params;
  AdamState<T> adam = AdamState<T>::for_params(params);
  BestCheckpoint<T> best;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(train_set, shuffle_rng);
    EpochLog row;
    row.epoch = epoch;
    for (auto [b, e] : make_batches(train_set.size(), config.batch_size)) {
      auto step = total_loss<T>(std::span<const TrainingExample<T>>(train_set).subspan(b, e - b),
                                params, config);
      const double w = static_cast<double>(e - b) / static_cast<double>(train_set.size());
      row.train_total += w * step.loss.total;
      row.train_contrastive += w * step.loss.contrastive;
      row.train_bce += w * step.loss.bce;
      adam_step(params, step.grads, adam, config.learning_rate);
    }
    const auto val = mean_loss<T>(val_set, params, config);
    row.val_total = val.total;
    row.val_contrastive = val.contrastive;
    row.val_bce = val.bce;
    best.offer(epoch, row.val_total, params);
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  result.params = best.params();
  result.best_epoch = best.epoch();
  return result;
}

/// One tab-separated record per epoch:
/// epoch, train_total, train_contrastive, train_bce, val_total, val_contrastive, val_bce
inline void write_training_log(std::ostream& out, std::span<const EpochLog> log) {
  char buf[256];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\n", r.epoch,
                  r.train_total, r.train_contrastive, r.train_bce, r.val_total,
                  r.val_contrastive, r.val_bce);
    out << buf;
  }
}

}  // namespace desireme
