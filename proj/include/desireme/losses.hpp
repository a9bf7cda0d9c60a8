#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "desireme/domain_labels.hpp"
#include "desireme/errors.hpp"
#include "desireme/vecmath.hpp"

namespace desireme {

enum class Similarity { dot, cosine };

template <class T>
T similarity(std::span<const T> a, std::span<const T> b, Similarity sim) {
  const T ab = dot(a, b);
  if (sim == Similarity::dot) return ab;
  const T na = std::sqrt(dot(a, a));
  const T nb = std::sqrt(dot(b, b));
  if (!(na > T(0)) || !(nb > T(0))) {
    throw NumericalError("cosine similarity of a zero-norm vector");
  }
  return ab / (na * nb);
}

template <class T>
T similarity(const Vector<T>& a, const Vector<T>& b, Similarity sim) {
  return similarity(a.span(), b.span(), sim);
}

template <class T>
struct ContrastiveResult {
  T loss{};
  std::vector<Vector<T>> grad_queries;  // dL/dq_i
};

/// InfoNCE with in-batch negatives:
///   L = -(1/B) sum_i log softmax_j(s(q_i, d_j) / tau)[i]
/// Documents are frozen, so only query gradients are returned. Similarities
/// and the softmax are accumulated in double precision for every T: large
/// dot products lose their low-order digits in float.
template <class T>
ContrastiveResult<T> contrastive_loss(std::span<const Vector<T>> queries,
                                      std::span<const Vector<T>> docs, T tau, Similarity sim) {
  const std::size_t batch = queries.size();
  require(batch == docs.size(), "contrastive_loss: query and document batches differ in size");
  require(batch >= 2, "contrastive_loss: in-batch negatives need a batch of at least 2");
  require(tau > T(0), "contrastive_loss: temperature must be positive");
  const std::size_t d = queries.front().dim();
  for (std::size_t i = 0; i < batch; ++i) {
    require(queries[i].dim() == d && docs[i].dim() == d,
            "contrastive_loss: embedding dimensions differ");
  }

  std::vector<Vector<double>> q, t;  // queries and targets (unit docs under cosine)
  q.reserve(batch);
  t.reserve(batch);
  std::vector<double> qnorm(batch, 1.0);
  for (std::size_t i = 0; i < batch; ++i) {
    q.push_back(convert<double>(queries[i]));
    t.push_back(convert<double>(docs[i]));
    if (sim == Similarity::cosine) {
      const double dn = norm(t.back());
      if (!(dn > 0.0)) throw NumericalError("contrastive_loss: zero-norm document");
      t.back() *= 1.0 / dn;
      qnorm[i] = norm(q.back());
      if (!(qnorm[i] > 0.0)) throw NumericalError("contrastive_loss: zero-norm query");
    }
  }

  const double temp = static_cast<double>(tau);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  ContrastiveResult<T> result;
  result.grad_queries.assign(batch, Vector<T>(d));
  std::vector<double> s(batch), p(batch);
  Vector<double> g(d);
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < batch; ++j) {
      s[j] = dot(q[i], t[j]) / qnorm[i];
      if (!std::isfinite(s[j])) throw NumericalError("contrastive_loss: non-finite similarity");
    }
    std::size_t jmax = 0;
    for (std::size_t j = 1; j < batch; ++j) {
      if (s[j] > s[jmax]) jmax = j;
    }
    const double zmax = s[jmax] / temp;
    double rest = 0.0;  // sum of exp(z_j - zmax) over j != jmax; the max term is 1
    for (std::size_t j = 0; j < batch; ++j) {
      p[j] = j == jmax ? 1.0 : std::exp(s[j] / temp - zmax);
      if (j != jmax) rest += p[j];
    }
    const double sum = 1.0 + rest;
    total += (zmax - s[i] / temp) + std::log1p(rest);

    // dL/ds_ij = (softmax_ij - [i == j]) / (B tau)
    g.fill(0.0);
    for (std::size_t j = 0; j < batch; ++j) {
      const double ds = (p[j] / sum - (i == j ? 1.0 : 0.0)) * inv_batch / temp;
      if (sim == Similarity::dot) {
        for (std::size_t k = 0; k < d; ++k) g[k] += ds * t[j][k];
      } else {
        // d cos / dq = dhat / |q| - cos * q / |q|^2
        const double a = ds / qnorm[i];
        const double b = ds * s[j] / (qnorm[i] * qnorm[i]);
        for (std::size_t k = 0; k < d; ++k) g[k] += a * t[j][k] - b * q[i][k];
      }
    }
    for (std::size_t k = 0; k < d; ++k) result.grad_queries[i][k] = static_cast<T>(g[k]);
  }
  result.loss = static_cast<T>(total * inv_batch);
  if (!std::isfinite(result.loss)) throw NumericalError("contrastive_loss: non-finite loss");
  return result;
}

template <class T>
struct BceResult {
  T loss{};
  Vector<T> grad_logits;  // (p_i - y_i) / M
};

/// Mean binary cross-entropy over domains, evaluated from logits in the
/// stable form max(z, 0) - z*y + log(1 + exp(-|z|)).
template <class T>
BceResult<T> bce_with_logits(const Vector<T>& logits, const DomainLabelVector& labels) {
  const std::size_t m = logits.dim();
  require(m >= 1, "bce: empty logit vector");
  require(labels.size() == m, "bce: " + std::to_string(labels.size()) + " labels for " +
                                  std::to_string(m) + " domains");
  BceResult<T> result{T(0), Vector<T>(m)};
  const T inv_m = T(1) / static_cast<T>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T z = logits[i];
    const T y = labels.test(i) ? T(1) : T(0);
    result.loss += std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
    result.grad_logits[i] = (sigmoid(z) - y) * inv_m;
  }
  result.loss *= inv_m;
  if (!std::isfinite(result.loss)) throw NumericalError("bce: non-finite loss");
  return result;
}

/// BCE from probabilities. Scores must lie strictly inside (0, 1); they are
/// mapped back to logits so the loss shares the stable evaluation above.
template <class T>
BceResult<T> bce_loss(const Vector<T>& scores, const DomainLabelVector& labels) {
  Vector<T> logits(scores.dim());
  for (std::size_t i = 0; i < scores.dim(); ++i) {
    const T p = scores[i];
    if (!(p > T(0) && p < T(1))) {
      throw NumericalError("bce: gate score " + std::to_string(p) +
                           " is not strictly inside (0, 1)");
    }
    logits[i] = std::log(p) - std::log1p(-p);
  }
  BceResult<T> result = bce_with_logits(logits, labels);
  const T inv_m = T(1) / static_cast<T>(scores.dim());
  for (std::size_t i = 0; i < scores.dim(); ++i) {
    result.grad_logits[i] = (scores[i] - (labels.test(i) ? T(1) : T(0))) * inv_m;
  }
  return result;
}

}  // namespace desireme
