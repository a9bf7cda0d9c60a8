#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "desireme/errors.hpp"
#include "desireme/retrieval.hpp"

namespace desireme {

// Binary-relevance ranking metrics. Every metric is evaluated over the
// queries of the qrels that have at least one relevant document; a query
// absent from the run scores 0. Run queries unknown to the qrels are rejected.

enum class MetricKind { map, mrr, recall, ndcg, precision };

struct MetricSpec {
  MetricKind kind;
  std::size_t cutoff;

  std::string name() const {
    switch (kind) {
      case MetricKind::map: return "MAP@" + std::to_string(cutoff);
      case MetricKind::mrr: return "MRR@" + std::to_string(cutoff);
      case MetricKind::recall: return "R@" + std::to_string(cutoff);
      case MetricKind::ndcg: return "NDCG@" + std::to_string(cutoff);
      case MetricKind::precision: return "P@" + std::to_string(cutoff);
    }
    return "?";
  }
};

/// MAP@100, MRR@100, R@100, NDCG@10, NDCG@3, P@1.
inline std::vector<MetricSpec> standard_metrics() {
  return {{MetricKind::map, 100},  {MetricKind::mrr, 100}, {MetricKind::recall, 100},
          {MetricKind::ndcg, 10},  {MetricKind::ndcg, 3},  {MetricKind::precision, 1}};
}

struct MetricResult {
  std::map<std::string, double> per_query;
  double mean = 0.0;
};

namespace detail {

inline double discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

inline double score_query(MetricKind kind, std::size_t k, const std::vector<ScoredDoc>& ranked,
                          const std::set<std::string>& relevant) {
  const std::size_t depth = std::min(k, ranked.size());
  const double total_relevant = static_cast<double>(relevant.size());
  double acc = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (!relevant.contains(ranked[i].doc_id)) continue;
    const std::size_t rank = i + 1;
    ++hits;
    switch (kind) {
      case MetricKind::map: acc += static_cast<double>(hits) / static_cast<double>(rank); break;
      case MetricKind::mrr: return 1.0 / static_cast<double>(rank);
      case MetricKind::ndcg: acc += discount(rank); break;
      case MetricKind::recall:
      case MetricKind::precision: break;
    }
  }
  switch (kind) {
    case MetricKind::map: return acc / total_relevant;
    case MetricKind::mrr: return 0.0;
    case MetricKind::recall: return static_cast<double>(hits) / total_relevant;
    case MetricKind::precision: return static_cast<double>(hits) / static_cast<double>(k);
    case MetricKind::ndcg: {
      double ideal = 0.0;
      const std::size_t ideal_depth = std::min(relevant.size(), k);
      for (std::size_t rank = 1; rank <= ideal_depth; ++rank) ideal += discount(rank);
      return acc / ideal;
    }
  }
  return 0.0;
}

}  // namespace detail

inline MetricResult evaluate_metric(const RunList& run, const QrelSet& qrels, MetricSpec metric) {
  require(metric.cutoff >= 1, "metric cutoff must be at least 1");
  for (const auto& [qid, docs] : run) {
    require(qrels.contains(qid), "run query \"" + qid + "\" has no relevance judgments");
  }
  static const std::vector<ScoredDoc> kEmpty;
  MetricResult result;
  double sum = 0.0;
  for (const auto& [qid, relevant] : qrels) {
    if (relevant.empty()) continue;
    const auto it = run.find(qid);
    const auto& ranked = it == run.end() ? kEmpty : it->second;
    const double v = detail::score_query(metric.kind, metric.cutoff, ranked, relevant);
    result.per_query.emplace(qid, v);
    sum += v;
  }
  if (!result.per_query.empty()) result.mean = sum / static_cast<double>(result.per_query.size());
  return result;
}

inline MetricResult ndcg_at_k(const RunList& run, const QrelSet& qrels, std::size_t k) {
  return evaluate_metric(run, qrels, {MetricKind::ndcg, k});
}
inline MetricResult map_at_k(const RunList& run, const QrelSet& qrels, std::size_t k) {
  return evaluate_metric(run, qrels, {MetricKind::map, k});
}
inline MetricResult mrr_at_k(const RunList& run, const QrelSet& qrels, std::size_t k) {
  return evaluate_metric(run, qrels, {MetricKind::mrr, k});
}
inline MetricResult recall_at_k(const RunList& run, const QrelSet& qrels, std::size_t k) {
  return evaluate_metric(run, qrels, {MetricKind::recall, k});
}
inline MetricResult p_at_1(const RunList& run, const QrelSet& qrels) {
  return evaluate_metric(run, qrels, {MetricKind::precision, 1});
}

}  // namespace desireme
