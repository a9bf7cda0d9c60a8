#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "desireme/desireme.hpp"

namespace testsupport {

using namespace desireme;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Random model instances

/// Every parameter non-zero: Glorot weights plus small random biases.
template <class T>
MoEParams<T> random_params(std::size_t d, std::size_t m, Rng& rng, MoEOptions opts = {}) {
  auto p = MoEParams<T>::initialized(d, m, rng, InitScheme::glorot, opts);
  p.for_each_tensor([&](const std::string& name, std::span<T> t) {
    const bool bias = name.find(".b") != std::string::npos;
    if (bias) {
      for (T& v : t) v = static_cast<T>(rng.uniform(-0.2, 0.2));
    }
  });
  return p;
}

template <class T>
Vector<T> random_vector(std::size_t d, Rng& rng, double sd = 1.0) {
  Vector<T> v(d);
  for (T& x : v) x = static_cast<T>(sd * rng.normal());
  return v;
}

template <class T>
std::vector<TrainingExample<T>> random_batch(std::size_t d, std::size_t m, std::size_t b, Rng& rng) {
  std::vector<TrainingExample<T>> out;
  for (std::size_t i = 0; i < b; ++i) {
    DomainLabelVector labels(m);
    for (std::size_t k = 0; k < m; ++k) {
      if (rng.uniform01() < 0.4) labels.set(k);
    }
    out.push_back({"q" + std::to_string(i), random_vector<T>(d, rng), random_vector<T>(d, rng),
                   labels});
  }
  return out;
}

/// Distance of an instance from the non-differentiable set: the smallest
/// |pre-activation| of any ReLU on the query path, and under top-1 pooling the
/// gap between the two largest gates. Finite differences with step h are only
/// meaningful when this is comfortably above h.
template <class T>
double kink_margin(const MoEParams<T>& p, const std::vector<TrainingExample<T>>& batch) {
  double margin = std::numeric_limits<double>::infinity();
  auto scan = [&](const Vector<T>& v) {
    for (T x : v) margin = std::min(margin, std::abs(static_cast<double>(x)));
  };
  for (const auto& ex : batch) {
    const auto c = detail::forward_cached(ex.query_embedding, p, p.options.pooling);
    scan(c.a1);
    scan(c.a2);
    for (const auto& pre : c.spec_pre) scan(pre);
    if (p.options.pooling == Pooling::top1 && p.num_domains > 1) {
      std::vector<double> g(c.gates.begin(), c.gates.end());
      std::sort(g.rbegin(), g.rend());
      margin = std::min(margin, g[0] - g[1]);
    }
  }
  return margin;
}

struct GradInstance {
  MoEParams<double> params;
  std::vector<TrainingExample<double>> batch;
  std::size_t redraws = 0;
};

/// Random parameters and batch redrawn until every kink is at least `margin` away.
inline GradInstance smooth_instance(std::size_t d, std::size_t m, std::size_t b, Rng& rng,
                                    MoEOptions opts = {}, double margin = 1e-3) {
  GradInstance inst{MoEParams<double>::zeros(d, m, opts), {}, 0};
  for (;; ++inst.redraws) {
    inst.params = random_params<double>(d, m, rng, opts);
    inst.batch = random_batch<double>(d, m, b, rng);
    if (kink_margin(inst.params, inst.batch) >= margin) return inst;
  }
}

/// Central differences of a scalar function of a vector.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Brute-force metric oracle: the rank of a document is 1 + the number of
// documents that beat it, enumerated pairwise; no sorting involved.

struct OracleResult {
  std::map<std::string, double> per_query;
  double mean = 0.0;
};

inline std::vector<std::size_t> relevant_ranks(const std::vector<ScoredDoc>& docs,
                                               const std::set<std::string>& relevant) {
  std::vector<std::size_t> ranks;
  for (const auto& d : docs) {
    if (!relevant.count(d.doc_id)) continue;
    std::size_t beaten_by = 0;
    for (const auto& o : docs) {
      if (o.score > d.score || (o.score == d.score && o.doc_id < d.doc_id)) ++beaten_by;
    }
    ranks.push_back(beaten_by + 1);
  }
  std::sort(ranks.begin(), ranks.end());
  return ranks;
}

inline double oracle_query(MetricKind kind, std::size_t k, const std::vector<ScoredDoc>& docs,
                           const std::set<std::string>& relevant) {
  const auto ranks = relevant_ranks(docs, relevant);
  const double n_rel = static_cast<double>(relevant.size());
  switch (kind) {
    case MetricKind::mrr:
      for (std::size_t r : ranks) {
        if (r <= k) return 1.0 / static_cast<double>(r);
      }
      return 0.0;
    case MetricKind::precision: {
      std::size_t hits = 0;
      for (std::size_t r : ranks) hits += r <= k;
      return static_cast<double>(hits) / static_cast<double>(k);
    }
    case MetricKind::recall: {
      std::size_t hits = 0;
      for (std::size_t r : ranks) hits += r <= k;
      return static_cast<double>(hits) / n_rel;
    }
    case MetricKind::map: {
      double sum = 0.0;
      std::size_t seen = 0;
      for (std::size_t r : ranks) {
        if (r > k) break;
        ++seen;
        sum += static_cast<double>(seen) / static_cast<double>(r);
      }
      return sum / n_rel;
    }
    case MetricKind::ndcg: {
      double dcg = 0.0, idcg = 0.0;
      for (std::size_t r : ranks) {
        if (r <= k) dcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
      }
      for (std::size_t r = 1; r <= std::min<std::size_t>(relevant.size(), k); ++r) {
        idcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
      }
      return dcg / idcg;
    }
  }
  return 0.0;
}

inline OracleResult oracle_metric(MetricKind kind, std::size_t k, const RunList& run,
                                  const QrelSet& qrels) {
  OracleResult out;
  double sum = 0.0;
  for (const auto& [qid, rel] : qrels) {
    if (rel.empty()) continue;
    const auto it = run.find(qid);
    const double v = it == run.end() ? 0.0 : oracle_query(kind, k, it->second, rel);
    out.per_query[qid] = v;
    sum += v;
  }
  if (!out.per_query.empty()) out.mean = sum / static_cast<double>(out.per_query.size());
  return out;
}

struct MetricInstance {
  RunList run;
  QrelSet qrels;
};

/// <= 10 queries over <= 20 docs; coarse scores so ties are common; some
/// queries have no relevant docs and some are missing from the run.
inline MetricInstance random_metric_instance(Rng& rng) {
  MetricInstance inst;
  const std::size_t nq = 1 + rng.below(10);
  const std::size_t nd = 1 + rng.below(20);
  for (std::size_t q = 0; q < nq; ++q) {
    const std::string qid = "q" + std::to_string(q);
    auto& rel = inst.qrels[qid];
    for (std::size_t d = 0; d < nd; ++d) {
      if (rng.uniform01() < 0.25) rel.insert("d" + std::to_string(d));
    }
    if (rng.uniform01() < 0.1) continue;  // absent from the run
    std::vector<ScoredDoc> docs;
    for (std::size_t d = 0; d < nd; ++d) {
      if (rng.uniform01() < 0.8) {
        docs.push_back({"d" + std::to_string(d), static_cast<double>(rng.below(5)) * 0.5});
      }
    }
    std::sort(docs.begin(), docs.end(), ranks_before);
    inst.run[qid] = docs;
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Labeling oracle: depth-first reachability that stops at top-level nodes.

inline void reach_tops(const std::string& node, const CategoryGraph& g,
                       std::set<std::string>& visited, std::set<std::string>& found) {
  if (!visited.insert(node).second) return;
  if (g.domain_index(node)) {
    found.insert(node);
    return;
  }
  for (const auto& p : g.parents(node)) reach_tops(p, g, visited, found);
}

/// Random graph on n nodes "c0".."c{n-1}" with a guaranteed cycle through
/// c0 and some self-loops; the first `tops` nodes of a shuffled order are top-level.
inline CategoryGraph random_cyclic_graph(std::size_t n, std::size_t tops, Rng& rng) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
  std::vector<std::string> order = names;
  shuffle(order, rng);
  order.resize(std::min(tops, n));
  CategoryGraph g(order);
  const std::size_t cycle = 2 + rng.below(std::max<std::size_t>(n - 1, 1));
  for (std::size_t i = 0; i < cycle; ++i) {
    g.add_edge(names[i % n], names[(i + 1) % cycle % n]);
  }
  const std::size_t edges = n + rng.below(2 * n + 1);
  for (std::size_t e = 0; e < edges; ++e) {
    g.add_edge(names[rng.below(n)], names[rng.below(n)]);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Files

inline fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("desireme-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace testsupport
