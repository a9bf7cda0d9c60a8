#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "desireme/errors.hpp"
#include "desireme/losses.hpp"
#include "desireme/parallel.hpp"
#include "desireme/vecmath.hpp"

namespace desireme {

/// Id-addressed float32 embeddings, one row per item. Used for both the
/// document store and query sets.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> ids, Matrix<float> matrix)
      : ids_(std::move(ids)), matrix_(std::move(matrix)) {
    require(ids_.size() == matrix_.rows(), "embedding table: " + std::to_string(ids_.size()) +
                                               " ids for " + std::to_string(matrix_.rows()) +
                                               " rows");
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
      require(seen.insert(id).second, "embedding table: duplicate id \"" + id + "\"");
    }
  }

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dim() const { return matrix_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Matrix<float>& matrix() const { return matrix_; }
  Vector<float> row(std::size_t i) const { return Vector<float>(matrix_.row(i)); }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::vector<std::string> ids_;
  Matrix<float> matrix_;
};

using EmbeddingStore = EmbeddingTable;

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

/// Canonical ranking order: descending score, ties by ascending doc id.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

/// query id -> ranked documents (canonical order).
using RunList = std::map<std::string, std::vector<ScoredDoc>>;

/// query id -> relevant document ids (binary relevance).
using QrelSet = std::map<std::string, std::set<std::string>>;

inline void canonicalize(RunList& run) {
  for (auto& [qid, docs] : run) std::sort(docs.begin(), docs.end(), ranks_before);
}

/// Exact top-k by similarity over the whole store. Scores are accumulated in
/// double precision.
inline std::vector<ScoredDoc> retrieve(const Vector<float>& query, const EmbeddingStore& store,
                                       std::size_t k, Similarity sim) {
  require(!store.empty(), "retrieve: empty document store");
  require(k >= 1, "retrieve: k must be at least 1");
  require(query.dim() == store.dim(), "retrieve: query dimension " + std::to_string(query.dim()) +
                                          " does not match store dimension " +
                                          std::to_string(store.dim()));
  const std::size_t n = store.size();
  const Vector<double> q = convert<double>(query);
  const double qn = norm(q);
  std::vector<ScoredDoc> scored(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = store.matrix().row(i);
    double ab = 0.0, bb = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      ab += q[j] * static_cast<double>(row[j]);
      bb += static_cast<double>(row[j]) * row[j];
    }
    double s = ab;
    if (sim == Similarity::cosine) {
      if (!(qn > 0.0) || !(bb > 0.0)) throw NumericalError("cosine similarity of a zero-norm vector");
      s = ab / (qn * std::sqrt(bb));
    }
    scored[i] = ScoredDoc{store.ids()[i], s};
  }
  const std::size_t top = std::min(k, n);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(top),
                    scored.end(), ranks_before);
  scored.resize(top);
  return scored;
}

/// Ranks every query in `queries`; queries are independent and run in parallel.
inline RunList retrieve_all(const EmbeddingTable& queries, const EmbeddingStore& store,
                            std::size_t k, Similarity sim, unsigned threads = 1) {
  std::vector<std::vector<ScoredDoc>> results(queries.size());
  parallel_for(queries.size(), threads,
               [&](std::size_t i) { results[i] = retrieve(queries.row(i), store, k, sim); });
  RunList run;
  for (std::size_t i = 0; i < queries.size(); ++i) run[queries.ids()[i]] = std::move(results[i]);
  return run;
}

}  // namespace desireme
