#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "desireme/domain_labels.hpp"
#include "desireme/errors.hpp"
#include "desireme/moe.hpp"
#include "desireme/parallel.hpp"
#include "desireme/retrieval.hpp"
#include "desireme/training.hpp"

namespace desireme {

/// One example per (query, relevant document) pair, in query-table order and
/// ascending doc id. Relevant documents missing from the store are skipped.
inline std::vector<TrainingExample<float>> make_training_examples(
    const EmbeddingTable& queries, const EmbeddingStore& store, const QrelSet& qrels,
    const std::map<std::string, DomainLabelVector>& labels) {
  require(queries.dim() == store.dim(), "query and document embeddings differ in dimension");
  std::unordered_map<std::string, std::size_t> doc_row;
  for (std::size_t i = 0; i < store.size(); ++i) doc_row.emplace(store.ids()[i], i);

  std::vector<TrainingExample<float>> out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const std::string& qid = queries.ids()[i];
    const auto rel = qrels.find(qid);
    if (rel == qrels.end()) continue;
    const auto lab = labels.find(qid);
    require(lab != labels.end(), "no domain labels for training query " + qid);
    for (const auto& doc : rel->second) {
      const auto it = doc_row.find(doc);
      if (it == doc_row.end()) continue;
      out.push_back(TrainingExample<float>{qid, queries.row(i), store.row(it->second), lab->second});
    }
  }
  return out;
}

/// Applies the MoE module to every query. Documents are never transformed.
inline EmbeddingTable transform_queries(const EmbeddingTable& queries,
                                        const MoEParams<float>& params, Pooling pooling,
                                        unsigned threads = 1) {
  Matrix<float> out(queries.size(), queries.dim());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    const Vector<float> y = moe_transform(queries.row(i), params, pooling);
    require_finite(y.span(), "transformed query " + queries.ids()[i]);
    std::copy(y.begin(), y.end(), out.row(i).begin());
  });
  return EmbeddingTable(queries.ids(), std::move(out));
}

/// Random-gating baseline: learned specializers, uniform random gate weights.
/// Row i draws from Rng(seed).derive(i), so output is independent of threading.
inline EmbeddingTable transform_queries_random_gate(const EmbeddingTable& queries,
                                                    const MoEParams<float>& params,
                                                    Pooling pooling, std::uint64_t seed,
                                                    unsigned threads = 1) {
  const Rng root(seed);
  Matrix<float> out(queries.size(), queries.dim());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    Rng rng = root.derive(i);
    const Vector<float> gates = random_gate<float>(params.num_domains, rng);
    const Vector<float> y = moe_transform_with_gates(queries.row(i), params, gates, pooling);
    require_finite(y.span(), "transformed query " + queries.ids()[i]);
    std::copy(y.begin(), y.end(), out.row(i).begin());
  });
  return EmbeddingTable(queries.ids(), std::move(out));
}

}  // namespace desireme
