#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "desireme/domain_labels.hpp"
#include "desireme/errors.hpp"
#include "desireme/retrieval.hpp"

namespace desireme {

/// Child -> parent category edges plus the ordered list of top-level
/// categories whose positions define the domain indices.
class CategoryGraph {
 public:
  CategoryGraph() = default;
  explicit CategoryGraph(std::vector<std::string> top_categories)
      : top_(std::move(top_categories)) {
    for (std::size_t i = 0; i < top_.size(); ++i) {
      require(index_.emplace(top_[i], i).second,
              "duplicate top-level category \"" + top_[i] + "\"");
      nodes_.insert(top_[i]);
    }
  }

  void add_edge(const std::string& child, const std::string& parent) {
    parents_[child].push_back(parent);
    nodes_.insert(child);
    nodes_.insert(parent);
  }

  const std::vector<std::string>& top_categories() const { return top_; }
  std::size_t num_domains() const { return top_.size(); }

  std::optional<std::size_t> domain_index(const std::string& category) const {
    const auto it = index_.find(category);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& category) const { return nodes_.contains(category); }

  const std::vector<std::string>& parents(const std::string& category) const {
    static const std::vector<std::string> kNone;
    const auto it = parents_.find(category);
    return it == parents_.end() ? kNone : it->second;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& [child, ps] : parents_) n += ps.size();
    return n;
  }

 private:
  std::vector<std::string> top_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::vector<std::string>> parents_;
  std::unordered_set<std::string> nodes_;
};

/// doc id -> categories listed on the document (possibly sub-categories).
using DocCategoryMap = std::unordered_map<std::string, std::vector<std::string>>;

/// Non-fatal conditions met while labeling.
struct LabelWarnings {
  std::size_t unknown_categories = 0;  // category not present in the graph at all
  std::size_t unknown_docs = 0;        // relevant doc missing from the doc-category map
  std::size_t truncated_traversals = 0;  // BFS hit the depth cap with work left

  LabelWarnings& operator+=(const LabelWarnings& o) {
    unknown_categories += o.unknown_categories;
    unknown_docs += o.unknown_docs;
    truncated_traversals += o.truncated_traversals;
    return *this;
  }
};

inline constexpr std::size_t kDefaultMaxDepth = 50;

namespace detail {

// Breadth-first walk along parent edges. Top-level categories are collected
// and not expanded further; the visited set makes cycles harmless.
inline std::set<std::size_t> resolve_indices(const std::string& category,
                                             const CategoryGraph& graph, LabelWarnings& warnings,
                                             std::size_t max_depth) {
  std::set<std::size_t> found;
  if (!graph.contains(category)) {
    ++warnings.unknown_categories;
    return found;
  }
  std::unordered_set<std::string> visited{category};
  std::deque<std::pair<const std::string*, std::size_t>> frontier;
  frontier.emplace_back(&category, 0);
  bool truncated = false;
  while (!frontier.empty()) {
    const auto [node, depth] = frontier.front();
    frontier.pop_front();
    if (const auto idx = graph.domain_index(*node)) {
      found.insert(*idx);
      continue;
    }
    const auto& ps = graph.parents(*node);
    if (ps.empty()) continue;
    if (depth >= max_depth) {
      truncated = true;
      continue;
    }
    for (const auto& p : ps) {
      if (visited.insert(p).second) frontier.emplace_back(&p, depth + 1);
    }
  }
  if (truncated) ++warnings.truncated_traversals;
  return found;
}

}  // namespace detail

/// Every top-level category reachable from `category` (itself included).
inline std::set<std::string> resolve_top_categories(const std::string& category,
                                                    const CategoryGraph& graph,
                                                    LabelWarnings& warnings,
                                                    std::size_t max_depth = kDefaultMaxDepth) {
  std::set<std::string> names;
  for (std::size_t i : detail::resolve_indices(category, graph, warnings, max_depth)) {
    names.insert(graph.top_categories()[i]);
  }
  return names;
}

/// Union, over all relevant documents and all their categories, of the
/// resolved top-level categories, multi-hot in top-category order.
inline DomainLabelVector label_query(const std::string& query_id,
                                     const std::vector<std::string>& relevant_doc_ids,
                                     const DocCategoryMap& doc_cats, const CategoryGraph& graph,
                                     LabelWarnings& warnings,
                                     std::size_t max_depth = kDefaultMaxDepth) {
  require(!relevant_doc_ids.empty(), "label_query: query " + query_id + " has no relevant docs");
  DomainLabelVector labels(graph.num_domains());
  for (const auto& doc : relevant_doc_ids) {
    const auto it = doc_cats.find(doc);
    if (it == doc_cats.end()) {
      ++warnings.unknown_docs;
      continue;
    }
    for (const auto& category : it->second) {
      for (std::size_t i : detail::resolve_indices(category, graph, warnings, max_depth)) {
        labels.set(i);
      }
    }
  }
  return labels;
}

struct LabelCoverage {
  std::size_t queries = 0;          // queries with >= 1 relevant doc
  std::size_t labeled_queries = 0;  // ... that received >= 1 label
  double labeled_fraction = 0.0;
  double avg_labels = 0.0;  // mean label count over labeled queries
};

struct LabelFile {
  std::vector<std::pair<std::string, DomainLabelVector>> entries;  // ordered by query id
  LabelCoverage coverage;
  LabelWarnings warnings;
};

inline LabelFile build_label_file(const QrelSet& qrels, const DocCategoryMap& doc_cats,
                                  const CategoryGraph& graph,
                                  std::size_t max_depth = kDefaultMaxDepth) {
  require(!qrels.empty(), "build_label_file: empty qrels");
  require(graph.num_domains() >= 1, "build_label_file: no top-level categories");
  LabelFile out;
  std::size_t label_total = 0;
  for (const auto& [qid, relevant] : qrels) {
    if (relevant.empty()) continue;
    const std::vector<std::string> docs(relevant.begin(), relevant.end());
    auto labels = label_query(qid, docs, doc_cats, graph, out.warnings, max_depth);
    ++out.coverage.queries;
    if (labels.any()) {
      ++out.coverage.labeled_queries;
      label_total += labels.count();
    }
    out.entries.emplace_back(qid, std::move(labels));
  }
  require(out.coverage.queries > 0, "build_label_file: no query has a relevant document");
  out.coverage.labeled_fraction =
      static_cast<double>(out.coverage.labeled_queries) / static_cast<double>(out.coverage.queries);
  if (out.coverage.labeled_queries > 0) {
    out.coverage.avg_labels =
        static_cast<double>(label_total) / static_cast<double>(out.coverage.labeled_queries);
  }
  return out;
}

}  // namespace desireme
