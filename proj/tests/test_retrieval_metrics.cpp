#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace desireme;

namespace {

EmbeddingStore store_of(std::vector<std::string> ids, std::vector<std::vector<float>> rows) {
  Matrix<float> m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return EmbeddingStore(std::move(ids), std::move(m));
}

RunList one_query(std::vector<std::string> ranked) {
  std::vector<ScoredDoc> docs;
  double s = static_cast<double>(ranked.size());
  for (auto& id : ranked) docs.push_back({std::move(id), s--});
  return {{"q", docs}};
}

const std::vector<MetricSpec> kAllKinds{{MetricKind::map, 100}, {MetricKind::mrr, 100},
                                        {MetricKind::recall, 100}, {MetricKind::ndcg, 10},
                                        {MetricKind::ndcg, 3}, {MetricKind::precision, 1},
                                        {MetricKind::map, 3}, {MetricKind::mrr, 2},
                                        {MetricKind::recall, 5}, {MetricKind::precision, 4}};

}  // namespace

TEST(Retrieve, SelfIsTopHit) {
  const auto store = store_of({"a", "b", "c"}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto r = retrieve(Vector<float>{0, 1, 0}, store, 1, Similarity::dot);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], (ScoredDoc{"b", 1.0}));
}

TEST(Retrieve, OrthogonalScoresZeroAndTiesByDocId) {
  const auto store = store_of({"z", "y", "x"}, {{0, 1}, {0, 2}, {0, -1}});
  const auto r = retrieve(Vector<float>{1, 0}, store, 3, Similarity::dot);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].doc_id, "x");
  EXPECT_EQ(r[2].doc_id, "z");
  for (const auto& d : r) EXPECT_EQ(d.score, 0.0);
}

TEST(Retrieve, KLargerThanStoreReturnsAll) {
  const auto store = store_of({"a", "b"}, {{1, 0}, {2, 0}});
  const auto r = retrieve(Vector<float>{1, 0}, store, 10, Similarity::dot);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].doc_id, "b");
}

TEST(Retrieve, CosineIgnoresDocumentNorm) {
  const auto store = store_of({"a", "b"}, {{10, 1}, {1, 0}});
  EXPECT_EQ(retrieve(Vector<float>{1, 0}, store, 1, Similarity::dot)[0].doc_id, "a");
  EXPECT_EQ(retrieve(Vector<float>{1, 0}, store, 1, Similarity::cosine)[0].doc_id, "b");
}

TEST(Retrieve, Errors) {
  EXPECT_THROW(retrieve(Vector<float>{1}, EmbeddingStore{}, 1, Similarity::dot), InputError);
  const auto store = store_of({"a"}, {{1, 0}});
  EXPECT_THROW(retrieve(Vector<float>{1, 0}, store, 0, Similarity::dot), InputError);
  EXPECT_THROW(retrieve(Vector<float>{1, 0, 0}, store, 1, Similarity::dot), InputError);
  EXPECT_THROW(retrieve(Vector<float>{0, 0}, store, 1, Similarity::cosine), NumericalError);
}

TEST(Retrieve, AgreesWithFullSortOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(200), d = 1 + rng.below(16), k = 1 + rng.below(50);
    Matrix<float> m(n, d);
    for (float& x : m.span()) x = static_cast<float>(rng.below(5)) - 2.0f;  // many ties
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("d" + std::to_string(i));
    const EmbeddingStore store(ids, m);
    const auto q = testsupport::random_vector<float>(d, rng);
    std::vector<ScoredDoc> all;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += static_cast<double>(q[j]) * m(i, j);
      all.push_back({ids[i], s});
    }
    std::stable_sort(all.begin(), all.end(), ranks_before);
    all.resize(std::min(n, k));
    EXPECT_EQ(retrieve(q, store, k, Similarity::dot), all);
  }
}

TEST(Retrieve, ParallelRunMatchesSerial) {
  Rng rng(32);
  Matrix<float> qm(20, 8), dm(100, 8);
  for (float& x : qm.span()) x = static_cast<float>(rng.normal());
  for (float& x : dm.span()) x = static_cast<float>(rng.normal());
  std::vector<std::string> qids, dids;
  for (int i = 0; i < 20; ++i) qids.push_back("q" + std::to_string(i));
  for (int i = 0; i < 100; ++i) dids.push_back("d" + std::to_string(i));
  const EmbeddingTable queries(qids, qm);
  const EmbeddingStore store(dids, dm);
  EXPECT_EQ(retrieve_all(queries, store, 10, Similarity::dot, 1),
            retrieve_all(queries, store, 10, Similarity::dot, 4));
}

TEST(Metrics, NdcgHandExample) {
  const QrelSet qrels{{"q", {"b"}}};
  // Single relevant document at rank 2: 1 / log2(3).
  EXPECT_NEAR(ndcg_at_k(one_query({"a", "b", "c"}), qrels, 10).mean, 0.6309, 5e-5);
  const QrelSet two{{"q", {"a", "c"}}};
  // (1 + 1/log2 4) / (1 + 1/log2 3) = 1.5 / 1.6309
  EXPECT_NEAR(ndcg_at_k(one_query({"a", "b", "c"}), two, 10).mean, 0.9197, 5e-5);
}

TEST(Metrics, RankFourExamples) {
  const QrelSet qrels{{"q", {"d", "x", "y", "z"}}};
  const auto run = one_query({"a", "b", "c", "d"});
  EXPECT_DOUBLE_EQ(mrr_at_k(run, qrels, 100).mean, 0.25);
  EXPECT_DOUBLE_EQ(recall_at_k(run, qrels, 100).mean, 0.25);
  EXPECT_DOUBLE_EQ(map_at_k(run, qrels, 100).mean, (1.0 / 4.0) / 4.0);
  EXPECT_DOUBLE_EQ(mrr_at_k(run, qrels, 3).mean, 0.0);
  EXPECT_DOUBLE_EQ(p_at_1(run, qrels).mean, 0.0);
  const QrelSet single{{"q", {"d"}}};
  EXPECT_DOUBLE_EQ(map_at_k(run, single, 100).mean, 0.25);
}

TEST(Metrics, IdealOrderScoresOne) {
  const QrelSet qrels{{"q", {"a", "b"}}};
  const auto run = one_query({"a", "b", "c", "d"});
  for (const auto& metric : {MetricSpec{MetricKind::ndcg, 10}, MetricSpec{MetricKind::map, 100},
                           MetricSpec{MetricKind::mrr, 100}, MetricSpec{MetricKind::recall, 100},
                           MetricSpec{MetricKind::precision, 1}}) {
    EXPECT_DOUBLE_EQ(evaluate_metric(run, qrels, metric).mean, 1.0) << metric.name();
  }
}

TEST(Metrics, IrrelevantDocumentBelowCutoffChangesNothing) {
  const QrelSet qrels{{"q", {"b", "e"}}};
  const auto base = one_query({"a", "b", "c"});
  auto extended = base;
  extended["q"].push_back({"zz", -100.0});
  for (const auto& metric : kAllKinds) {
    EXPECT_EQ(evaluate_metric(base, qrels, metric).mean, evaluate_metric(extended, qrels, metric).mean)
        << metric.name();
  }
}

TEST(Metrics, MissingQueryScoresZeroAndEmptyJudgmentsAreSkipped) {
  const QrelSet qrels{{"q", {"a"}}, {"r", {"a"}}, {"s", {}}};
  const auto r = ndcg_at_k(one_query({"a"}), qrels, 10);
  EXPECT_EQ(r.per_query.size(), 2u);
  EXPECT_EQ(r.per_query.at("r"), 0.0);
  EXPECT_DOUBLE_EQ(r.mean, 0.5);
}

TEST(Metrics, Errors) {
  const QrelSet qrels{{"other", {"a"}}};
  EXPECT_THROW(ndcg_at_k(one_query({"a"}), qrels, 10), InputError);
  EXPECT_THROW(ndcg_at_k({}, qrels, 0), InputError);
}

TEST(Metrics, StandardSetNames) {
  std::vector<std::string> names;
  for (const auto& m : standard_metrics()) names.push_back(m.name());
  EXPECT_EQ(names, (std::vector<std::string>{"MAP@100", "MRR@100", "R@100", "NDCG@10", "NDCG@3",
                                             "P@1"}));
}

TEST(Metrics, MatchBruteForceOracle) {
  Rng rng(33);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = testsupport::random_metric_instance(rng);
    for (const auto& metric : kAllKinds) {
      const auto got = evaluate_metric(inst.run, inst.qrels, metric);
      const auto want = testsupport::oracle_metric(metric.kind, metric.cutoff, inst.run, inst.qrels);
      EXPECT_EQ(got.per_query, want.per_query) << metric.name() << " trial " << trial;
      EXPECT_EQ(got.mean, want.mean) << metric.name() << " trial " << trial;
    }
  }
}
