#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstring>

#include "support.hpp"

using namespace desireme;
using testsupport::fresh_dir;
using testsupport::slurp;
using testsupport::write_text;
namespace fs = std::filesystem;

namespace {

const fs::path kData = DESIREME_DATA_DIR;

struct Result {
  int status = -1;
  std::string out;
  std::string err;
};

// Runs the command-line tool; stdout and stderr are captured through files.
Result cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + DESIREME_CLI + "\" " + args + " >\"" + out.string() +
                          "\" 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  Result r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Small benchmark on disk shared by several tests.
fs::path synth_dir(const std::string& name, const std::string& extra = "") {
  const auto dir = fresh_dir(name);
  const auto r = cli("synth --output " + q(dir / "bench") +
                         " --domains 3 --docs-per-domain 20 --queries-per-domain 10 --dim 8 " +
                         extra,
                     dir);
  EXPECT_EQ(r.status, 0) << r.err;
  return dir;
}

std::string train_args(const fs::path& dir) {
  const auto b = dir / "bench";
  return "train --queries " + q(b / "train_queries.demb") + " --docs " + q(b / "docs.demb") +
         " --qrels " + q(b / "train.qrels") + " --labels " + q(b / "train.labels") +
         " --checkpoint " + q(dir / "ckpt.bin") + " --log " + q(dir / "log.tsv");
}

}  // namespace

TEST(Cli, LabelToyFixture) {
  const auto dir = fresh_dir("cli-label");
  const auto toy = kData / "toy";
  const auto r = cli("label --graph " + q(toy / "category_graph.tsv") + " --top-categories " +
                         q(toy / "top_categories.txt") + " --doc-categories " +
                         q(toy / "doc_categories.tsv") + " --qrels " + q(toy / "qrels.txt") +
                         " --output " + q(dir / "labels.tsv"),
                     dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "labeled=100.0% avg_labels=2.00\n");
  const auto labels = io::read_label_file(dir / "labels.tsv");
  EXPECT_EQ(labels.at("q-festival").to_bitstring(), "0111100");
  EXPECT_EQ(labels.at("q-law").to_bitstring(), "1000000");
}

TEST(Cli, LabelEmptyQrelsFails) {
  const auto dir = fresh_dir("cli-label-empty");
  const auto toy = kData / "toy";
  write_text(dir / "empty.qrels", "");
  const auto r = cli("label --graph " + q(toy / "category_graph.tsv") + " --top-categories " +
                         q(toy / "top_categories.txt") + " --doc-categories " +
                         q(toy / "doc_categories.tsv") + " --qrels " + q(dir / "empty.qrels") +
                         " --output " + q(dir / "labels.tsv"),
                     dir);
  EXPECT_NE(r.status, 0);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, MissingInputIsReported) {
  const auto dir = fresh_dir("cli-missing");
  const auto r = cli("evaluate --run " + q(dir / "nope.run") + " --qrels " + q(dir / "nope.qrels"),
                     dir);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("nope"), std::string::npos);
  EXPECT_EQ(cli("frobnicate", dir).status, 1);
  EXPECT_EQ(cli("--help", dir).status, 0);
}

TEST(Cli, ZeroEpochCheckpointIsTheIdentity) {
  const auto dir = synth_dir("cli-identity");
  auto r = cli(train_args(dir) + " --epochs 0", dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto queries = dir / "bench" / "test_queries.demb";
  r = cli("transform --checkpoint " + q(dir / "ckpt.bin") + " --queries " + q(queries) +
              " --output " + q(dir / "t.demb"),
          dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(dir / "t.demb"), slurp(queries));
  EXPECT_EQ(slurp(dir / "t.demb.ids"), slurp(fs::path(queries.string() + ".ids")));
}

TEST(Cli, TrainWritesOneLogLinePerEpochAndIsDeterministic) {
  const auto dir = synth_dir("cli-train");
  auto r = cli(train_args(dir), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir / "log.tsv")), 60u);
  const auto first = slurp(dir / "ckpt.bin");
  r = cli(train_args(dir) + " --threads 3", dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(dir / "ckpt.bin"), first);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  const auto dir = synth_dir("cli-config");
  write_text(dir / "train.conf", "# comment\nepochs = 3\nlearning-rate=\"0.001\"\n");
  auto r = cli(train_args(dir) + " --config " + q(dir / "train.conf"), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir / "log.tsv")), 3u);
  EXPECT_NE(r.err.find("epochs=3"), std::string::npos) << r.err;
  r = cli(train_args(dir) + " --config " + q(dir / "train.conf") + " --epochs 2", dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir / "log.tsv")), 2u);
}

TEST(Cli, RandomGateTransformReproducible) {
  const auto dir = synth_dir("cli-rndg");
  ASSERT_EQ(cli(train_args(dir) + " --epochs 2", dir).status, 0);
  const auto base = "transform --checkpoint " + q(dir / "ckpt.bin") + " --queries " +
                    q(dir / "bench" / "test_queries.demb") + " --mode rnd-g";
  ASSERT_EQ(cli(base + " --seed 5 --output " + q(dir / "a.demb"), dir).status, 0);
  ASSERT_EQ(cli(base + " --seed 5 --threads 4 --output " + q(dir / "b.demb"), dir).status, 0);
  ASSERT_EQ(cli(base + " --seed 6 --output " + q(dir / "c.demb"), dir).status, 0);
  EXPECT_EQ(slurp(dir / "a.demb"), slurp(dir / "b.demb"));
  EXPECT_NE(slurp(dir / "a.demb"), slurp(dir / "c.demb"));
}

TEST(Cli, TopOneSelectsTheSaturatedSpecializer) {
  const auto dir = fresh_dir("cli-top1");
  Rng rng(71);
  auto p = testsupport::random_params<float>(4, 2, rng);
  for (float& w : p.gating.w_out.span()) w = 0.0f;
  p.gating.b_out = Vector<float>{-200.0f, 200.0f};
  save_checkpoint(dir / "ckpt.bin", p);
  Matrix<float> m(3, 4);
  for (float& x : m.span()) x = static_cast<float>(rng.normal());
  const EmbeddingTable queries({"a", "b", "c"}, m);
  io::write_embeddings(dir / "q.demb", queries);
  const auto base = "transform --checkpoint " + q(dir / "ckpt.bin") + " --queries " +
                    q(dir / "q.demb");
  ASSERT_EQ(cli(base + " --mode top1 --output " + q(dir / "top1.demb"), dir).status, 0);
  ASSERT_EQ(cli(base + " --mode weighted --output " + q(dir / "w.demb"), dir).status, 0);
  const auto top1 = io::read_embeddings(dir / "top1.demb");
  const auto weighted = io::read_embeddings(dir / "w.demb");
  for (std::size_t i = 0; i < 3; ++i) {
    const auto x = queries.row(i);
    Vector<float> want = x;
    want += specializer_forward(x, p.specializers[1]);
    EXPECT_EQ(top1.row(i), want);
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_NEAR(weighted.row(i)[c], want[c], 1e-5f * std::max(1.0f, std::abs(want[c])));
    }
  }
}

TEST(Cli, EvaluateAndComparePerfectRun) {
  const auto dir = fresh_dir("cli-eval");
  write_text(dir / "qrels", "q1 0 a 1\nq2 0 b 1\nq2 0 c 1\n");
  write_text(dir / "run", "q1 Q0 a 1 3 t\nq1 Q0 b 2 2 t\nq2 Q0 c 1 5 t\nq2 Q0 b 2 4 t\n");
  auto r = cli("evaluate --run " + q(dir / "run") + " --qrels " + q(dir / "qrels") +
                   " --records " + q(dir / "records.tsv") + " --per-query-dir " + q(dir),
               dir);
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* m : {"MAP@100", "MRR@100", "R@100", "NDCG@10", "NDCG@3", "P@1"}) {
    EXPECT_NE(r.out.find(std::string(m)), std::string::npos);
  }
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 7);
  EXPECT_NE(r.out.find("1.0000"), std::string::npos);
  EXPECT_EQ(r.out.find("0.0"), std::string::npos);
  EXPECT_EQ(slurp(dir / "NDCG_10.tsv"), "q1\t1\nq2\t1\n");
  EXPECT_EQ(count_lines(slurp(dir / "records.tsv")), 6u);
  EXPECT_EQ(slurp(dir / "records.tsv").substr(0, 10), "MAP\t100\t1\t");

  r = cli("compare --run-a " + q(dir / "run") + " --run-b " + q(dir / "run") + " --qrels " +
              q(dir / "qrels") + " --comparisons 3",
          dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.find('*'), std::string::npos);

  write_text(dir / "run2", "q1 Q0 a 1 3 t\n");
  r = cli("compare --run-a " + q(dir / "run") + " --run-b " + q(dir / "run2") + " --qrels " +
              q(dir / "qrels"),
          dir);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("q2"), std::string::npos);
}

TEST(Cli, RetrieveWritesTrecRun) {
  const auto dir = synth_dir("cli-retrieve");
  const auto b = dir / "bench";
  auto r = cli("retrieve --queries " + q(b / "test_queries_oracle.demb") + " --docs " +
                   q(b / "docs.demb") + " --k 5 --output " + q(dir / "run"),
               dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto run = io::read_run(dir / "run");
  EXPECT_EQ(run.size(), 30u);
  for (const auto& [qid, docs] : run) EXPECT_EQ(docs.size(), 5u);
  r = cli("evaluate --run " + q(dir / "run") + " --qrels " + q(b / "test.qrels"), dir);
  ASSERT_EQ(r.status, 0) << r.err;
}

TEST(Cli, GradcheckExitCodes) {
  const auto dir = fresh_dir("cli-grad");
  auto r = cli("gradcheck", dir);
  EXPECT_EQ(r.status, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  r = cli("gradcheck --inject-fault", dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  r = cli("gradcheck --similarity cosine --pooling top1 --normalization sum-to-one", dir);
  EXPECT_EQ(r.status, 0) << r.out;
}

TEST(Cli, SynthIsDeterministic) {
  const auto a = synth_dir("cli-synth-a");
  const auto b = synth_dir("cli-synth-b");
  for (const char* f : {"docs.demb", "docs.demb.ids", "train_queries.demb", "test_queries.demb",
                        "train.qrels", "test.qrels", "train.labels", "test.labels",
                        "test_queries_oracle.demb"}) {
    ASSERT_TRUE(fs::exists(a / "bench" / f)) << f;
    EXPECT_EQ(slurp(a / "bench" / f), slurp(b / "bench" / f)) << f;
  }
}
