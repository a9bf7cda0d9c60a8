#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "desireme/desireme.hpp"

namespace fs = std::filesystem;
using namespace desireme;

namespace {

const std::map<std::string, Similarity> kSimilarity{{"dot", Similarity::dot},
                                                    {"cosine", Similarity::cosine}};
const std::map<std::string, Pooling> kPooling{{"weighted", Pooling::weighted},
                                              {"top1", Pooling::top1}};
const std::map<std::string, GateNormalization> kNormalization{
    {"none", GateNormalization::none}, {"sum-to-one", GateNormalization::sum_to_one}};
const std::map<std::string, InitScheme> kInit{{"adapter", InitScheme::adapter},
                                              {"glorot", InitScheme::glorot}};

enum class TransformMode { weighted, top1, random_gate };
const std::map<std::string, TransformMode> kTransformMode{{"weighted", TransformMode::weighted},
                                                          {"top1", TransformMode::top1},
                                                          {"rnd-g", TransformMode::random_gate}};

void require_input(const fs::path& p, const std::string& what) {
  if (p.empty()) throw InputError(what + ": no path given");
  if (!fs::is_regular_file(p)) throw InputError(what + ": no such file: " + p.string());
}

void require_output(const fs::path& p, const std::string& what) {
  if (p.empty()) throw InputError(what + ": no path given");
  const fs::path parent = p.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw InputError(what + ": directory does not exist: " + parent.string());
  }
}

void require_embeddings(const fs::path& p, const std::string& what) {
  require_input(p, what);
  require_input(io::ids_path_for(p), what + " ids");
}

void add_config(CLI::App* cmd) {
  // Expanded by expand_config() before parsing; registered here for --help.
  cmd->add_option("--config", "key=value configuration file (flags take precedence)");
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

// Rewrites "<sub> ... --config FILE ..." as "<sub> --key=value... ..." so the
// file's values come first and explicit flags, parsed later, win.
std::vector<std::string> expand_config(int argc, char** argv, const CLI::App& app) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::size_t sub = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (app.get_subcommand_no_throw(args[i]) != nullptr) {
      sub = i;
      break;
    }
  }
  std::vector<std::string> from_file, rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    if (sub == args.size()) throw InputError("--config must follow a subcommand");
    io::for_each_line(path, [&](std::size_t n, const std::string& line) {
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#' || line[first] == '[') return;
      const auto eq = line.find('=');
      if (eq == std::string::npos) io::parse_error(path, n, "expected key=value");
      auto trim = [](std::string v) {
        const auto b = v.find_first_not_of(" \t");
        const auto e = v.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
      };
      from_file.push_back("--" + trim(line.substr(0, eq)) + "=" +
                          unquote(trim(line.substr(eq + 1))));
    });
  }
  if (from_file.empty()) return args;
  // Everything before the subcommand is kept, so it still sits at index `sub`.
  rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(sub + 1), from_file.begin(),
              from_file.end());
  return rest;
}

void echo_config(const CLI::App* cmd) {
  std::cerr << "# " << cmd->get_name() << " effective configuration\n"
            << cmd->config_to_str(true, false);
}

RunList load_checked_run(const fs::path& p) {
  require_input(p, "run");
  return io::read_run(p);
}

// ---------------------------------------------------------------------------

struct LabelArgs {
  fs::path graph, top_categories, doc_categories, qrels, output;
  std::size_t max_depth = kDefaultMaxDepth;
};

void run_label(const LabelArgs& a) {
  require_input(a.graph, "category graph");
  require_input(a.top_categories, "top categories");
  require_input(a.doc_categories, "doc categories");
  require_input(a.qrels, "qrels");
  require_output(a.output, "label output");

  const auto graph = io::read_category_graph(a.graph, io::read_top_categories(a.top_categories));
  const auto docs = io::read_doc_categories(a.doc_categories);
  const auto qrels = io::read_qrels(a.qrels);
  if (qrels.empty()) throw InputError(a.qrels.string() + ": qrels file is empty");
  const LabelFile labels = build_label_file(qrels, docs, graph, a.max_depth);
  auto out = io::create(a.output);
  io::write_label_file(out, labels);
  std::cout << io::coverage_summary(labels.coverage) << '\n';
  const auto& w = labels.warnings;
  if (w.unknown_categories + w.unknown_docs + w.truncated_traversals > 0) {
    std::cerr << "warnings: unknown_categories=" << w.unknown_categories
              << " unknown_docs=" << w.unknown_docs
              << " truncated_traversals=" << w.truncated_traversals << '\n';
  }
}

struct TrainArgs {
  fs::path queries, docs, qrels, labels, checkpoint, log;
  TrainConfig config;
};

void run_train(const TrainArgs& a) {
  require_embeddings(a.queries, "query embeddings");
  require_embeddings(a.docs, "document embeddings");
  require_input(a.qrels, "qrels");
  require_input(a.labels, "labels");
  require_output(a.checkpoint, "checkpoint");
  if (!a.log.empty()) require_output(a.log, "training log");

  const auto queries = io::read_embeddings(a.queries);
  const auto docs = io::read_embeddings(a.docs);
  const auto qrels = io::read_qrels(a.qrels);
  const auto labels = io::read_label_file(a.labels);
  const auto examples = make_training_examples(queries, docs, qrels, labels);
  std::cerr << "examples: " << examples.size() << '\n';

  std::vector<EpochLog> log;
  const auto result = train(examples, a.config, [&](const EpochLog& row) {
    log.push_back(row);
    std::fprintf(stderr, "epoch %zu train %.6g val %.6g\n", row.epoch, row.train_total,
                 row.val_total);
  });
  save_checkpoint(a.checkpoint, result.params);
  if (!a.log.empty()) {
    auto out = io::create(a.log);
    write_training_log(out, log);
  }
  std::cerr << "best epoch: " << result.best_epoch << '\n';
}

struct TransformArgs {
  fs::path checkpoint, queries, output;
  TransformMode mode = TransformMode::weighted;
  std::uint64_t seed = 42;
  unsigned threads = default_threads();
};

void run_transform(const TransformArgs& a) {
  require_input(a.checkpoint, "checkpoint");
  require_embeddings(a.queries, "query embeddings");
  require_output(a.output, "output embeddings");
  const auto params = load_checkpoint(a.checkpoint);
  const auto queries = io::read_embeddings(a.queries);
  require(queries.dim() == params.dim, "query dimension " + std::to_string(queries.dim()) +
                                           " does not match checkpoint dimension " +
                                           std::to_string(params.dim));
  EmbeddingTable out;
  switch (a.mode) {
    case TransformMode::weighted:
      out = transform_queries(queries, params, Pooling::weighted, a.threads);
      break;
    case TransformMode::top1:
      out = transform_queries(queries, params, Pooling::top1, a.threads);
      break;
    case TransformMode::random_gate:
      out = transform_queries_random_gate(queries, params, Pooling::weighted, a.seed, a.threads);
      break;
  }
  io::write_embeddings(a.output, out);
}

struct RetrieveArgs {
  fs::path queries, docs, output;
  std::size_t k = 100;
  Similarity similarity = Similarity::dot;
  std::string tag = "desireme";
  unsigned threads = default_threads();
};

void run_retrieve(const RetrieveArgs& a) {
  require_embeddings(a.queries, "query embeddings");
  require_embeddings(a.docs, "document embeddings");
  require_output(a.output, "run");
  const auto queries = io::read_embeddings(a.queries);
  const auto docs = io::read_embeddings(a.docs);
  io::write_run(a.output, retrieve_all(queries, docs, a.k, a.similarity, a.threads), a.tag);
}

struct EvaluateArgs {
  fs::path run, qrels, records, per_query_dir;
};

std::string metric_file_name(const MetricSpec& m) {
  std::string name = m.name();
  for (char& c : name) {
    if (c == '@') c = '_';
  }
  return name + ".tsv";
}

void run_evaluate(const EvaluateArgs& a) {
  require_input(a.qrels, "qrels");
  if (!a.records.empty()) require_output(a.records, "metric records");
  if (!a.per_query_dir.empty() && !fs::is_directory(a.per_query_dir)) {
    throw InputError("per-query directory does not exist: " + a.per_query_dir.string());
  }
  const auto run = load_checked_run(a.run);
  const auto qrels = io::read_qrels(a.qrels);

  std::optional<std::ofstream> records;
  if (!a.records.empty()) records = io::create(a.records);
  std::printf("%-10s %10s\n", "metric", "mean");
  for (const auto& metric : standard_metrics()) {
    const MetricResult r = evaluate_metric(run, qrels, metric);
    std::printf("%-10s %10.4f\n", metric.name().c_str(), r.mean);
    std::string per_query_path;
    if (!a.per_query_dir.empty()) {
      const fs::path p = a.per_query_dir / metric_file_name(metric);
      auto out = io::create(p);
      for (const auto& [qid, v] : r.per_query) out << qid << '\t' << io::format_double(v) << '\n';
      per_query_path = p.string();
    }
    if (records) {
      const std::string name = metric.name();
      *records << name.substr(0, name.find('@')) << '\t' << metric.cutoff << '\t'
               << io::format_double(r.mean) << '\t' << per_query_path << '\n';
    }
  }
}

struct CompareArgs {
  fs::path run_a, run_b, qrels;
  std::size_t comparisons = 1;
  double alpha = 0.001;
};

void run_compare(const CompareArgs& a) {
  require_input(a.qrels, "qrels");
  const auto run_a = load_checked_run(a.run_a);
  const auto run_b = load_checked_run(a.run_b);
  const auto qrels = io::read_qrels(a.qrels);

  std::vector<std::string> only_a, only_b;
  for (const auto& [qid, docs] : run_a) {
    if (!run_b.contains(qid)) only_a.push_back(qid);
  }
  for (const auto& [qid, docs] : run_b) {
    if (!run_a.contains(qid)) only_b.push_back(qid);
  }
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "runs cover different queries;";
    for (const auto& q : only_a) msg += " " + q + " (only in " + a.run_a.string() + ")";
    for (const auto& q : only_b) msg += " " + q + " (only in " + a.run_b.string() + ")";
    throw InputError(msg);
  }

  std::printf("%-10s %10s %10s %10s %10s %12s %12s\n", "metric", "run_a", "run_b", "diff", "t",
              "p", "p_corrected");
  for (const auto& metric : standard_metrics()) {
    const auto ra = evaluate_metric(run_a, qrels, metric);
    const auto rb = evaluate_metric(run_b, qrels, metric);
    std::vector<double> va, vb;
    for (const auto& [qid, v] : ra.per_query) {
      va.push_back(v);
      vb.push_back(rb.per_query.at(qid));
    }
    const auto t = paired_ttest_bonferroni(vb, va, a.comparisons, a.alpha);
    std::printf("%-10s %10.4f %10.4f %+10.4f %10.3f %12.3g %12.3g%s\n", metric.name().c_str(),
                ra.mean, rb.mean, rb.mean - ra.mean, t.t, t.raw_p, t.corrected_p,
                t.significant ? " *" : "");
  }
}

struct GradcheckArgs {
  std::size_t dim = 8, domains = 3, batch = 4;
  double h = 1e-4, tol = 1e-4, floor = 1e-6;
  std::uint64_t seed = 42;
  TrainConfig config;
  bool inject_fault = false;
};

// Returns false when some gradient entry fails.
bool run_gradcheck(const GradcheckArgs& a) {
  Rng rng(a.seed);
  auto params = MoEParams<double>::initialized(a.dim, a.domains, rng, InitScheme::glorot,
                                               a.config.model);
  // Non-zero biases so every parameter is exercised.
  params.for_each_tensor([&](const std::string& name, std::span<double> t) {
    if (name.find(".b") != std::string::npos) {
      for (double& v : t) v = rng.uniform(-0.1, 0.1);
    }
  });
  std::vector<TrainingExample<double>> batch;
  for (std::size_t i = 0; i < a.batch; ++i) {
    Vector<double> q(a.dim), d(a.dim);
    for (double& v : q) v = rng.normal();
    for (double& v : d) v = rng.normal();
    DomainLabelVector labels(a.domains);
    for (std::size_t k = 0; k < a.domains; ++k) {
      if (rng.uniform01() < 0.5) labels.set(k);
    }
    batch.push_back({"q" + std::to_string(i), q, d, labels});
  }
  std::optional<FaultInjection> fault;
  if (a.inject_fault) {
    fault = largest_gradient_entry(total_loss<double>(batch, params, a.config).grads);
  }
  const auto report = grad_check(params, batch, a.config, a.h, a.tol, a.floor, fault);
  std::printf("checked=%zu max_rel_error=%.3g max_abs_error=%.3g worst=%s[%zu]\n", report.checked,
              report.max_rel_error, report.max_abs_error, report.worst.tensor.c_str(),
              report.worst.index);
  for (const auto& f : report.failures) {
    std::printf("FAIL %s[%zu] analytic=%.10g numeric=%.10g rel_error=%.3g\n", f.tensor.c_str(),
                f.index, f.analytic, f.numeric, f.rel_error);
  }
  std::printf("%s\n", report.passed ? "PASS" : "FAIL");
  return report.passed;
}

struct SynthArgs {
  fs::path output;
  SynthConfig config;
};

LabelFile synth_label_file(const SynthSplit& split) {
  LabelFile f;
  for (const auto& [qid, bits] : split.labels) f.entries.emplace_back(qid, bits);
  f.coverage.queries = f.entries.size();
  f.coverage.labeled_queries = f.entries.size();
  f.coverage.labeled_fraction = 1.0;
  f.coverage.avg_labels = 1.0;
  return f;
}

void run_synth(const SynthArgs& a) {
  if (a.output.empty()) throw InputError("synth: no output directory given");
  require_output(a.output, "synth output");
  fs::create_directories(a.output);
  const auto b = synth_benchmark(a.config);
  io::write_embeddings(a.output / "docs.demb", b.store);
  io::write_embeddings(a.output / "train_queries.demb", b.train.queries);
  io::write_embeddings(a.output / "test_queries.demb", b.test.queries);
  io::write_qrels(a.output / "train.qrels", b.train.qrels);
  io::write_qrels(a.output / "test.qrels", b.test.qrels);
  for (const auto& [name, split] : {std::pair{"train.labels", &b.train}, {"test.labels", &b.test}}) {
    auto out = io::create(a.output / name);
    io::write_label_file(out, synth_label_file(*split));
  }
  io::write_embeddings(a.output / "test_queries_oracle.demb", oracle_transform(b, b.test));
}

void add_train_options(CLI::App* cmd, TrainConfig& c) {
  cmd->add_option("--batch-size", c.batch_size, "examples per batch")->capture_default_str();
  cmd->add_option("--learning-rate", c.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--epochs", c.epochs, "training epochs")->capture_default_str();
  cmd->add_option("--validation-fraction", c.validation_fraction, "held-out fraction")
      ->capture_default_str();
  cmd->add_option("--temperature", c.temperature, "contrastive temperature")->capture_default_str();
  cmd->add_option("--loss-weight", c.loss_weight, "weight of the gating BCE term")
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--similarity", c.similarity, "dot | cosine")
      ->transform(CLI::CheckedTransformer(kSimilarity))
      ->default_str("dot");
  cmd->add_option("--pooling", c.model.pooling, "weighted | top1")
      ->transform(CLI::CheckedTransformer(kPooling))
      ->default_str("weighted");
  cmd->add_option("--normalization", c.model.normalization, "none | sum-to-one")
      ->transform(CLI::CheckedTransformer(kNormalization))
      ->default_str("none");
  cmd->add_option("--init", c.init, "adapter | glorot")
      ->transform(CLI::CheckedTransformer(kInit))
      ->default_str("adapter");
  c.threads = default_threads();
  cmd->add_option("--threads", c.threads, "worker threads (results do not depend on it)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-of-experts query specialization for dense retrieval", "desireme"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  LabelArgs label;
  auto* c_label = app.add_subcommand("label", "label queries with top-level domains");
  add_config(c_label);
  c_label->add_option("--graph", label.graph, "child<TAB>parent category edges")->required();
  c_label->add_option("--top-categories", label.top_categories, "one category per line")
      ->required();
  c_label->add_option("--doc-categories", label.doc_categories, "doc_id<TAB>cat1|cat2")
      ->required();
  c_label->add_option("--qrels", label.qrels, "TREC qrels")->required();
  c_label->add_option("--output", label.output, "label file")->required();
  c_label->add_option("--max-depth", label.max_depth, "BFS depth cap")->capture_default_str();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train the MoE module");
  add_config(c_train);
  c_train->add_option("--queries", tr.queries, "query embeddings (DEMB)")->required();
  c_train->add_option("--docs", tr.docs, "document embeddings (DEMB)")->required();
  c_train->add_option("--qrels", tr.qrels, "TREC qrels")->required();
  c_train->add_option("--labels", tr.labels, "label file")->required();
  c_train->add_option("--checkpoint", tr.checkpoint, "output checkpoint")->required();
  c_train->add_option("--log", tr.log, "per-epoch training log");
  add_train_options(c_train, tr.config);

  TransformArgs tf;
  auto* c_transform = app.add_subcommand("transform", "apply a checkpoint to query embeddings");
  add_config(c_transform);
  c_transform->add_option("--checkpoint", tf.checkpoint, "checkpoint")->required();
  c_transform->add_option("--queries", tf.queries, "query embeddings (DEMB)")->required();
  c_transform->add_option("--output", tf.output, "output embeddings (DEMB)")->required();
  c_transform->add_option("--mode", tf.mode, "weighted | top1 | rnd-g")
      ->transform(CLI::CheckedTransformer(kTransformMode))
      ->default_str("weighted");
  c_transform->add_option("--seed", tf.seed, "seed for rnd-g gates")->capture_default_str();
  c_transform->add_option("--threads", tf.threads, "worker threads")->capture_default_str();

  RetrieveArgs rt;
  auto* c_retrieve = app.add_subcommand("retrieve", "exact top-k retrieval to a TREC run");
  add_config(c_retrieve);
  c_retrieve->add_option("--queries", rt.queries, "query embeddings (DEMB)")->required();
  c_retrieve->add_option("--docs", rt.docs, "document embeddings (DEMB)")->required();
  c_retrieve->add_option("--output", rt.output, "TREC run")->required();
  c_retrieve->add_option("--k", rt.k, "documents per query")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_retrieve->add_option("--similarity", rt.similarity, "dot | cosine")
      ->transform(CLI::CheckedTransformer(kSimilarity))
      ->default_str("dot");
  c_retrieve->add_option("--tag", rt.tag, "run tag")->capture_default_str();
  c_retrieve->add_option("--threads", rt.threads, "worker threads")->capture_default_str();

  EvaluateArgs ev;
  auto* c_evaluate = app.add_subcommand("evaluate", "the six ranking metrics of a run");
  add_config(c_evaluate);
  c_evaluate->add_option("--run", ev.run, "TREC run")->required();
  c_evaluate->add_option("--qrels", ev.qrels, "TREC qrels")->required();
  c_evaluate->add_option("--records", ev.records, "metric<TAB>cutoff<TAB>mean<TAB>per-query file");
  c_evaluate->add_option("--per-query-dir", ev.per_query_dir, "directory for per-query values");

  CompareArgs cm;
  auto* c_compare = app.add_subcommand("compare", "paired t-tests between two runs");
  add_config(c_compare);
  c_compare->add_option("--run-a", cm.run_a, "baseline run")->required();
  c_compare->add_option("--run-b", cm.run_b, "system run")->required();
  c_compare->add_option("--qrels", cm.qrels, "TREC qrels")->required();
  c_compare->add_option("--comparisons", cm.comparisons, "Bonferroni factor")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_compare->add_option("--alpha", cm.alpha, "significance level")->capture_default_str();

  GradcheckArgs gc;
  auto* c_grad = app.add_subcommand("gradcheck", "finite-difference gradient check (64-bit)");
  add_config(c_grad);
  c_grad->add_option("--dim", gc.dim, "embedding dimension (even)")->capture_default_str();
  c_grad->add_option("--domains", gc.domains, "number of domains")->capture_default_str();
  c_grad->add_option("--batch", gc.batch, "batch size")->capture_default_str();
  c_grad->add_option("--step", gc.h, "finite-difference step h")->capture_default_str();
  c_grad->add_option("--tol", gc.tol, "relative tolerance")->capture_default_str();
  c_grad->add_option("--floor", gc.floor, "absolute tolerance floor")->capture_default_str();
  c_grad->add_option("--seed", gc.seed, "random seed")->capture_default_str();
  c_grad->add_option("--temperature", gc.config.temperature, "contrastive temperature")
      ->capture_default_str();
  c_grad->add_option("--loss-weight", gc.config.loss_weight, "weight of the BCE term")
      ->capture_default_str();
  c_grad->add_option("--similarity", gc.config.similarity, "dot | cosine")
      ->transform(CLI::CheckedTransformer(kSimilarity))
      ->default_str("dot");
  c_grad->add_option("--pooling", gc.config.model.pooling, "weighted | top1")
      ->transform(CLI::CheckedTransformer(kPooling))
      ->default_str("weighted");
  c_grad->add_option("--normalization", gc.config.model.normalization, "none | sum-to-one")
      ->transform(CLI::CheckedTransformer(kNormalization))
      ->default_str("none");
  c_grad->add_flag("--inject-fault", gc.inject_fault,
                   "scale the largest analytic gradient entry by 1.01");

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "write the synthetic benchmark to a directory");
  add_config(c_synth);
  c_synth->add_option("--output", sy.output, "output directory")->required();
  c_synth->add_option("--domains", sy.config.num_domains)->capture_default_str();
  c_synth->add_option("--docs-per-domain", sy.config.docs_per_domain)->capture_default_str();
  c_synth->add_option("--queries-per-domain", sy.config.queries_per_domain)->capture_default_str();
  c_synth->add_option("--dim", sy.config.dim)->capture_default_str();
  c_synth->add_option("--noise", sy.config.noise)->capture_default_str();
  c_synth->add_option("--offset", sy.config.offset)->capture_default_str();
  c_synth->add_option("--spread", sy.config.spread)->capture_default_str();
  c_synth->add_option("--scale", sy.config.scale)->capture_default_str();
  c_synth->add_option("--seed", sy.config.seed)->capture_default_str();

  try {
    std::vector<std::string> args;
    try {
      args = expand_config(argc, argv, app);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const CLI::App* cmd : app.get_subcommands()) echo_config(cmd);
    if (*c_label) run_label(label);
    if (*c_train) run_train(tr);
    if (*c_transform) run_transform(tf);
    if (*c_retrieve) run_retrieve(rt);
    if (*c_evaluate) run_evaluate(ev);
    if (*c_compare) run_compare(cm);
    if (*c_grad && !run_gradcheck(gc)) return 2;
    if (*c_synth) run_synth(sy);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
