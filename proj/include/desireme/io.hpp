#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "desireme/binary_io.hpp"
#include "desireme/domain_labels.hpp"
#include "desireme/errors.hpp"
#include "desireme/labeler.hpp"
#include "desireme/retrieval.hpp"

namespace desireme::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Text helpers

inline std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

inline std::ifstream open_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

inline std::ofstream create(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  return out;
}

[[noreturn]] inline void parse_error(const fs::path& path, std::size_t line, const std::string& msg) {
  throw InputError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

/// Calls fn(line_number, line) for every line, CR stripped.
template <class F>
void for_each_line(const fs::path& path, F&& fn) {
  auto in = open_text(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    fn(n, std::string(strip_cr(line)));
  }
}

inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Embeddings: "DEMB" | u32 version | u32 dim | u64 count | f32[count * dim],
// little-endian, row-major. Ids live in a sidecar text file, one per line.

inline constexpr std::string_view kEmbeddingMagic = "DEMB";
inline constexpr std::uint32_t kEmbeddingVersion = 1;

inline fs::path ids_path_for(const fs::path& embeddings) {
  return fs::path(embeddings.string() + ".ids");
}

inline void write_embedding_payload(std::ostream& out, const Matrix<float>& matrix) {
  using namespace binary;
  write_magic(out, kEmbeddingMagic);
  write_le<std::uint32_t>(out, kEmbeddingVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.cols()));
  write_le<std::uint64_t>(out, matrix.rows());
  for (float v : matrix.span()) write_f32(out, v);
}

inline Matrix<float> read_embedding_payload(std::istream& in) {
  using namespace binary;
  expect_magic(in, kEmbeddingMagic, "embedding file");
  const auto version = read_le<std::uint32_t>(in, "embedding version");
  if (version != kEmbeddingVersion) {
    throw InputError("embedding file: unsupported format version " + std::to_string(version));
  }
  const auto dim = read_le<std::uint32_t>(in, "embedding dim");
  const auto count = read_le<std::uint64_t>(in, "embedding count");
  require(dim >= 1, "embedding file: dim must be positive");
  Matrix<float> m(count, dim);
  for (float& v : m.span()) v = read_f32(in, "embedding payload");
  expect_eof(in, "embedding file");
  return m;
}

inline void write_embeddings(const fs::path& path, const EmbeddingTable& table,
                             const fs::path& ids_path = {}) {
  {
    auto out = create(path, true);
    write_embedding_payload(out, table.matrix());
    if (!out) throw InputError("failed writing " + path.string());
  }
  auto ids = create(ids_path.empty() ? ids_path_for(path) : ids_path);
  for (const auto& id : table.ids()) ids << id << '\n';
}

inline EmbeddingTable read_embeddings(const fs::path& path, const fs::path& ids_path = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  Matrix<float> m;
  try {
    m = read_embedding_payload(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  const fs::path idp = ids_path.empty() ? ids_path_for(path) : ids_path;
  std::vector<std::string> ids;
  for_each_line(idp, [&](std::size_t n, const std::string& line) {
    if (line.empty()) parse_error(idp, n, "empty id");
    ids.push_back(line);
  });
  if (ids.size() != m.rows()) {
    throw InputError(idp.string() + ": " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(m.rows()) + " embeddings in " + path.string());
  }
  return EmbeddingTable(std::move(ids), std::move(m));
}

// ---------------------------------------------------------------------------
// TREC qrels: "query_id 0 doc_id rel". rel > 0 is relevant; other rows still
// register the query.

inline QrelSet read_qrels(const fs::path& path) {
  QrelSet qrels;
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    const auto tok = split_whitespace(line);
    if (tok.empty()) return;
    if (tok.size() != 4) parse_error(path, n, "expected \"query_id 0 doc_id rel\"");
    long rel = 0;
    try {
      rel = std::stol(tok[3]);
    } catch (const std::exception&) {
      parse_error(path, n, "relevance \"" + tok[3] + "\" is not an integer");
    }
    auto& docs = qrels[tok[0]];
    if (rel > 0) docs.insert(tok[2]);
  });
  return qrels;
}

inline void write_qrels(const fs::path& path, const QrelSet& qrels) {
  auto out = create(path);
  for (const auto& [qid, docs] : qrels) {
    for (const auto& doc : docs) out << qid << " 0 " << doc << " 1\n";
  }
}

// ---------------------------------------------------------------------------
// TREC runs: "query_id Q0 doc_id rank score tag". Scores are printed with 17
// significant digits so a run reads back bit-identically.

inline void write_run(std::ostream& out, const RunList& run, const std::string& tag) {
  for (const auto& [qid, docs] : run) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      out << qid << " Q0 " << docs[i].doc_id << ' ' << (i + 1) << ' '
          << format_double(docs[i].score) << ' ' << tag << '\n';
    }
  }
}

inline void write_run(const fs::path& path, const RunList& run, const std::string& tag) {
  auto out = create(path);
  write_run(out, run, tag);
}

/// Reads a run and restores canonical order (score desc, doc id asc).
inline RunList read_run(const fs::path& path) {
  RunList run;
  std::map<std::string, std::set<std::string>> seen;
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    const auto tok = split_whitespace(line);
    if (tok.empty()) return;
    if (tok.size() != 6) parse_error(path, n, "expected \"query_id Q0 doc_id rank score tag\"");
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(tok[4], &used);
      if (used != tok[4].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      parse_error(path, n, "score \"" + tok[4] + "\" is not a number");
    }
    if (!seen[tok[0]].insert(tok[2]).second) {
      parse_error(path, n, "document " + tok[2] + " listed twice for query " + tok[0]);
    }
    run[tok[0]].push_back(ScoredDoc{tok[2], score});
  });
  canonicalize(run);
  return run;
}

// ---------------------------------------------------------------------------
// Labeling inputs

/// One category name per line; order defines domain indices. Lines starting
/// with '#' are comments.
inline std::vector<std::string> read_top_categories(const fs::path& path) {
  std::vector<std::string> out;
  for_each_line(path, [&](std::size_t, const std::string& line) {
    if (!line.empty() && line.front() != '#') out.push_back(line);
  });
  if (out.empty()) throw InputError(path.string() + ": no top-level categories");
  return out;
}

/// "child<TAB>parent" edges.
inline CategoryGraph read_category_graph(const fs::path& path,
                                         std::vector<std::string> top_categories) {
  CategoryGraph graph(std::move(top_categories));
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    if (line.empty()) return;
    const auto f = split(line, '\t');
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      parse_error(path, n, "expected \"child<TAB>parent\"");
    }
    graph.add_edge(f[0], f[1]);
  });
  return graph;
}

/// "doc_id<TAB>cat1|cat2|..." (an empty category list is allowed).
inline DocCategoryMap read_doc_categories(const fs::path& path) {
  DocCategoryMap out;
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    if (line.empty()) return;
    const auto f = split(line, '\t');
    if (f.size() != 2 || f[0].empty()) parse_error(path, n, "expected \"doc_id<TAB>cat1|cat2|...\"");
    std::vector<std::string> cats;
    if (!f[1].empty()) {
      for (auto& c : split(f[1], '|')) {
        if (!c.empty()) cats.push_back(std::move(c));
      }
    }
    if (!out.emplace(f[0], std::move(cats)).second) {
      parse_error(path, n, "duplicate document id " + f[0]);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Label files: "query_id<TAB>bitstring" lines followed by a "#" stats footer.

inline std::string coverage_summary(const LabelCoverage& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "labeled=%.1f%% avg_labels=%.2f", 100.0 * c.labeled_fraction,
                c.avg_labels);
  return buf;
}

inline void write_label_file(std::ostream& out, const LabelFile& labels) {
  for (const auto& [qid, bits] : labels.entries) out << qid << '\t' << bits.to_bitstring() << '\n';
  out << "# " << coverage_summary(labels.coverage) << " queries=" << labels.coverage.queries
      << " labeled_queries=" << labels.coverage.labeled_queries << '\n';
}

inline std::map<std::string, DomainLabelVector> read_label_file(const fs::path& path) {
  std::map<std::string, DomainLabelVector> out;
  std::size_t width = 0;
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    if (line.empty() || line.front() == '#') return;
    const auto f = split(line, '\t');
    if (f.size() != 2) parse_error(path, n, "expected \"query_id<TAB>bitstring\"");
    DomainLabelVector bits;
    try {
      bits = DomainLabelVector::from_bitstring(f[1]);
    } catch (const InputError& e) {
      parse_error(path, n, e.what());
    }
    if (width == 0) width = bits.size();
    if (bits.size() != width || width == 0) parse_error(path, n, "inconsistent label width");
    if (!out.emplace(f[0], std::move(bits)).second) parse_error(path, n, "duplicate query " + f[0]);
  });
  return out;
}

}  // namespace desireme::io
