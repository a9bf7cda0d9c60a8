#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "desireme/domain_labels.hpp"
#include "desireme/errors.hpp"
#include "desireme/retrieval.hpp"
#include "desireme/vecmath.hpp"

namespace desireme {

/// Synthetic retrieval benchmark with a known per-domain distortion.
///
/// Geometry (before multiplying everything by `scale`):
///   domain centre   c_k  ~ unit Gaussian direction
///   domain offset   o_k  = offset * (unit Gaussian direction)
///   document        u    = normalize(c_k + spread * g / sqrt(dim))
///   query           q    = u_src + o_k + noise * g / sqrt(dim)
/// Documents share one norm, so with the offset and noise removed every
/// query ranks its source document first. Subtracting o_k (the oracle
/// transform) is a fixed per-domain correction, i.e. exactly the kind of
/// mapping a specializer bias can represent.
struct SynthConfig {
  std::size_t num_domains = 4;
  std::size_t docs_per_domain = 200;
  std::size_t queries_per_domain = 50;
  std::size_t dim = 32;
  double noise = 3e-4;
  double offset = 3e-3;
  double spread = 1e-3;
  double scale = 4000.0;
  std::uint64_t seed = 7;

  void validate() const {
    require(num_domains >= 1 && docs_per_domain >= 1 && queries_per_domain >= 1,
            "synth: all counts must be at least 1");
    require(dim >= 2 && dim % 2 == 0, "synth: dim must be even and at least 2");
    require(noise >= 0.0 && offset >= 0.0 && spread >= 0.0, "synth: negative magnitude");
    require(scale > 0.0, "synth: scale must be positive");
  }
};

struct SynthSplit {
  EmbeddingTable queries;
  QrelSet qrels;  // each query -> its single source document
  std::map<std::string, DomainLabelVector> labels;
  std::vector<std::size_t> domains;  // per query row
};

struct SynthBenchmark {
  SynthConfig config;
  EmbeddingStore store;
  SynthSplit train;
  SynthSplit test;
  std::vector<Vector<double>> offsets;  // o_k * scale
};

namespace detail {

inline Vector<double> gaussian(std::size_t dim, Rng& rng) {
  Vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

inline Vector<double> unit(Vector<double> v) {
  const double n = norm(v);
  require(n > 0.0, "synth: degenerate direction");
  v *= 1.0 / n;
  return v;
}

inline std::string padded(const char* prefix, std::size_t a, std::size_t b) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%03zu-%05zu", prefix, a, b);
  return buf;
}

inline SynthSplit make_split(const SynthConfig& cfg, const std::vector<Vector<double>>& doc_dirs,
                             const std::vector<Vector<double>>& offsets, const char* prefix,
                             Rng rng) {
  SynthSplit split;
  const std::size_t d = cfg.dim;
  const std::size_t nq = cfg.num_domains * cfg.queries_per_domain;
  std::vector<std::string> ids;
  Matrix<float> m(nq, d);
  const double noise_sd = cfg.noise / std::sqrt(static_cast<double>(d));
  std::size_t row = 0;
  for (std::size_t k = 0; k < cfg.num_domains; ++k) {
    std::vector<std::size_t> order(cfg.docs_per_domain);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    for (std::size_t j = 0; j < cfg.queries_per_domain; ++j, ++row) {
      const std::size_t src = order[j % cfg.docs_per_domain];
      const std::size_t doc_row = k * cfg.docs_per_domain + src;
      const std::string qid = padded(prefix, k, j);
      for (std::size_t c = 0; c < d; ++c) {
        const double v = doc_dirs[doc_row][c] + offsets[k][c] + noise_sd * rng.normal();
        m(row, c) = static_cast<float>(cfg.scale * v);
      }
      ids.push_back(qid);
      split.qrels[qid].insert(padded("d", k, src));
      split.labels.emplace(qid, DomainLabelVector::one_hot(cfg.num_domains, k));
      split.domains.push_back(k);
    }
  }
  split.queries = EmbeddingTable(std::move(ids), std::move(m));
  return split;
}

}  // namespace detail

inline SynthBenchmark synth_benchmark(const SynthConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng center_rng = root.derive(1);
  Rng offset_rng = root.derive(2);
  Rng doc_rng = root.derive(3);
  const std::size_t d = cfg.dim;

  std::vector<Vector<double>> centers, offsets;
  for (std::size_t k = 0; k < cfg.num_domains; ++k) {
    centers.push_back(detail::unit(detail::gaussian(d, center_rng)));
    Vector<double> o = detail::unit(detail::gaussian(d, offset_rng));
    o *= cfg.offset;
    offsets.push_back(std::move(o));
  }

  const std::size_t nd = cfg.num_domains * cfg.docs_per_domain;
  std::vector<Vector<double>> doc_dirs;
  doc_dirs.reserve(nd);
  std::vector<std::string> doc_ids;
  Matrix<float> docs(nd, d);
  const double spread_sd = cfg.spread / std::sqrt(static_cast<double>(d));
  for (std::size_t k = 0; k < cfg.num_domains; ++k) {
    for (std::size_t j = 0; j < cfg.docs_per_domain; ++j) {
      Vector<double> u = centers[k];
      for (double& x : u) x += spread_sd * doc_rng.normal();
      u = detail::unit(std::move(u));
      const std::size_t row = doc_dirs.size();
      for (std::size_t c = 0; c < d; ++c) docs(row, c) = static_cast<float>(cfg.scale * u[c]);
      doc_dirs.push_back(std::move(u));
      doc_ids.push_back(detail::padded("d", k, j));
    }
  }

  SynthBenchmark b;
  b.config = cfg;
  b.store = EmbeddingStore(std::move(doc_ids), std::move(docs));
  b.train = detail::make_split(cfg, doc_dirs, offsets, "q-train-", root.derive(4));
  b.test = detail::make_split(cfg, doc_dirs, offsets, "q-test-", root.derive(5));
  for (auto& o : offsets) o *= cfg.scale;
  b.offsets = std::move(offsets);
  return b;
}

/// Convenience overload with the positional parameters of the generator.
inline SynthBenchmark synth_benchmark(std::size_t num_domains, std::size_t docs_per_domain,
                                      std::size_t queries_per_domain, std::size_t dim,
                                      double noise, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.num_domains = num_domains;
  cfg.docs_per_domain = docs_per_domain;
  cfg.queries_per_domain = queries_per_domain;
  cfg.dim = dim;
  cfg.noise = noise;
  cfg.seed = seed;
  return synth_benchmark(cfg);
}

/// Queries with their true domain offset removed: the best correction any
/// per-domain transform could learn.
inline EmbeddingTable oracle_transform(const SynthBenchmark& b, const SynthSplit& split) {
  Matrix<float> m = split.queries.matrix();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto& o = b.offsets[split.domains[r]];
    for (std::size_t c = 0; c < m.cols(); ++c) {
      m(r, c) = static_cast<float>(static_cast<double>(m(r, c)) - o[c]);
    }
  }
  return EmbeddingTable(split.queries.ids(), std::move(m));
}

}  // namespace desireme
