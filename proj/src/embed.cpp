#include "mgnet/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mgnet/errors.hpp"
#include "mgnet/kernels.hpp"
#include "mgnet/rng.hpp"

namespace mgnet {

namespace {

struct Csr {
  std::vector<std::uint32_t> offsets;  // node_count + 1
  std::vector<KmerId> dst;
  std::vector<double> weight;
  std::vector<double> cumulative;  // per-row cumulative weights

  std::span<const KmerId> neighbors(KmerId v) const {
    return {dst.data() + offsets[v], dst.data() + offsets[v + 1]};
  }
  bool has_edge(KmerId u, KmerId v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }
  std::size_t degree(KmerId v) const { return offsets[v + 1] - offsets[v]; }
};

Csr build_csr(const CooccurrenceGraph& graph) {
  const auto rows = graph.sorted_edges();
  Csr csr;
  csr.offsets.assign(graph.node_count() + 1, 0);
  csr.dst.reserve(rows.size());
  csr.weight.reserve(rows.size());
  for (const EdgeRow& r : rows) ++csr.offsets[r.src + 1];
  for (std::size_t i = 1; i < csr.offsets.size(); ++i)
    csr.offsets[i] += csr.offsets[i - 1];
  for (const EdgeRow& r : rows) {
    csr.dst.push_back(r.dst);
    csr.weight.push_back(r.state.weight);
  }
  csr.cumulative.resize(csr.weight.size());
  for (KmerId v = 0; v < graph.node_count(); ++v) {
    double acc = 0.0;
    for (std::uint32_t i = csr.offsets[v]; i < csr.offsets[v + 1]; ++i) {
      acc += csr.weight[i];
      csr.cumulative[i] = acc;
    }
  }
  return csr;
}

// index into [begin,end) of the cumulative row, proportional sampling
std::uint32_t sample_cumulative(const double* cum, std::uint32_t n, Rng& rng) {
  const double r = rng.uniform() * cum[n - 1];
  const double* it = std::upper_bound(cum, cum + n, r);
  return static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cum, n - 1));
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void WalkConfig::validate() const {
  if (walks_per_node < 1 || walk_length < 1 || window < 1 || negatives < 1 ||
      epochs < 1)
    throw ConfigError("walk config counts must be >= 1");
  if (dims < 2) throw ConfigError("embedding dims must be >= 2");
  if (!(return_p > 0.0) || !(inout_q > 0.0))
    throw ConfigError("return_p and inout_q must be > 0");
}

std::vector<std::vector<KmerId>> generate_walks(const CooccurrenceGraph& graph,
                                                const WalkConfig& cfg) {
  cfg.validate();
  if (graph.edge_count() == 0)
    throw ConfigError("cannot walk an empty graph");

  const Csr csr = build_csr(graph);
  std::vector<std::vector<KmerId>> walks;
  std::vector<double> biased;  // scratch for second-order weights

  for (KmerId start = 0; start < graph.node_count(); ++start) {
    if (csr.degree(start) == 0) continue;
    for (int wi = 0; wi < cfg.walks_per_node; ++wi) {
      Rng rng(Rng::derive(cfg.seed, start, static_cast<std::uint64_t>(wi)));
      std::vector<KmerId> walk;
      walk.reserve(static_cast<std::size_t>(cfg.walk_length));
      walk.push_back(start);
      while (walk.size() < static_cast<std::size_t>(cfg.walk_length)) {
        const KmerId cur = walk.back();
        const std::uint32_t deg = static_cast<std::uint32_t>(csr.degree(cur));
        if (deg == 0) break;  // sink terminates the walk early
        const std::uint32_t row = csr.offsets[cur];
        std::uint32_t pick;
        if (walk.size() == 1) {
          pick = sample_cumulative(csr.cumulative.data() + row, deg, rng);
        } else {
          const KmerId prev = walk[walk.size() - 2];
          biased.resize(deg);
          double acc = 0.0;
          for (std::uint32_t i = 0; i < deg; ++i) {
            const KmerId x = csr.dst[row + i];
            double bias;
            if (x == prev)
              bias = 1.0 / cfg.return_p;
            else if (csr.has_edge(prev, x))
              bias = 1.0;
            else
              bias = 1.0 / cfg.inout_q;
            acc += csr.weight[row + i] * bias;
            biased[i] = acc;
          }
          pick = sample_cumulative(biased.data(), deg, rng);
        }
        walk.push_back(csr.dst[row + pick]);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

double sgns_pair_loss_grad(std::span<const double> center,
                           std::span<const double> context,
                           std::span<const std::vector<double>> negatives,
                           std::span<double> grad_center,
                           std::span<double> grad_context,
                           std::span<std::vector<double>> grad_negatives) {
  const std::size_t d = center.size();
  const double zp = kern::dot(center.data(), context.data(), d);
  const double sp = sigmoid(zp);
  double loss = -std::log(std::max(sp, 1e-300));
  // d/dz of -log(sigmoid(z)) is sigma(z) - 1
  kern::axpy(sp - 1.0, context.data(), grad_center.data(), d);
  kern::axpy(sp - 1.0, center.data(), grad_context.data(), d);
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const double zn = kern::dot(center.data(), negatives[k].data(), d);
    const double sn = sigmoid(zn);
    loss -= std::log(std::max(1.0 - sn, 1e-300));
    kern::axpy(sn, negatives[k].data(), grad_center.data(), d);
    kern::axpy(sn, center.data(), grad_negatives[k].data(), d);
  }
  return loss;
}

SkipgramResult train_skipgram(const std::vector<std::vector<KmerId>>& walks,
                              const WalkConfig& cfg) {
  cfg.validate();

  // vocabulary: nodes appearing in walks, ascending
  std::vector<KmerId> vocab;
  {
    std::vector<KmerId> all;
    for (const auto& w : walks) all.insert(all.end(), w.begin(), w.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    vocab = std::move(all);
  }
  if (vocab.empty()) throw ConfigError("skip-gram vocabulary is empty");

  const std::size_t V = vocab.size();
  const std::size_t d = static_cast<std::size_t>(cfg.dims);
  std::unordered_map<KmerId, std::uint32_t> index;
  index.reserve(V);
  for (std::uint32_t i = 0; i < V; ++i) index[vocab[i]] = i;

  // unigram^(3/4) cumulative table for negative sampling
  std::vector<double> counts(V, 0.0);
  std::size_t total_positions = 0;
  for (const auto& w : walks) {
    total_positions += w.size();
    for (KmerId id : w) counts[index[id]] += 1.0;
  }
  std::vector<double> neg_cum(V);
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < V; ++i) {
      acc += std::pow(counts[i], 0.75);
      neg_cum[i] = acc;
    }
  }

  Rng init_rng(Rng::derive(cfg.seed, 0x5eed0001ULL));
  std::vector<double> in_vecs(V * d), out_vecs(V * d, 0.0);
  for (double& v : in_vecs) v = init_rng.uniform(-0.5 / cfg.dims, 0.5 / cfg.dims);

  SkipgramResult result;
  result.table.dims = cfg.dims;

  const double alpha0 = 0.025, alpha_min = 1e-4;
  const std::size_t total_steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(cfg.epochs) * total_positions);
  std::size_t done = 0;
  Rng train_rng(Rng::derive(cfg.seed, 0x5eed0002ULL));
  std::vector<double> scratch(d);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_pairs = 0;
    for (const auto& walk : walks) {
      for (std::size_t t = 0; t < walk.size(); ++t, ++done) {
        const double alpha =
            std::max(alpha_min,
                     alpha0 * (1.0 - static_cast<double>(done) /
                                         static_cast<double>(total_steps)));
        const std::uint32_t center = index[walk[t]];
        const std::ptrdiff_t lo =
            std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(t) - cfg.window);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>(walk.size()) - 1,
            static_cast<std::ptrdiff_t>(t) + cfg.window);
        for (std::ptrdiff_t c = lo; c <= hi; ++c) {
          if (c == static_cast<std::ptrdiff_t>(t)) continue;
          if (walk[static_cast<std::size_t>(c)] == walk[t])
            continue;  // self pairs carry no contrastive signal
          const std::uint32_t ctx = index[walk[static_cast<std::size_t>(c)]];

          double* v = in_vecs.data() + center * d;
          std::fill(scratch.begin(), scratch.end(), 0.0);

          // positive
          {
            double* u = out_vecs.data() + ctx * d;
            const double s = sigmoid(kern::dot(v, u, d));
            epoch_loss -= std::log(std::max(s, 1e-300));
            const double g = alpha * (1.0 - s);
            kern::axpy(g, u, scratch.data(), d);
            kern::axpy(g, v, u, d);
          }
          // negatives
          for (int k = 0; k < cfg.negatives; ++k) {
            const std::uint32_t neg = sample_cumulative(
                neg_cum.data(), static_cast<std::uint32_t>(V), train_rng);
            if (neg == ctx) continue;
            double* u = out_vecs.data() + neg * d;
            const double s = sigmoid(kern::dot(v, u, d));
            epoch_loss -= std::log(std::max(1.0 - s, 1e-300));
            const double g = -alpha * s;
            kern::axpy(g, u, scratch.data(), d);
            kern::axpy(g, v, u, d);
          }
          kern::vadd(v, scratch.data(), v, d);
          ++epoch_pairs;
        }
      }
    }
    result.epoch_mean_loss.push_back(
        epoch_pairs ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0);
  }

  for (std::size_t i = 0; i < V; ++i)
    result.table.vectors.emplace(
        vocab[i], std::vector<double>(in_vecs.begin() + static_cast<std::ptrdiff_t>(i * d),
                                      in_vecs.begin() + static_cast<std::ptrdiff_t>((i + 1) * d)));
  return result;
}

std::vector<double> pool_read_feature(const KmerStream& stream,
                                      const EmbeddingTable& table) {
  std::vector<double> acc(static_cast<std::size_t>(table.dims), 0.0);
  std::size_t hits = 0;
  for (KmerId id : stream.ids) {
    if (const auto* vec = table.find(id)) {
      kern::vadd(acc.data(), vec->data(), acc.data(), acc.size());
      ++hits;
    }
  }
  if (hits > 0) {
    const double inv = 1.0 / static_cast<double>(hits);
    for (double& v : acc) v *= inv;
  }
  return acc;
}

void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embeddings: " + path.string());
  std::vector<KmerId> ids;
  ids.reserve(table.vectors.size());
  for (const auto& [id, _] : table.vectors) ids.push_back(id);
  std::sort(ids.begin(), ids.end());

  out << table.vectors.size() << ' ' << table.dims << '\n';
  char buf[64];
  for (KmerId id : ids) {
    out << id;
    for (double v : table.vectors.at(id)) {
      std::snprintf(buf, sizeof(buf), "%.6g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embeddings: " + path.string());
  std::size_t count = 0;
  EmbeddingTable table;
  if (!(in >> count >> table.dims) || table.dims < 1)
    throw ParseError("bad embedding header in " + path.string(), 1);
  table.vectors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    KmerId id;
    if (!(in >> id))
      throw ParseError("truncated embedding file " + path.string(), i + 2);
    std::vector<double> vec(static_cast<std::size_t>(table.dims));
    for (double& v : vec)
      if (!(in >> v))
        throw ParseError("truncated embedding row in " + path.string(), i + 2);
    table.vectors.emplace(id, std::move(vec));
  }
  return table;
}

}  // namespace mgnet
