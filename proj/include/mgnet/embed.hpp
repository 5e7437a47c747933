#pragma once

// Structural k-mer embeddings: second-order biased random walks over the
// co-occurrence graph, skip-gram training with negative sampling, and
// average pooling into per-read features.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mgnet/coograph.hpp"

namespace mgnet {

struct WalkConfig {
  int walks_per_node = 10;
  int walk_length = 80;
  double return_p = 1.0;
  double inout_q = 1.0;
  int window = 10;
  int negatives = 5;
  int dims = 128;
  int epochs = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EmbeddingTable {
  int dims = 0;
  std::unordered_map<KmerId, std::vector<double>> vectors;

  const std::vector<double>* find(KmerId id) const {
    auto it = vectors.find(id);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

// walks_per_node walks from every node with at least one out-edge, in
// ascending node order; transitions sample proportional to edge weight with
// the return_p / inout_q second-order bias; per-walk seeds derive from
// (seed, node, walk index) so the set is reproducible
std::vector<std::vector<KmerId>> generate_walks(const CooccurrenceGraph& graph,
                                                const WalkConfig& cfg);

struct SkipgramResult {
  EmbeddingTable table;
  std::vector<double> epoch_mean_loss;
};

SkipgramResult train_skipgram(const std::vector<std::vector<KmerId>>& walks,
                              const WalkConfig& cfg);

// negative-sampling loss and gradients for a single (center, context,
// negatives) sample; exposed so the gradient can be checked independently
double sgns_pair_loss_grad(std::span<const double> center,
                           std::span<const double> context,
                           std::span<const std::vector<double>> negatives,
                           std::span<double> grad_center,
                           std::span<double> grad_context,
                           std::span<std::vector<double>> grad_negatives);

// arithmetic mean of the table vectors of the stream's k-mers; k-mers
// absent from the table are skipped; empty intersection gives a zero vector
std::vector<double> pool_read_feature(const KmerStream& stream,
                                      const EmbeddingTable& table);

// text format: "<count> <dims>" header line, then "<kmer-id> <v1> ... <vd>"
// per line with 6 significant digits, sorted by id
void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingTable& table);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

}  // namespace mgnet
