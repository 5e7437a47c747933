#pragma once

// Sample-level weighted directed k-mer co-occurrence graph. Edges connect
// consecutive k-mers of a read's extracted stream; each observation bumps the
// edge tally and re-derives the weight from the clamp update f_s.

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "mgnet/kmer.hpp"

namespace mgnet {

struct EdgeState {
  std::uint64_t count = 0;  // co-occurrence tally
  double weight = 0.0;      // clamp-updated weight, >= 1 once observed
};

struct EdgeRow {
  KmerId src;
  KmerId dst;
  EdgeState state;
};

// weighted update function: 2*sqrt(max(q-1,1)) + (min(q-2,2)+2)
double f_s(double q);

// weight as a function of the tally: 1 for a fresh edge, else f_s(count-1)
double weight_for_count(std::uint64_t count);

class CooccurrenceGraph {
 public:
  explicit CooccurrenceGraph(int k);

  int k() const { return k_; }
  std::uint32_t node_count() const { return node_count_; }
  std::size_t edge_count() const { return edges_.size(); }

  const EdgeState* find_edge(KmerId src, KmerId dst) const;

  // first observation creates the edge with count=1, weight=1; each later
  // one sets count = count+1 and weight = f_s(previous count)
  EdgeState observe_pair(KmerId src, KmerId dst);

  // applies observe_pair to every consecutive pair of the stream, in order;
  // returns the number of pair observations
  std::size_t add_read(const KmerStream& stream);

  // installs an edge with an explicit tally, weight derived from it
  void set_count(KmerId src, KmerId dst, std::uint64_t count);

  // sums tallies from another graph and re-derives the weights; used to
  // merge per-shard partial graphs
  void merge_counts(const CooccurrenceGraph& other);

  // edges sorted ascending by (src, dst)
  std::vector<EdgeRow> sorted_edges() const;

  bool operator==(const CooccurrenceGraph& other) const;

 private:
  int k_;
  std::uint32_t node_count_;
  std::unordered_map<std::uint64_t, EdgeState> edges_;
};

// sequential add_read over all streams when shards == 1; with more shards
// the reads are split into contiguous ranges whose partial graphs are merged
// by summing tallies — the result is bit-identical to sequential build
CooccurrenceGraph build_global_graph(std::span<const KmerStream> streams, int k,
                                     unsigned shards = 1);

// TSV edge list: header "src\tdst\tcount\tweight", rows sorted ascending,
// weights printed with 6 significant digits
void export_edges(const CooccurrenceGraph& graph,
                  const std::filesystem::path& path);
CooccurrenceGraph import_edges(const std::filesystem::path& path, int k);

// 6-significant-digit weight text, always carrying a decimal point
std::string format_weight(double w);

}  // namespace mgnet
