#include "mgnet/coograph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "mgnet/errors.hpp"

namespace mgnet {

namespace {

std::uint64_t edge_key(KmerId src, KmerId dst) {
  return (static_cast<std::uint64_t>(src) << 32) | dst;
}

}  // namespace

double f_s(double q) {
  return 2.0 * std::sqrt(std::max(q - 1.0, 1.0)) +
         (std::min(q - 2.0, 2.0) + 2.0);
}

double weight_for_count(std::uint64_t count) {
  if (count <= 1) return 1.0;
  return f_s(static_cast<double>(count - 1));
}

CooccurrenceGraph::CooccurrenceGraph(int k)
    : k_(k), node_count_(kmer_space(k)) {}

const EdgeState* CooccurrenceGraph::find_edge(KmerId src, KmerId dst) const {
  auto it = edges_.find(edge_key(src, dst));
  return it == edges_.end() ? nullptr : &it->second;
}

EdgeState CooccurrenceGraph::observe_pair(KmerId src, KmerId dst) {
  if (src >= node_count_ || dst >= node_count_)
    throw BoundsError("k-mer id out of range for k=" + std::to_string(k_));
  auto [it, inserted] = edges_.try_emplace(edge_key(src, dst));
  EdgeState& e = it->second;
  if (inserted) {
    e.count = 1;
    e.weight = 1.0;  // fresh edges start at weight 1
  } else {
    // unit increment: |count - (count+1)| = 1, so q is the old tally
    e.weight = f_s(static_cast<double>(e.count));
    e.count += 1;
  }
  return e;
}

std::size_t CooccurrenceGraph::add_read(const KmerStream& stream) {
  if (stream.k != k_)
    throw ConfigError("stream k=" + std::to_string(stream.k) +
                      " does not match graph k=" + std::to_string(k_));
  if (stream.ids.size() < 2) return 0;
  for (std::size_t t = 0; t + 1 < stream.ids.size(); ++t)
    observe_pair(stream.ids[t], stream.ids[t + 1]);
  return stream.ids.size() - 1;
}

void CooccurrenceGraph::set_count(KmerId src, KmerId dst,
                                  std::uint64_t count) {
  if (src >= node_count_ || dst >= node_count_)
    throw BoundsError("k-mer id out of range for k=" + std::to_string(k_));
  if (count == 0) throw ConfigError("edge count must be >= 1");
  edges_[edge_key(src, dst)] = {count, weight_for_count(count)};
}

void CooccurrenceGraph::merge_counts(const CooccurrenceGraph& other) {
  if (other.k_ != k_) throw ConfigError("cannot merge graphs with different k");
  for (const auto& [key, state] : other.edges_) {
    EdgeState& e = edges_[key];
    e.count += state.count;
    e.weight = weight_for_count(e.count);
  }
}

std::vector<EdgeRow> CooccurrenceGraph::sorted_edges() const {
  std::vector<EdgeRow> rows;
  rows.reserve(edges_.size());
  for (const auto& [key, state] : edges_)
    rows.push_back({static_cast<KmerId>(key >> 32),
                    static_cast<KmerId>(key & 0xffffffffu), state});
  std::sort(rows.begin(), rows.end(), [](const EdgeRow& a, const EdgeRow& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  return rows;
}

bool CooccurrenceGraph::operator==(const CooccurrenceGraph& other) const {
  if (k_ != other.k_ || edges_.size() != other.edges_.size()) return false;
  for (const auto& [key, state] : edges_) {
    auto it = other.edges_.find(key);
    if (it == other.edges_.end() || it->second.count != state.count ||
        it->second.weight != state.weight)
      return false;
  }
  return true;
}

CooccurrenceGraph build_global_graph(std::span<const KmerStream> streams,
                                     int k, unsigned shards) {
  if (shards <= 1 || streams.size() < 2) {
    CooccurrenceGraph graph(k);
    for (const auto& s : streams) graph.add_read(s);
    return graph;
  }

  shards = std::min<unsigned>(shards, static_cast<unsigned>(streams.size()));
  std::vector<CooccurrenceGraph> partials(shards, CooccurrenceGraph(k));
  std::vector<std::thread> workers;
  const std::size_t per = (streams.size() + shards - 1) / shards;
  for (unsigned w = 0; w < shards; ++w) {
    const std::size_t begin = w * per;
    const std::size_t end = std::min(streams.size(), begin + per);
    workers.emplace_back([&, w, begin, end] {
      for (std::size_t i = begin; i < end; ++i) partials[w].add_read(streams[i]);
    });
  }
  for (auto& t : workers) t.join();

  CooccurrenceGraph graph(k);
  for (const auto& p : partials) graph.merge_counts(p);
  return graph;
}

std::string format_weight(double w) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", w);
  std::string s(buf);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

void export_edges(const CooccurrenceGraph& graph,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write edge list: " + path.string());
  out << "src\tdst\tcount\tweight\n";
  for (const EdgeRow& row : graph.sorted_edges())
    out << row.src << '\t' << row.dst << '\t' << row.state.count << '\t'
        << format_weight(row.state.weight) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

CooccurrenceGraph import_edges(const std::filesystem::path& path, int k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open edge list: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty edge list " + path.string(), 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "src\tdst\tcount\tweight")
    throw ParseError("bad edge list header in " + path.string(), 1);

  CooccurrenceGraph graph(k);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    KmerId src, dst;
    std::uint64_t count;
    double weight;
    if (!(ss >> src >> dst >> count >> weight) || count == 0)
      throw ParseError("bad edge row in " + path.string(), line_no);
    // the weight column is display precision only; the tally re-derives it
    graph.set_count(src, dst, count);
  }
  return graph;
}

}  // namespace mgnet
