#include "mgnet/kmer.hpp"

#include "mgnet/errors.hpp"

namespace mgnet {

namespace {

int base_code(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default: return -1;
  }
}

void check_k(int k) {
  if (k < 1 || k > kMaxK)
    throw ConfigError("k must be in [1, " + std::to_string(kMaxK) + "], got " +
                      std::to_string(k));
}

}  // namespace

std::uint32_t kmer_space(int k) {
  check_k(k);
  return 1u << (2 * k);
}

KmerId encode_kmer(std::string_view bases) {
  check_k(static_cast<int>(bases.size()));
  KmerId id = 0;
  for (char c : bases) {
    int code = base_code(c);
    if (code < 0)
      throw EncodingError(std::string("character '") + c +
                          "' outside k-mer alphabet {A,C,G,T}");
    id = (id << 2) | static_cast<KmerId>(code);
  }
  return id;
}

std::string decode_kmer(KmerId id, int k) {
  check_k(k);
  if (id >= kmer_space(k))
    throw BoundsError("k-mer id " + std::to_string(id) + " out of range for k=" +
                      std::to_string(k));
  static constexpr char kBases[4] = {'A', 'C', 'G', 'T'};
  std::string out(static_cast<std::size_t>(k), 'A');
  for (int i = k - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kBases[id & 3u];
    id >>= 2;
  }
  return out;
}

KmerStream extract_kmers(const SequenceRead& read, int k, int s) {
  check_k(k);
  if (s < 1) throw ConfigError("stride must be >= 1, got " + std::to_string(s));

  KmerStream stream;
  stream.read_id = read.id;
  stream.k = k;
  stream.s = s;

  const std::string& bases = read.bases;
  const std::size_t len = bases.size();
  if (len < static_cast<std::size_t>(k)) return stream;

  // last_n[i] = largest index <= i holding an 'N', or -1
  std::vector<std::ptrdiff_t> last_n(len);
  std::ptrdiff_t recent = -1;
  for (std::size_t i = 0; i < len; ++i) {
    if (bases[i] == 'N') recent = static_cast<std::ptrdiff_t>(i);
    last_n[i] = recent;
  }

  const std::size_t last_start = len - static_cast<std::size_t>(k);
  for (std::size_t start = 0; start <= last_start;
       start += static_cast<std::size_t>(s)) {
    if (last_n[start + static_cast<std::size_t>(k) - 1] >=
        static_cast<std::ptrdiff_t>(start))
      continue;  // window contains 'N'
    stream.ids.push_back(
        encode_kmer(std::string_view(bases).substr(start,
                                                   static_cast<std::size_t>(k))));
  }
  return stream;
}

}  // namespace mgnet
