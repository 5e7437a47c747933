#pragma once

// Dense k-mer ids over {A,C,G,T} and sliding-window extraction. Ids are
// base-4 big-endian codes (A=0, C=1, G=2, T=3), so a k-mer indexes directly
// into 4^k-sized structures.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mgnet/seqio.hpp"

namespace mgnet {

using KmerId = std::uint32_t;

// 4^k ids must fit 32-bit arithmetic and keep image sides finite
inline constexpr int kMaxK = 12;

// number of distinct k-mers, 4^k
std::uint32_t kmer_space(int k);

KmerId encode_kmer(std::string_view bases);
std::string decode_kmer(KmerId id, int k);

struct KmerStream {
  std::string read_id;
  std::vector<KmerId> ids;  // left-to-right genomic order
  int k = 0;
  int s = 0;  // stride: distance between window starts
};

// Windows start at offsets 0, s, 2s, ...; windows containing 'N' are
// skipped. A read shorter than k yields an empty stream.
KmerStream extract_kmers(const SequenceRead& read, int k, int s);

}  // namespace mgnet
