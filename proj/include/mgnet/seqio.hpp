#pragma once

// FASTA/FASTQ parsing and quality filtering. Readers are streaming: they hold
// one record at a time, so memory is bounded by the largest record.

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgnet/errors.hpp"

namespace mgnet {

struct SequenceRead {
  std::string id;
  std::string bases;            // uppercase, alphabet {A,C,G,T,N}
  std::vector<int> quality;     // Phred scores; empty means absent

  bool has_quality() const { return !quality.empty(); }
  double mean_quality() const;
};

// Multi-line sequences allowed; '>' opens a record, id is the first
// header token. Lowercase bases are uppercased on ingest.
class FastaReader {
 public:
  explicit FastaReader(const std::filesystem::path& path);
  std::optional<SequenceRead> next();

 private:
  std::ifstream in_;
  std::string pending_header_;
  std::size_t pending_header_line_ = 0;
  std::size_t line_no_ = 0;
  bool done_ = false;
};

// Strict 4-line records: '@id', bases, '+', Phred+33 quality.
class FastqReader {
 public:
  explicit FastqReader(const std::filesystem::path& path);
  std::optional<SequenceRead> next();

 private:
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::vector<SequenceRead> read_fasta(const std::filesystem::path& path);
std::vector<SequenceRead> read_fastq(const std::filesystem::path& path);
void write_fasta(const std::filesystem::path& path,
                 std::span<const SequenceRead> reads);

// true when the read has no quality, or its mean quality is strictly
// greater than min_q
bool passes_mean_quality(const SequenceRead& read, double min_q);

std::vector<SequenceRead> filter_by_mean_quality(
    std::vector<SequenceRead> reads, double min_q);

}  // namespace mgnet
