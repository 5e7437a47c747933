#include "mgnet/seqio.hpp"

#include <algorithm>
#include <cctype>

namespace mgnet {

namespace {

// getline with \r\n tolerance; counts lines
bool next_line(std::ifstream& in, std::string& line, std::size_t& line_no) {
  if (!std::getline(in, line)) return false;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string header_id(const std::string& header, std::size_t offset) {
  std::size_t end = header.find_first_of(" \t", offset);
  return header.substr(offset, end == std::string::npos ? std::string::npos
                                                        : end - offset);
}

void append_bases(std::string& bases, const std::string& line,
                  std::size_t line_no) {
  for (char c : line) {
    char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    switch (u) {
      case 'A':
      case 'C':
      case 'G':
      case 'T':
      case 'N':
        bases.push_back(u);
        break;
      default:
        throw ParseError(std::string("invalid base '") + c + "'", line_no);
    }
  }
}

}  // namespace

double SequenceRead::mean_quality() const {
  if (quality.empty()) return 0.0;
  double total = 0.0;
  for (int q : quality) total += q;
  return total / static_cast<double>(quality.size());
}

FastaReader::FastaReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open FASTA file: " + path.string());
}

std::optional<SequenceRead> FastaReader::next() {
  if (done_) return std::nullopt;
  std::string line;
  // find the record header (either buffered from the previous call or next
  // in the file)
  if (pending_header_.empty()) {
    while (next_line(in_, line, line_no_)) {
      if (line.empty()) continue;
      if (line[0] != '>')
        throw ParseError("sequence data before any '>' header", line_no_);
      pending_header_ = line;
      pending_header_line_ = line_no_;
      break;
    }
    if (pending_header_.empty()) {
      done_ = true;
      return std::nullopt;
    }
  }

  SequenceRead read;
  read.id = header_id(pending_header_, 1);
  const std::size_t header_line = pending_header_line_;
  pending_header_.clear();

  while (next_line(in_, line, line_no_)) {
    if (line.empty()) continue;
    if (line[0] == '>') {
      pending_header_ = line;
      pending_header_line_ = line_no_;
      break;
    }
    append_bases(read.bases, line, line_no_);
  }
  if (pending_header_.empty()) done_ = true;
  if (read.bases.empty())
    throw ParseError("record '" + read.id + "' has no sequence", header_line);
  return read;
}

FastqReader::FastqReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open FASTQ file: " + path.string());
}

std::optional<SequenceRead> FastqReader::next() {
  std::string header;
  if (!next_line(in_, header, line_no_)) return std::nullopt;
  if (header.empty() || header[0] != '@')
    throw ParseError("expected '@' record header", line_no_);

  SequenceRead read;
  read.id = header_id(header, 1);

  std::string bases, plus, qual;
  if (!next_line(in_, bases, line_no_) || !next_line(in_, plus, line_no_) ||
      !next_line(in_, qual, line_no_))
    throw ParseError("truncated FASTQ record '" + read.id + "'", line_no_);
  if (plus.empty() || plus[0] != '+')
    throw ParseError("expected '+' separator", line_no_ - 1);

  append_bases(read.bases, bases, line_no_ - 2);
  if (qual.size() != read.bases.size())
    throw ParseError("quality length " + std::to_string(qual.size()) +
                         " does not match sequence length " +
                         std::to_string(read.bases.size()),
                     line_no_);
  read.quality.reserve(qual.size());
  for (char c : qual) {
    int q = static_cast<unsigned char>(c) - 33;  // Phred+33
    if (q < 0) throw ParseError("quality character below '!'", line_no_);
    read.quality.push_back(q);
  }
  return read;
}

std::vector<SequenceRead> read_fasta(const std::filesystem::path& path) {
  FastaReader reader(path);
  std::vector<SequenceRead> reads;
  while (auto r = reader.next()) reads.push_back(std::move(*r));
  return reads;
}

std::vector<SequenceRead> read_fastq(const std::filesystem::path& path) {
  FastqReader reader(path);
  std::vector<SequenceRead> reads;
  while (auto r = reader.next()) reads.push_back(std::move(*r));
  return reads;
}

void write_fasta(const std::filesystem::path& path,
                 std::span<const SequenceRead> reads) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write FASTA file: " + path.string());
  for (const auto& r : reads) out << '>' << r.id << '\n' << r.bases << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

bool passes_mean_quality(const SequenceRead& read, double min_q) {
  if (!read.has_quality()) return true;
  return read.mean_quality() > min_q;
}

std::vector<SequenceRead> filter_by_mean_quality(
    std::vector<SequenceRead> reads, double min_q) {
  std::erase_if(reads,
                [&](const SequenceRead& r) { return !passes_mean_quality(r, min_q); });
  return reads;
}

}  // namespace mgnet
