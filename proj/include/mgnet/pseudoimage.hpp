#pragma once

// Per-read pseudo-images: a 4^k x 4^k intensity grid of relative k-mer
// co-occurrence. Pixel (i,j) is lit when k-mer pair (i -> j) co-occurs in
// the read, scaled by the read's total pair count.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mgnet/kmer.hpp"

namespace mgnet {

struct PseudoImage {
  std::string read_id;
  std::uint32_t side = 0;            // 4^k
  std::vector<std::uint8_t> pixels;  // row-major, intensities in [0,255]

  std::uint8_t at(std::uint32_t i, std::uint32_t j) const {
    return pixels[static_cast<std::size_t>(i) * side + j];
  }
};

// round-half-up used for all intensity quantization
inline int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

// Counts consecutive k-mer pairs of the stream; with N the total pair count,
// pixel(i,j) = round(255*c(i,j)/N) where c(i,j) > lambda_min, else 0.
// Streams with fewer than 2 k-mers give an all-zero image.
PseudoImage render_read(const KmerStream& stream, double lambda_min = 0.0);

// three identical channels, layout [3][side][side], values 0..255
std::vector<double> to_three_channel(const PseudoImage& img);

// binary PGM (P5), maxval 255, row-major
void write_pgm(const PseudoImage& img, const std::filesystem::path& path);
PseudoImage read_pgm(const std::filesystem::path& path);

// block-average pooling to target x target, re-rounded to [0,255];
// non-dividing targets use exact fractional pixel-area overlap
PseudoImage downscale(const PseudoImage& img, std::uint32_t target);

}  // namespace mgnet
