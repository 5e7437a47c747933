#include "mgnet/pseudoimage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "mgnet/errors.hpp"

namespace mgnet {

PseudoImage render_read(const KmerStream& stream, double lambda_min) {
  if (lambda_min < 0.0) throw ConfigError("lambda_min must be >= 0");
  if (stream.k > 8)
    throw ConfigError("pseudo-image side 4^" + std::to_string(stream.k) +
                      " is too large to materialize; use k <= 8");
  PseudoImage img;
  img.read_id = stream.read_id;
  img.side = kmer_space(stream.k);
  img.pixels.assign(static_cast<std::size_t>(img.side) * img.side, 0);

  if (stream.ids.size() < 2) return img;

  std::unordered_map<std::uint64_t, std::uint64_t> pair_counts;
  for (std::size_t t = 0; t + 1 < stream.ids.size(); ++t) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(stream.ids[t]) << 32) | stream.ids[t + 1];
    ++pair_counts[key];
  }
  const double total = static_cast<double>(stream.ids.size() - 1);

  for (const auto& [key, c] : pair_counts) {
    if (static_cast<double>(c) <= lambda_min) continue;  // strict cutoff
    const std::uint32_t i = static_cast<std::uint32_t>(key >> 32);
    const std::uint32_t j = static_cast<std::uint32_t>(key & 0xffffffffu);
    const int value = round_half_up(255.0 * static_cast<double>(c) / total);
    img.pixels[static_cast<std::size_t>(i) * img.side + j] =
        static_cast<std::uint8_t>(std::min(value, 255));
  }
  return img;
}

std::vector<double> to_three_channel(const PseudoImage& img) {
  const std::size_t plane = img.pixels.size();
  std::vector<double> out(3 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    const double v = static_cast<double>(img.pixels[i]);
    out[i] = v;
    out[plane + i] = v;
    out[2 * plane + i] = v;
  }
  return out;
}

void write_pgm(const PseudoImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PGM: " + path.string());
  out << "P5\n" << img.side << ' ' << img.side << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

PseudoImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PGM: " + path.string());
  std::string magic;
  std::uint32_t w = 0, h = 0;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255 || w != h)
    throw ParseError("unsupported PGM header in " + path.string());
  in.get();  // single whitespace after maxval
  PseudoImage img;
  img.read_id = path.stem().string();
  img.side = w;
  img.pixels.resize(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw ParseError("truncated PGM payload in " + path.string());
  return img;
}

PseudoImage downscale(const PseudoImage& img, std::uint32_t target) {
  if (target == 0) throw ConfigError("downscale target must be >= 1");
  if (target > img.side)
    throw ConfigError("downscale target " + std::to_string(target) +
                      " exceeds image side " + std::to_string(img.side));
  if (target == img.side) return img;

  PseudoImage out;
  out.read_id = img.read_id;
  out.side = target;
  out.pixels.assign(static_cast<std::size_t>(target) * target, 0);

  if (img.side % target == 0) {
    const std::uint32_t block = img.side / target;
    const std::uint64_t area = static_cast<std::uint64_t>(block) * block;
    for (std::uint32_t bi = 0; bi < target; ++bi) {
      for (std::uint32_t bj = 0; bj < target; ++bj) {
        std::uint64_t acc = 0;
        for (std::uint32_t i = 0; i < block; ++i) {
          const std::uint8_t* row =
              img.pixels.data() +
              (static_cast<std::size_t>(bi) * block + i) * img.side +
              static_cast<std::size_t>(bj) * block;
          for (std::uint32_t j = 0; j < block; ++j) acc += row[j];
        }
        // integer round-half-up of acc/area
        out.pixels[static_cast<std::size_t>(bi) * target + bj] =
            static_cast<std::uint8_t>((2 * acc + area) / (2 * area));
      }
    }
    return out;
  }

  // fractional box filter for non-dividing targets
  const double scale = static_cast<double>(img.side) / target;
  for (std::uint32_t bi = 0; bi < target; ++bi) {
    const double y0 = bi * scale, y1 = (bi + 1) * scale;
    for (std::uint32_t bj = 0; bj < target; ++bj) {
      const double x0 = bj * scale, x1 = (bj + 1) * scale;
      double acc = 0.0;
      for (std::uint32_t i = static_cast<std::uint32_t>(y0);
           i < img.side && i < y1; ++i) {
        const double wy =
            std::min<double>(y1, i + 1) - std::max<double>(y0, i);
        for (std::uint32_t j = static_cast<std::uint32_t>(x0);
             j < img.side && j < x1; ++j) {
          const double wx =
              std::min<double>(x1, j + 1) - std::max<double>(x0, j);
          acc += wy * wx * img.at(i, j);
        }
      }
      const int value = round_half_up(acc / (scale * scale));
      out.pixels[static_cast<std::size_t>(bi) * target + bj] =
          static_cast<std::uint8_t>(std::clamp(value, 0, 255));
    }
  }
  return out;
}

}  // namespace mgnet
