#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

int nearest_rank(std::vector<std::uint8_t> values, double p) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  long rank = static_cast<long>(std::ceil(p * n - 1e-9));
  rank = std::clamp<long>(rank, 1, static_cast<long>(values.size()));
  return values[static_cast<std::size_t>(rank - 1)];
}

int dynamic_range(const std::vector<std::uint8_t>& luma) {
  return nearest_rank(luma, 0.99) - nearest_rank(luma, 0.01);
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  double y = (299.0 * r + 587.0 * g + 114.0 * b) / 1000.0;
  return static_cast<std::uint8_t>(std::clamp(std::floor(y + 0.5), 0.0, 255.0));
}

double immerkaer_sigma(const std::vector<std::uint8_t>& luma, int width, int height) {
  if (width < 3 || height < 3) return 0.0;
  static const int k[3][3] = {{1, -2, 1}, {-2, 4, -2}, {1, -2, 1}};
  double total = 0.0;
  for (int y = 1; y < height - 1; ++y) {
    for (int x = 1; x < width - 1; ++x) {
      double r = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) r += k[dy + 1][dx + 1] * luma[(y + dy) * width + (x + dx)];
      total += std::fabs(r);
    }
  }
  const double pi = std::acos(-1.0);
  return std::sqrt(pi / 2.0) * total / (6.0 * (width - 2) * (height - 2));
}

double laplacian4_variance(const std::vector<std::uint8_t>& luma, int width, int height) {
  if (width < 3 || height < 3) return 0.0;
  std::vector<double> r;
  for (int y = 1; y < height - 1; ++y) {
    for (int x = 1; x < width - 1; ++x) {
      r.push_back(static_cast<double>(luma[(y - 1) * width + x]) + luma[(y + 1) * width + x] +
                  luma[y * width + x - 1] + luma[y * width + x + 1] - 4.0 * luma[y * width + x]);
    }
  }
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  return var / static_cast<double>(r.size());
}

char ncda(std::string_view s) {
  const std::string alphabet = "0123456789bcdfghjkmnpqrstvwxz";
  long sum = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto pos = alphabet.find(s[i]);
    long ord = pos == std::string::npos ? 0 : static_cast<long>(pos);
    sum += static_cast<long>(i + 1) * ord;
  }
  return alphabet[static_cast<std::size_t>(sum % 29)];
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  return static_cast<std::uint32_t>(bytes[offset]) | static_cast<std::uint32_t>(bytes[offset + 1]) << 8 |
         static_cast<std::uint32_t>(bytes[offset + 2]) << 16 | static_cast<std::uint32_t>(bytes[offset + 3]) << 24;
}

}  // namespace oracle
