#include "varbg/residual.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "varbg/imageio.hpp"

namespace varbg {

ResidualMap residual_map(const Frame& current, const BackgroundBatch& backgrounds, int vicinity) {
  if (vicinity != 1 && vicinity != 3 && vicinity != 5) throw std::invalid_argument("residual_map: vicinity must be 1, 3 or 5");
  if (backgrounds.empty()) throw std::invalid_argument("residual_map: no backgrounds");
  for (const Frame& b : backgrounds) {
    if (b.rows() != current.rows() || b.cols() != current.cols()) throw std::invalid_argument("residual_map: dimension mismatch");
  }
  const int half = vicinity / 2;
  const auto h = static_cast<int>(current.rows()), w = static_cast<int>(current.cols());
  ResidualMap r(h, w);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - half), y1 = std::min(h - 1, y + half);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - half), x1 = std::min(w - 1, x + half);
      const int value = current(y, x);
      int best = 255;
      for (const Frame& b : backgrounds) {
        for (int ky = y0; ky <= y1 && best > 0; ++ky) {
          for (int kx = x0; kx <= x1; ++kx) best = std::min(best, std::abs(value - static_cast<int>(b(ky, kx))));
        }
      }
      r(y, x) = best;
    }
  }
  return r;
}

void save_residual_map(const std::filesystem::path& path, const ResidualMap& rmap) {
  save_pgm(path, rmap.cast<std::uint8_t>().matrix());
}

}  // namespace varbg
