#pragma once

#include <filesystem>

#include "varbg/background.hpp"
#include "varbg/types.hpp"

namespace varbg {

/// r_i = min over k in the vicinity x vicinity window around i (clipped at
/// the borders) and over every background c of |current(i) - background_c(k)|.
/// vicinity must be 1, 3 or 5.
ResidualMap residual_map(const Frame& current, const BackgroundBatch& backgrounds, int vicinity = 3);

void save_residual_map(const std::filesystem::path& path, const ResidualMap& rmap);

}  // namespace varbg
