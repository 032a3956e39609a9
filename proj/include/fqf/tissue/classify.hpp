#pragma once

#include "fqf/core/grid.hpp"
#include "fqf/tissue/cloud.hpp"

namespace fqf::tissue {

// Kernel truncation half-width in index units used for classification.
inline constexpr int kClassifySupport = 8;

// Labels each scatterer blood iff the vessel mask, contracted against the
// band-limited projection of its position, exceeds 0.5.  Points outside
// the grid keep the tissue label.  support <= 0 evaluates the full grid.
ScattererCloud classify_in_vessel(ScattererCloud cloud, const VoxelGrid& vessel_mask,
                                  int support = kClassifySupport);

}  // namespace fqf::tissue
