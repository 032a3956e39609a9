#include "fqf/tissue/classify.hpp"

#include "fqf/core/error.hpp"
#include "fqf/core/parallel.hpp"
#include "fqf/tissue/bandlimited.hpp"

namespace fqf::tissue {

ScattererCloud classify_in_vessel(ScattererCloud cloud, const VoxelGrid& vessel_mask,
                                  int support) {
  require(vessel_mask.components() == 1, "vessel mask must be a scalar grid");
  parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vec3& p = cloud.positions[i];
      if (!vessel_mask.contains(p)) {
        cloud.label[i] = Label::tissue;
        continue;
      }
      BandlimitedProjection proj = bandlimited_delta(p, vessel_mask, support);
      cloud.label[i] = project_sample(proj, vessel_mask) > 0.5 ? Label::blood : Label::tissue;
    }
  });
  return cloud;
}

}  // namespace fqf::tissue
