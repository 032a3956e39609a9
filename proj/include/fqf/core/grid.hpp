#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "fqf/core/container.hpp"
#include "fqf/core/vec.hpp"

namespace fqf {

// Regular axis-aligned node grid.  Values live on nodes; node (i,j,k) sits at
// origin + (i,j,k) * spacing.  Storage is row-major with x fastest:
// flat = i + nx * (j + ny * k), components interleaved per node.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(std::array<int, 3> dims, Vec3 spacing, Vec3 origin, int components = 1);

  const std::array<int, 3>& dims() const { return dims_; }
  Vec3 spacing() const { return spacing_; }
  Vec3 origin() const { return origin_; }
  int components() const { return components_; }
  std::size_t num_nodes() const;

  std::size_t flat(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
  }

  double& at(int i, int j, int k, int c = 0) { return data_[flat(i, j, k) * components_ + c]; }
  double at(int i, int j, int k, int c = 0) const { return data_[flat(i, j, k) * components_ + c]; }

  Vec3 vec_at(int i, int j, int k) const {
    std::size_t base = flat(i, j, k) * 3;
    return {data_[base], data_[base + 1], data_[base + 2]};
  }
  void set_vec(int i, int j, int k, const Vec3& v) {
    std::size_t base = flat(i, j, k) * 3;
    data_[base] = v.x;
    data_[base + 1] = v.y;
    data_[base + 2] = v.z;
  }

  Vec3 node_position(int i, int j, int k) const {
    return {origin_.x + i * spacing_.x, origin_.y + j * spacing_.y, origin_.z + k * spacing_.z};
  }

  // Continuous grid coordinates of a world point (node units).
  Vec3 to_grid(const Vec3& p) const {
    return {(p.x - origin_.x) / spacing_.x, (p.y - origin_.y) / spacing_.y,
            (p.z - origin_.z) / spacing_.z};
  }

  Vec3 min_corner() const { return origin_; }
  Vec3 max_corner() const { return node_position(dims_[0] - 1, dims_[1] - 1, dims_[2] - 1); }

  bool contains(const Vec3& p) const;

  // Trilinear interpolation of one component; p must be inside the grid.
  // Exact at nodes and exact for fields linear in position.
  double sample(const Vec3& p, int c = 0) const;
  Vec3 sample_vec(const Vec3& p) const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::array<int, 3> dims_{0, 0, 0};
  Vec3 spacing_{1, 1, 1};
  Vec3 origin_{0, 0, 0};
  int components_ = 1;
  std::vector<double> data_;
};

// Grid container I/O.  The header carries dims / spacing / origin / components
// alongside any caller-supplied entries; payload dtype is f64 unless stated.
void write_grid(const std::string& path, const VoxelGrid& grid, ContainerHeader extra = {},
                Dtype dtype = Dtype::f64);
std::pair<VoxelGrid, ContainerHeader> read_grid(const std::string& path);

}  // namespace fqf
