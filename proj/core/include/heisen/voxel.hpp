#pragma once

// Occupancy grids over an axis-aligned box. A voxel stands for its center
// sample; measure is (set cells) * (cell volume), which is the Lebesgue
// (left-Haar) measure of the group in either coordinate model.

#include "heisen/group.hpp"
#include "heisen/metrics.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace heisen {

struct VoxelGrid {
  Box3 box;
  std::array<int, 3> resolution{64, 64, 64};
  Model model = Model::polarized;

  static VoxelGrid uniform(const Box3& box, int cells, Model model = Model::polarized) {
    return {box, {cells, cells, cells}, model};
  }

  /// Throws std::invalid_argument for empty boxes or nonpositive resolutions.
  void validate() const;

  [[nodiscard]] double cell_size(int axis) const {
    return (box.hi[axis] - box.lo[axis]) / resolution[axis];
  }
  [[nodiscard]] double cell_volume() const { return cell_size(0) * cell_size(1) * cell_size(2); }
  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(resolution[0]) * resolution[1] * resolution[2];
  }
  [[nodiscard]] std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * resolution[1] + iy) * resolution[0] + ix;
  }
  [[nodiscard]] std::array<int, 3> cell(std::size_t index) const;
  [[nodiscard]] Eigen::Vector3d center(std::size_t index) const;
  [[nodiscard]] GroupPoint center_point(std::size_t index) const {
    return GroupPoint::from_coords(model, center(index));
  }
  /// Cell containing p; the upper faces of the box belong to the last cell.
  [[nodiscard]] std::optional<std::size_t> locate(const Eigen::Vector3d& p) const;
  [[nodiscard]] bool same_layout(const VoxelGrid& other) const;
};

class VoxelSet {
 public:
  VoxelSet() = default;
  explicit VoxelSet(VoxelGrid grid);

  /// Cells whose center satisfies pred; evaluated in parallel.
  static VoxelSet from_predicate(const VoxelGrid& grid, const std::function<bool(const Eigen::Vector3d&)>& pred,
                                 unsigned threads = 0);
  static VoxelSet full(const VoxelGrid& grid);

  [[nodiscard]] const VoxelGrid& grid() const { return grid_; }
  [[nodiscard]] bool test(std::size_t index) const { return cells_[index] != 0; }
  void set(std::size_t index, bool value = true) { cells_[index] = value ? 1 : 0; }

  /// Whether the cell containing p is set (false outside the box).
  [[nodiscard]] bool contains(const Eigen::Vector3d& p) const {
    const auto idx = grid_.locate(p);
    return idx && cells_[*idx] != 0;
  }
  /// Same, after converting p to the grid's coordinate model.
  [[nodiscard]] bool contains(const GroupPoint& p) const;

  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] double measure() const { return static_cast<double>(count()) * grid_.cell_volume(); }
  [[nodiscard]] bool empty() const { return count() == 0; }

  [[nodiscard]] std::span<const std::uint8_t> cells() const { return cells_; }
  [[nodiscard]] std::span<std::uint8_t> cells() { return cells_; }

  /// Tight bounds of the set cells (cell faces), nothing if empty.
  [[nodiscard]] std::optional<Box3> occupied_bounds() const;

 private:
  VoxelGrid grid_;
  std::vector<std::uint8_t> cells_;
};

// Set algebra; operands must share a grid layout.
VoxelSet set_union(const VoxelSet& a, const VoxelSet& b);
VoxelSet set_intersection(const VoxelSet& a, const VoxelSet& b);
std::size_t symmetric_difference_count(const VoxelSet& a, const VoxelSet& b);
double symmetric_difference_measure(const VoxelSet& a, const VoxelSet& b);

/// Morphology with the 3x3x3 cube as structuring element, iterated `steps`
/// times. Cells outside the grid count as empty.
VoxelSet dilate(const VoxelSet& set, int steps = 1);
VoxelSet erode(const VoxelSet& set, int steps = 1);

/// a lies inside the `layers`-fold dilation of b and vice versa.
bool agree_within_layers(const VoxelSet& a, const VoxelSet& b, int layers);

// Binary dump, layout in docs/voxel_format.md.
inline constexpr std::uint32_t kVoxelFormatVersion = 1;
void write_voxel_dump(const std::string& path, const VoxelSet& set);
VoxelSet read_voxel_dump(const std::string& path);
std::vector<std::uint8_t> encode_voxel_dump(const VoxelSet& set);
VoxelSet decode_voxel_dump(std::span<const std::uint8_t> bytes);

}  // namespace heisen
