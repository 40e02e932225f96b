#include "heisen/voxel.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

using namespace heisen;

namespace {

VoxelSet random_set(const VoxelGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VoxelSet s(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (rng() % 3 == 0) s.set(i);
  }
  return s;
}

}  // namespace

TEST(Voxel, GridIndexingAndLocate) {
  const VoxelGrid g{Box3{{0, 0, 0}, {2, 1, 1}}, {4, 2, 3}, Model::polarized};
  EXPECT_EQ(g.size(), 24u);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.5 * 0.5 * (1.0 / 3.0));
  const std::size_t idx = g.index(3, 1, 2);
  EXPECT_EQ(g.cell(idx), (std::array<int, 3>{3, 1, 2}));
  EXPECT_EQ(g.locate(Eigen::Vector3d(2.0, 1.0, 1.0)), idx);  // upper faces belong to the last cell
  EXPECT_FALSE(g.locate(Eigen::Vector3d(2.01, 0.5, 0.5)).has_value());
  EXPECT_EQ(g.locate(g.center(idx)), idx);
  EXPECT_THROW((VoxelGrid{Box3{{0, 0, 0}, {0, 1, 1}}, {4, 4, 4}, Model::polarized}.validate()), std::invalid_argument);
}

TEST(Voxel, SetAlgebra) {
  const VoxelGrid g{Box3{}, {8, 8, 8}, Model::polarized};
  const VoxelSet a = random_set(g, 1);
  const VoxelSet b = random_set(g, 2);
  const std::size_t both = set_intersection(a, b).count();
  EXPECT_EQ(set_union(a, b).count(), a.count() + b.count() - both);
  EXPECT_EQ(symmetric_difference_count(a, b), a.count() + b.count() - 2 * both);
  EXPECT_DOUBLE_EQ(symmetric_difference_measure(a, b), symmetric_difference_count(a, b) * g.cell_volume());
  const VoxelGrid other{Box3{}, {8, 8, 4}, Model::polarized};
  EXPECT_THROW(set_union(a, VoxelSet(other)), std::invalid_argument);
}

TEST(Voxel, Morphology) {
  const VoxelGrid g{Box3{}, {9, 9, 9}, Model::polarized};
  VoxelSet one(g);
  one.set(g.index(4, 4, 4));
  EXPECT_EQ(dilate(one).count(), 27u);
  EXPECT_EQ(dilate(one, 2).count(), 125u);
  EXPECT_EQ(erode(dilate(one)).count(), 1u);
  EXPECT_EQ(erode(one).count(), 0u);
  // cells outside the grid count as empty
  EXPECT_EQ(erode(VoxelSet::full(g)).count(), 7u * 7u * 7u);
  VoxelSet shifted(g);
  shifted.set(g.index(6, 4, 4));
  EXPECT_TRUE(agree_within_layers(one, shifted, 2));
  EXPECT_FALSE(agree_within_layers(one, shifted, 1));
}

TEST(Voxel, DumpRoundTrip) {
  const VoxelGrid g{Box3{{-0.25, 0.5, 1.0}, {1.0, 1.5, 2.75}}, {13, 7, 5}, Model::symmetric};
  const VoxelSet s = random_set(g, 7);
  const auto bytes = encode_voxel_dump(s);
  ASSERT_EQ(bytes.size(), 4 + 4 + 48 + 12 + 4 + 8 + (g.size() + 7) / 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HVOX");
  const VoxelSet back = decode_voxel_dump(bytes);
  EXPECT_EQ(back.grid().box.lo, g.box.lo);
  EXPECT_EQ(back.grid().box.hi, g.box.hi);
  EXPECT_EQ(back.grid().resolution, g.resolution);
  EXPECT_EQ(back.grid().model, Model::symmetric);
  EXPECT_EQ(symmetric_difference_count(s, back), 0u);

  const auto path = (std::filesystem::temp_directory_path() / "heisen_roundtrip.hvox").string();
  write_voxel_dump(path, s);
  EXPECT_EQ(symmetric_difference_count(read_voxel_dump(path), s), 0u);
  std::remove(path.c_str());
}

TEST(Voxel, DumpRejectsCorruption) {
  const VoxelGrid g{Box3{}, {4, 4, 4}, Model::polarized};
  auto bytes = encode_voxel_dump(random_set(g, 3));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_voxel_dump(bad_magic), std::runtime_error);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_voxel_dump(truncated), std::runtime_error);
  auto wrong_count = bytes;
  wrong_count.back() ^= 0x01;
  EXPECT_THROW(decode_voxel_dump(wrong_count), std::runtime_error);
}
