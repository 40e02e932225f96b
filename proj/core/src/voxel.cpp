#include "heisen/voxel.hpp"

#include "heisen/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>

namespace heisen {

void VoxelGrid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (resolution[a] <= 0) throw std::invalid_argument("voxel grid resolution must be positive");
    if (!(box.hi[a] > box.lo[a]) || !std::isfinite(box.lo[a]) || !std::isfinite(box.hi[a])) {
      throw std::invalid_argument("voxel grid box is empty or not finite");
    }
  }
}

std::array<int, 3> VoxelGrid::cell(std::size_t index) const {
  const auto nx = static_cast<std::size_t>(resolution[0]);
  const auto ny = static_cast<std::size_t>(resolution[1]);
  return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny), static_cast<int>(index / (nx * ny))};
}

Eigen::Vector3d VoxelGrid::center(std::size_t index) const {
  const auto c = cell(index);
  Eigen::Vector3d p;
  for (int a = 0; a < 3; ++a) p(a) = box.lo[a] + (c[a] + 0.5) * cell_size(a);
  return p;
}

std::optional<std::size_t> VoxelGrid::locate(const Eigen::Vector3d& p) const {
  std::array<int, 3> c{};
  for (int a = 0; a < 3; ++a) {
    if (!(p(a) >= box.lo[a] && p(a) <= box.hi[a])) return std::nullopt;
    c[a] = std::min(resolution[a] - 1, static_cast<int>((p(a) - box.lo[a]) / cell_size(a)));
  }
  return index(c[0], c[1], c[2]);
}

bool VoxelGrid::same_layout(const VoxelGrid& other) const {
  return box.lo == other.box.lo && box.hi == other.box.hi && resolution == other.resolution &&
         model == other.model;
}

VoxelSet::VoxelSet(VoxelGrid grid) : grid_(grid) {
  grid_.validate();
  cells_.assign(grid_.size(), 0);
}

VoxelSet VoxelSet::from_predicate(const VoxelGrid& grid, const std::function<bool(const Eigen::Vector3d&)>& pred,
                                  unsigned threads) {
  VoxelSet set(grid);
  parallel_for(
      set.cells_.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) set.cells_[i] = pred(grid.center(i)) ? 1 : 0;
      },
      threads);
  return set;
}

VoxelSet VoxelSet::full(const VoxelGrid& grid) {
  VoxelSet set(grid);
  std::fill(set.cells_.begin(), set.cells_.end(), 1);
  return set;
}

bool VoxelSet::contains(const GroupPoint& p) const {
  return contains(convert_model(p, grid_.model).coords());
}

std::size_t VoxelSet::count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

std::optional<Box3> VoxelSet::occupied_bounds() const {
  std::array<int, 3> lo{grid_.resolution[0], grid_.resolution[1], grid_.resolution[2]};
  std::array<int, 3> hi{-1, -1, -1};
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (!cells_[i]) continue;
    const auto c = grid_.cell(i);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  if (hi[0] < 0) return std::nullopt;
  Box3 b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = grid_.box.lo[a] + lo[a] * grid_.cell_size(a);
    b.hi[a] = grid_.box.lo[a] + (hi[a] + 1) * grid_.cell_size(a);
  }
  return b;
}

namespace {

void require_same_grid(const VoxelSet& a, const VoxelSet& b) {
  if (!a.grid().same_layout(b.grid())) throw std::invalid_argument("voxel sets live on different grids");
}

template <typename Op>
VoxelSet combine(const VoxelSet& a, const VoxelSet& b, Op op) {
  require_same_grid(a, b);
  VoxelSet out(a.grid());
  auto dst = out.cells();
  const auto lhs = a.cells();
  const auto rhs = b.cells();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = op(lhs[i], rhs[i]);
  return out;
}

// One pass of a 3-cell max (dilate) or min (erode) filter along one axis.
void filter_axis(std::vector<std::uint8_t>& cells, const std::array<int, 3>& res, int axis, bool dilation) {
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(res[0])
                                                       : static_cast<std::size_t>(res[0]) * res[1];
  const int len = res[axis];
  std::vector<std::uint8_t> line(static_cast<std::size_t>(len));
  const std::size_t total = cells.size();
  const std::size_t block = stride * static_cast<std::size_t>(len);
  for (std::size_t base = 0; base < total; base += block) {
    for (std::size_t offset = 0; offset < stride; ++offset) {
      const std::size_t start = base + offset;
      for (int i = 0; i < len; ++i) line[static_cast<std::size_t>(i)] = cells[start + i * stride];
      for (int i = 0; i < len; ++i) {
        const std::uint8_t left = i > 0 ? line[static_cast<std::size_t>(i - 1)] : 0;
        const std::uint8_t right = i + 1 < len ? line[static_cast<std::size_t>(i + 1)] : 0;
        const std::uint8_t mid = line[static_cast<std::size_t>(i)];
        cells[start + i * stride] = dilation ? (left | mid | right) : (left & mid & right);
      }
    }
  }
}

VoxelSet morphology(const VoxelSet& set, int steps, bool dilation) {
  if (steps < 0) throw std::invalid_argument("morphology steps must be nonnegative");
  VoxelSet out = set;
  std::vector<std::uint8_t> cells(out.cells().begin(), out.cells().end());
  for (int s = 0; s < steps; ++s) {
    for (int axis = 0; axis < 3; ++axis) filter_axis(cells, set.grid().resolution, axis, dilation);
  }
  std::copy(cells.begin(), cells.end(), out.cells().begin());
  return out;
}

}  // namespace

VoxelSet set_union(const VoxelSet& a, const VoxelSet& b) {
  return combine(a, b, [](std::uint8_t x, std::uint8_t y) { return static_cast<std::uint8_t>(x | y); });
}

VoxelSet set_intersection(const VoxelSet& a, const VoxelSet& b) {
  return combine(a, b, [](std::uint8_t x, std::uint8_t y) { return static_cast<std::uint8_t>(x & y); });
}

std::size_t symmetric_difference_count(const VoxelSet& a, const VoxelSet& b) {
  require_same_grid(a, b);
  const auto lhs = a.cells();
  const auto rhs = b.cells();
  std::size_t n = 0;
  for (std::size_t i = 0; i < lhs.size(); ++i) n += lhs[i] != rhs[i];
  return n;
}

double symmetric_difference_measure(const VoxelSet& a, const VoxelSet& b) {
  return static_cast<double>(symmetric_difference_count(a, b)) * a.grid().cell_volume();
}

VoxelSet dilate(const VoxelSet& set, int steps) { return morphology(set, steps, true); }
VoxelSet erode(const VoxelSet& set, int steps) { return morphology(set, steps, false); }

bool agree_within_layers(const VoxelSet& a, const VoxelSet& b, int layers) {
  require_same_grid(a, b);
  const VoxelSet grown_a = dilate(a, layers);
  const VoxelSet grown_b = dilate(b, layers);
  const auto ca = a.cells();
  const auto cb = b.cells();
  const auto ga = grown_a.cells();
  const auto gb = grown_b.cells();
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if ((ca[i] && !gb[i]) || (cb[i] && !ga[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Binary dump. All multi-byte fields little-endian.

namespace {

constexpr std::array<char, 4> kMagic{'H', 'V', 'O', 'X'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::array<std::uint8_t, sizeof(T)> raw{};
  std::memcpy(raw.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  out.insert(out.end(), raw.begin(), raw.end());
}

template <typename T>
T take(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  if (offset + sizeof(T) > bytes.size()) throw std::runtime_error("voxel dump truncated");
  std::array<std::uint8_t, sizeof(T)> raw{};
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset), sizeof(T), raw.begin());
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  offset += sizeof(T);
  T value;
  std::memcpy(&value, raw.data(), sizeof(T));
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_voxel_dump(const VoxelSet& set) {
  const VoxelGrid& g = set.grid();
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put<std::uint32_t>(out, kVoxelFormatVersion);
  for (int a = 0; a < 3; ++a) put<double>(out, g.box.lo[a]);
  for (int a = 0; a < 3; ++a) put<double>(out, g.box.hi[a]);
  for (int a = 0; a < 3; ++a) put<std::uint32_t>(out, static_cast<std::uint32_t>(g.resolution[a]));
  out.push_back(static_cast<std::uint8_t>(g.model));
  out.insert(out.end(), 3, 0);
  put<std::uint64_t>(out, set.count());
  const auto cells = set.cells();
  std::vector<std::uint8_t> bitmap((cells.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i]) bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  out.insert(out.end(), bitmap.begin(), bitmap.end());
  return out;
}

VoxelSet decode_voxel_dump(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw std::runtime_error("not a voxel dump (bad magic)");
  }
  std::size_t offset = kMagic.size();
  const auto version = take<std::uint32_t>(bytes, offset);
  if (version != kVoxelFormatVersion) throw std::runtime_error("unsupported voxel dump version");
  VoxelGrid g;
  for (int a = 0; a < 3; ++a) g.box.lo[a] = take<double>(bytes, offset);
  for (int a = 0; a < 3; ++a) g.box.hi[a] = take<double>(bytes, offset);
  for (int a = 0; a < 3; ++a) g.resolution[a] = static_cast<int>(take<std::uint32_t>(bytes, offset));
  const auto tag = take<std::uint8_t>(bytes, offset);
  if (tag > 1) throw std::runtime_error("voxel dump has an unknown model tag");
  g.model = static_cast<Model>(tag);
  offset += 3;
  const auto count = take<std::uint64_t>(bytes, offset);
  VoxelSet set(g);
  auto cells = set.cells();
  if (bytes.size() - offset != (cells.size() + 7) / 8) throw std::runtime_error("voxel dump bitmap size mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = (bytes[offset + i / 8] >> (i % 8)) & 1u;
  if (set.count() != count) throw std::runtime_error("voxel dump count does not match bitmap");
  return set;
}

void write_voxel_dump(const std::string& path, const VoxelSet& set) {
  const auto bytes = encode_voxel_dump(set);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

VoxelSet read_voxel_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_voxel_dump(bytes);
}

}  // namespace heisen
