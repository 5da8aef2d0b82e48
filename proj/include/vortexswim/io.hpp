#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vortexswim/common.hpp"
#include "vortexswim/lbm.hpp"

// Binary artifacts. All little-endian, written via a temporary file and an
// atomic rename; a failed write leaves no partial file behind.
namespace vortexswim::io {

// Raw little-endian writer into path.tmp; commit() renames it into place,
// destruction without commit removes the temporary.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);
  ~BinaryWriter();
  BinaryWriter(const BinaryWriter&) = delete;
  BinaryWriter& operator=(const BinaryWriter&) = delete;

  template <class T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), std::streamsize(n)); }
  void doubles(const std::vector<double>& v) { bytes(v.data(), v.size() * sizeof(double)); }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

// Counterpart; every read throws IoError on truncation.
class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  template <class T>
  T get() {
    T v{};
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* p, std::size_t n);
  std::vector<double> doubles(std::size_t n) {
    std::vector<double> v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
  void magic(std::string_view m);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

// "VSWM1": u32 nx, u32 ny, f64 dx, f64 t, then rho, ux, uy, wz planes
// (row-major f64), optionally followed by u32 count + count (x, y) f64 pairs.
struct Snapshot {
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  double dx = 1.0;
  double t = 0.0;
  std::vector<double> rho, ux, uy, wz;
  std::optional<std::vector<Vec2>> polyline;
};

Snapshot make_snapshot(const lbm::MacroField& macro, double t, double dx = 1.0);
void write_snapshot(const std::filesystem::path& path, const Snapshot& s);
Snapshot read_snapshot(const std::filesystem::path& path);

// "VSWF1": u32 nx, u32 ny, f64 tau, u64 tick, then the nine population planes.
struct PopulationFile {
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  double tau = 0.0;
  std::uint64_t tick = 0;
  std::vector<double> populations;
};

void write_populations(const std::filesystem::path& path, const lbm::DistributionField& field);
PopulationFile read_populations(const std::filesystem::path& path);

// Writes `contents` to `path` atomically.
void write_text_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

}  // namespace vortexswim::io
