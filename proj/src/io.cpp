#include "vortexswim/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vortexswim::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr std::string_view kSnapshotMagic = "VSWM1";
constexpr std::string_view kPopulationMagic = "VSWF1";

}  // namespace

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), tmp_(path.string() + ".tmp"), out_(tmp_, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + tmp_.string() + " for writing");
}

BinaryWriter::~BinaryWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void BinaryWriter::commit() {
  out_.flush();
  if (!out_) throw IoError("write failed for " + path_.string() + " (disk full?)");
  out_.close();
  std::error_code ec;
  std::filesystem::rename(tmp_, path_, ec);
  if (ec) throw IoError("cannot move " + tmp_.string() + " into place: " + ec.message());
  committed_ = true;
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open " + path.string());
}

void BinaryReader::bytes(void* p, std::size_t n) {
  in_.read(static_cast<char*>(p), std::streamsize(n));
  if (!in_) throw IoError("truncated file " + path_.string());
}

void BinaryReader::magic(std::string_view m) {
  std::string got(m.size(), '\0');
  bytes(got.data(), got.size());
  if (got != m) throw IoError(path_.string() + ": bad magic, expected " + std::string(m));
}

Snapshot make_snapshot(const lbm::MacroField& m, double t, double dx) {
  Snapshot s;
  s.nx = std::uint32_t(m.nx);
  s.ny = std::uint32_t(m.ny);
  s.dx = dx;
  s.t = t;
  s.rho = m.rho;
  s.ux = m.ux;
  s.uy = m.uy;
  s.wz = lbm::vorticity(m);
  return s;
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& s) {
  const std::size_t n = std::size_t(s.nx) * s.ny;
  for (const auto* v : {&s.rho, &s.ux, &s.uy, &s.wz})
    if (v->size() != n) throw IoError("snapshot planes do not match nx * ny");
  BinaryWriter w(path);
  w.bytes(kSnapshotMagic.data(), kSnapshotMagic.size());
  w.put(s.nx);
  w.put(s.ny);
  w.put(s.dx);
  w.put(s.t);
  w.doubles(s.rho);
  w.doubles(s.ux);
  w.doubles(s.uy);
  w.doubles(s.wz);
  if (s.polyline) {
    w.put(std::uint32_t(s.polyline->size()));
    for (Vec2 p : *s.polyline) {
      w.put(p.x);
      w.put(p.y);
    }
  }
  w.commit();
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.magic(kSnapshotMagic);
  Snapshot s;
  s.nx = r.get<std::uint32_t>();
  s.ny = r.get<std::uint32_t>();
  s.dx = r.get<double>();
  s.t = r.get<double>();
  const std::size_t n = std::size_t(s.nx) * s.ny;
  s.rho = r.doubles(n);
  s.ux = r.doubles(n);
  s.uy = r.doubles(n);
  s.wz = r.doubles(n);
  if (!r.at_end()) {
    const auto count = r.get<std::uint32_t>();
    std::vector<Vec2> poly(count);
    for (auto& p : poly) {
      p.x = r.get<double>();
      p.y = r.get<double>();
    }
    s.polyline = std::move(poly);
  }
  return s;
}

void write_populations(const std::filesystem::path& path, const lbm::DistributionField& f) {
  BinaryWriter w(path);
  w.bytes(kPopulationMagic.data(), kPopulationMagic.size());
  w.put(std::uint32_t(f.nx()));
  w.put(std::uint32_t(f.ny()));
  w.put(f.tau());
  w.put(std::uint64_t(f.tick()));
  w.bytes(f.data().data(), f.data().size() * sizeof(double));
  w.commit();
}

PopulationFile read_populations(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.magic(kPopulationMagic);
  PopulationFile p;
  p.nx = r.get<std::uint32_t>();
  p.ny = r.get<std::uint32_t>();
  p.tau = r.get<double>();
  p.tick = r.get<std::uint64_t>();
  p.populations = r.doubles(std::size_t(lbm::Lattice::Q) * p.nx * p.ny);
  return p;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& contents) {
  BinaryWriter w(path);
  w.bytes(contents.data(), contents.size());
  w.commit();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace vortexswim::io
