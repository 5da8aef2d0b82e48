#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "vortexswim/io.hpp"
#include "vortexswim/lbm.hpp"

using namespace vortexswim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "vortexswim_unit";
  fs::create_directories(dir);
  return dir / name;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

io::Snapshot random_snapshot(int nx, int ny, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  io::Snapshot s;
  s.nx = nx;
  s.ny = ny;
  s.dx = 0.0625;
  s.t = 1234.5;
  for (auto* v : {&s.rho, &s.ux, &s.uy, &s.wz}) {
    v->resize(std::size_t(nx) * ny);
    for (auto& x : *v) x = n(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("snapshot round trip is bitwise, with and without a polyline") {
  auto s = random_snapshot(7, 5, 3);
  const auto p = scratch("snap_a.vswm");
  io::write_snapshot(p, s);
  auto r = io::read_snapshot(p);
  CHECK(r.nx == 7);
  CHECK(r.ny == 5);
  CHECK(r.dx == s.dx);
  CHECK(r.t == s.t);
  CHECK(bitwise_equal(r.rho, s.rho));
  CHECK(bitwise_equal(r.ux, s.ux));
  CHECK(bitwise_equal(r.uy, s.uy));
  CHECK(bitwise_equal(r.wz, s.wz));
  CHECK_FALSE(r.polyline.has_value());

  s.polyline = std::vector<Vec2>{{1.5, 2.25}, {-3.0, 4.0}, {0.1, 0.2}};
  io::write_snapshot(p, s);
  r = io::read_snapshot(p);
  REQUIRE(r.polyline.has_value());
  REQUIRE(r.polyline->size() == 3);
  CHECK((*r.polyline)[1] == Vec2{-3.0, 4.0});
  CHECK(fs::file_size(p) == 5 + 8 + 16 + 4 * 35 * 8 + 4 + 3 * 16);
  CHECK_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST_CASE("snapshot reader rejects bad magic and truncation") {
  const auto p = scratch("snap_bad.vswm");
  io::write_snapshot(p, random_snapshot(3, 3, 1));
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    f.put('9');
  }
  CHECK_THROWS_AS(io::read_snapshot(p), IoError);

  io::write_snapshot(p, random_snapshot(3, 3, 1));
  fs::resize_file(p, fs::file_size(p) - 9);
  CHECK_THROWS_AS(io::read_snapshot(p), IoError);
  CHECK_THROWS_AS(io::read_snapshot(scratch("does_not_exist.vswm")), IoError);
}

TEST_CASE("snapshot from a macro field carries its vorticity") {
  lbm::MacroField m(6, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) {
      m.rho[m.index(x, y)] = 1.0;
      m.ux[m.index(x, y)] = -0.01 * y;  // shear: w = 0.01
    }
  auto s = io::make_snapshot(m, 10.0, 0.5);
  CHECK(s.dx == 0.5);
  for (double w : s.wz) CHECK(w == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("population files round trip bitwise and keep tau and tick") {
  lbm::DistributionField f(6, 5, 0.6);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (auto& v : f.data()) v = u(rng);
  f.set_tick(4242);
  const auto p = scratch("pop.vswf");
  io::write_populations(p, f);
  auto r = io::read_populations(p);
  CHECK(r.nx == 6);
  CHECK(r.ny == 5);
  CHECK(r.tau == 0.6);
  CHECK(r.tick == 4242);
  CHECK(bitwise_equal(r.populations, std::vector<double>(f.data().begin(), f.data().end())));
  // A snapshot is not a population file.
  io::write_snapshot(p, random_snapshot(2, 2, 0));
  CHECK_THROWS_AS(io::read_populations(p), IoError);
}

TEST_CASE("failed writes leave nothing behind") {
  const auto p = scratch("no_such_dir") / "x" / "snap.vswm";
  CHECK_THROWS_AS(io::write_snapshot(p, random_snapshot(2, 2, 0)), IoError);
  CHECK_FALSE(fs::exists(p));
  auto s = random_snapshot(2, 2, 0);
  s.rho.pop_back();
  const auto q = scratch("mismatch.vswm");
  fs::remove(q);
  CHECK_THROWS_AS(io::write_snapshot(q, s), IoError);
  CHECK_FALSE(fs::exists(q));
  CHECK_FALSE(fs::exists(q.string() + ".tmp"));
}

TEST_CASE("text files are written atomically and read back") {
  const auto p = scratch("t.txt");
  io::write_text_atomic(p, "a=1\nb=2\n");
  CHECK(io::read_text(p) == "a=1\nb=2\n");
}
