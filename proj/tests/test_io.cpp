#include <doctest.h>

#include <filesystem>

#include "support.hpp"
#include "vortctl/io.hpp"

using namespace vortctl;
using lattice::ModeSet;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("mode set text") {
    const auto s = io::parse_mode_set("# four modes\n1 0\n-1 0\n\n1 1  # diagonal\n-1 -1\n");
    CHECK(s == ModeSet{{1, 0}, {-1, 0}, {1, 1}, {-1, -1}});
    CHECK(io::parse_mode_set(io::format_mode_set(s)) == s);
    try {
      io::parse_mode_set("1 0\n2 x\n");
      FAIL("expected Parse");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    CHECK(code_of([] { io::parse_mode_set("1 0 4\n"); }) == ErrorCode::Parse);
  }

  TEST_CASE("chain round trip") {
    const auto chain = lattice::saturation_chain(ModeSet{{1, 0}, {-1, 0}, {1, 1}, {-1, -1}}, 5, 20);
    const auto back = io::chain_from_json(io::chain_to_json(chain));
    CHECK(back.levels == chain.levels);
    CHECK(back.status == chain.status);
    CHECK(back.covered_radius == chain.covered_radius);
  }

  TEST_CASE("state csv and json round trip exactly") {
    testing::Gen g(71);
    for (int trial = 0; trial < 10; ++trial) {
      const auto s = g.state(g.integer(1, 6), g.uniform(0.01, 10.0), 1.0);
      CHECK(io::state_from_csv(io::state_to_csv(s, {"t=0"})) == s);
      CHECK(io::state_from_json(io::state_to_json(s)) == s);
      CHECK(io::state_from_json(io::parse_json(io::state_to_json(s).dump(), "mem")) == s);
    }
  }

  TEST_CASE("state csv errors") {
    CHECK(code_of([] { io::state_from_csv("kx,ky,re,im\n1,0,1,zz\n"); }) == ErrorCode::Parse);
    CHECK(code_of([] { io::state_from_csv("# resolution=1\nkx,ky,re,im\n5,0,1,0\n"); }) == ErrorCode::Parse);
  }

  TEST_CASE("program json round trip") {
    testing::Gen g(72);
    const ModeSet S = ModeSet{{1, 0}, {1, 1}}.symmetrized();
    for (int trial = 0; trial < 10; ++trial) {
      const auto p = g.mixed_program(S, 4, 1.0, 2.0, 50.0);
      const auto back = io::program_from_json(io::parse_json(io::program_to_json(p).dump(), "mem"));
      REQUIRE(back.size() == p.size());
      CHECK(back.support() == p.support());
      for (double t : {0.0, 0.13, 0.49, 0.77, 1.0}) {
        const auto a = forcing::evaluate(p, t);
        const auto b = forcing::evaluate(back, t);
        for (const auto& [k, v] : a) CHECK(std::abs(b.at(k) - v) < 1e-12);
      }
    }
  }

  TEST_CASE("parse errors") {
    CHECK(code_of([] { io::parse_json("{\"a\": ", "x.json"); }) == ErrorCode::Parse);
    CHECK(code_of([] { io::read_text("/nonexistent/file.txt"); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("atomic write") {
    const auto dir = std::filesystem::temp_directory_path() / "vortctl_io_test";
    std::filesystem::create_directories(dir);
    io::write_atomic(dir / "a.txt", "one");
    io::write_atomic(dir / "a.txt", "two");
    CHECK(io::read_text(dir / "a.txt") == "two");
    CHECK(!std::filesystem::exists(dir / "a.txt.tmp"));
    std::filesystem::remove_all(dir);
  }
}
