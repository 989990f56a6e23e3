#include <doctest.h>

#include "support.hpp"
#include "vortctl/lattice.hpp"

using namespace vortctl;
using namespace vortctl::lattice;

namespace {
const ModeSet four_mode{{1, 0}, {-1, 0}, {1, 1}, {-1, -1}};
const ModeSet unit_modes{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
}  // namespace

TEST_SUITE("lattice") {
  TEST_CASE("wedge examples") {
    CHECK(wedge({1, 0}, {1, 1}) == 1);
    CHECK(wedge({1, 0}, {2, 0}) == 0);
    CHECK(wedge({2, 1}, {1, 2}) == 3);
    CHECK(wedge({1, 2}, {2, 1}) == -3);
  }

  TEST_CASE("admissible pair examples") {
    CHECK(admissible_pair({1, 0}, {1, 1}));
    CHECK_FALSE(admissible_pair({1, 0}, {0, 1}));
    CHECK_FALSE(admissible_pair({1, 1}, {2, 2}));
  }

  TEST_CASE("mode set basics") {
    ModeSet s{{2, 1}, {1, 0}, {2, 1}};
    CHECK(s.size() == 2);
    CHECK(s.contains({1, 0}));
    CHECK_FALSE(s.is_symmetric());
    CHECK(s.symmetrized().is_symmetric());
    CHECK(s.symmetrized().size() == 4);
    CHECK_THROWS_AS(s.insert({0, 0}), Error);
    CHECK(ModeSet::ball(1).size() == 4);
    CHECK(ModeSet::ball(2).size() == 12);  // |k|^2 in {1, 2, 4}
    CHECK(four_mode.representatives() == std::vector<ModeIndex>{{1, 0}, {1, 1}});
  }

  TEST_CASE("next level of the 4-mode set") {
    const ModeSet k2 = next_level(four_mode);
    const ModeSet expected = four_mode.united(ModeSet{{2, 1}, {-2, -1}, {0, 1}, {0, -1}});
    CHECK(k2 == expected);
    CHECK(next_level(ModeSet{{1, 0}, {-1, 0}}) == ModeSet{{1, 0}, {-1, 0}});
    CHECK(next_level(ModeSet{}).empty());
  }

  TEST_CASE("saturation chain examples") {
    const auto c = saturation_chain(four_mode, 3, 10);
    CHECK(c.status == ChainStatus::Covered);
    CHECK(c.covered_radius == 3);
    for (const auto& k : ModeSet::ball(3)) CHECK(c.top().contains(k));

    const auto col = saturation_chain(ModeSet{{1, 0}, {-1, 0}}, 2, 10);
    CHECK(col.status == ChainStatus::Stationary);
    CHECK_THROWS_AS(require_covered(col), Error);

    const auto unit = saturation_chain(unit_modes, 2, 10);
    CHECK(unit.status == ChainStatus::Stationary);
    CHECK(unit.top() == unit_modes);
  }

  TEST_CASE("budget exhaustion is reported") {
    const auto c = saturation_chain(four_mode, 10, 2);
    CHECK(c.status == ChainStatus::Budget);
    CHECK(c.levels.size() == 2);
    try {
      require_covered(c);
      FAIL("expected NotSaturating");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotSaturating);
    }
  }

  TEST_CASE("saturating criterion") {
    CHECK(is_saturating_symmetric(four_mode));
    CHECK_FALSE(is_saturating_symmetric(unit_modes));
    try {
      is_saturating_symmetric(ModeSet{{1, 0}, {1, 1}});
      FAIL("expected AsymmetricSet");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AsymmetricSet);
    }
  }

  TEST_CASE("generating pairs") {
    CHECK(find_generating_pair({2, 1}, four_mode) == std::pair<ModeIndex, ModeIndex>{{1, 0}, {1, 1}});
    CHECK(find_generating_pair({0, 1}, four_mode) == std::pair<ModeIndex, ModeIndex>{{-1, 0}, {1, 1}});
    try {
      find_generating_pair({3, 0}, four_mode);
      FAIL("expected NoGeneratingPair");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoGeneratingPair);
    }
  }

  TEST_CASE("level_containing") {
    const auto c = saturation_chain(four_mode, 10, 20);
    CHECK(c.level_containing(four_mode) == 1);
    CHECK(c.level_containing(next_level(four_mode)) == 2);
    CHECK(c.level_containing(ModeSet{{40, 40}}) == 0);
  }
}

TEST_SUITE("lattice properties") {
  TEST_CASE("monotone and symmetry preserving") {
    testing::Gen g(11);
    for (int trial = 0; trial < 200; ++trial) {
      const bool sym = g.coin();
      const ModeSet k = g.mode_set(g.integer(1, 6), 3, sym);
      const ModeSet n = next_level(k);
      CHECK(k.is_subset_of(n));
      if (sym) CHECK(n.is_symmetric());
      // every new mode has an admissible generating pair
      for (const auto& m : n.minus(k)) {
        const auto [a, b] = find_generating_pair(m, k);
        CHECK(a + b == m);
        CHECK(admissible_pair(a, b));
        CHECK(k.contains(a));
        CHECK(k.contains(b));
      }
    }
  }

  TEST_CASE("saturating symmetric sets cover every ball up to radius 10") {
    testing::Gen g(12);
    int saturating = 0;
    for (int trial = 0; trial < 40; ++trial) {
      const ModeSet k = g.mode_set(g.integer(1, 3), 2, true);
      if (!is_saturating_symmetric(k)) continue;
      ++saturating;
      const int R = g.integer(1, 10);
      CHECK(saturation_chain(k, R, 64).status == ChainStatus::Covered);
    }
    CHECK(saturating > 5);
  }

  TEST_CASE("wedge antisymmetry") {
    testing::Gen g(13);
    for (int i = 0; i < 500; ++i) {
      const ModeIndex a = g.mode(20);
      const ModeIndex b = g.mode(20);
      CHECK(wedge(a, b) == -wedge(b, a));
      CHECK(admissible_pair(a, b) == admissible_pair(b, a));
    }
  }
}
