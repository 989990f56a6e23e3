#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vortctl/spectral.hpp"

using namespace vortctl;
using namespace vortctl::spectral;
using lattice::ModeIndex;
using lattice::ModeSet;

namespace {
const Complex I{0.0, 1.0};

// <a, Delta^-1 b>_0 computed directly from the definition over all modes.
double inner_inv_laplace(const SpectralState& a, const SpectralState& b) {
  double acc = 0.0;
  for (const auto& k : a.basis().modes()) acc += (a.coeff(k) * std::conj(b.coeff(k))).real() / double(k.norm_sq());
  return -acc;
}
}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("basis shape") {
    const auto b = ModeBasis::ball(5);
    CHECK(b->size() * 2 == ModeSet::ball(5).size());
    CHECK(b->modes() == ModeSet::ball(5));
    SpectralState s(5);
    CHECK(s.coeff({0, 0}) == Complex{});
    CHECK(s.coeff({9, 9}) == Complex{});
    CHECK_THROWS_AS(s.set({6, 0}, 1.0), Error);
  }

  TEST_CASE("conjugate symmetry is structural") {
    SpectralState s(3);
    s.set({-2, 1}, {0.3, 0.4});
    CHECK(s.coeff({2, -1}) == Complex{0.3, -0.4});
    CHECK(s.coeff({-2, 1}) == Complex{0.3, 0.4});
  }

  TEST_CASE("single pair vector field") {
    SpectralState s(3);
    s.set({1, 0}, 1.0);
    const auto d = vector_field(s, {0.1});
    CHECK(d.coeff({1, 0}).real() == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(d.coeff({1, 0}).imag() == 0.0);
    CHECK(sobolev_norm(d - SpectralState(3), {0}) == doctest::Approx(0.1 * std::sqrt(2.0)));
  }

  TEST_CASE("triad coefficient on (2,1)") {
    SpectralState s(3);
    s.set({1, 0}, 1.0);
    s.set({1, 1}, 1.0);
    const auto d = vector_field(s, {0.0});
    CHECK(d.coeff({2, 1}).real() == doctest::Approx(0.5));
    CHECK(d.coeff({0, -1}).real() == doctest::Approx(-0.5));
    CHECK(d.coeff({-2, -1}).real() == doctest::Approx(0.5));
    CHECK(std::abs(testing::naive_nonlinear(s, {2, 1}) - d.coeff({2, 1})) < 1e-15);
    CHECK(std::abs(testing::naive_nonlinear(s, {0, -1}) - d.coeff({0, -1})) < 1e-15);
  }

  TEST_CASE("equal-norm pair produces nothing") {
    SpectralState s(3);
    s.set({1, 0}, 1.0);
    s.set({0, 1}, 1.0);
    CHECK(nonlinear_term(s).max_abs() == 0.0);
    CHECK(vector_field(SpectralState(4), {0.3}).max_abs() == 0.0);
  }

  TEST_CASE("nonlinear term matches the double sum on 100 random states") {
    testing::Gen g(21);
    for (int trial = 0; trial < 100; ++trial) {
      const SpectralState s = g.state(5, 1.0);
      const SpectralState n = nonlinear_term(s);
      double scale = 0.0;
      double err = 0.0;
      for (const auto& k : s.basis().modes()) {
        const Complex ref = testing::naive_nonlinear(s, k);
        scale = std::max(scale, std::abs(ref));
        err = std::max(err, std::abs(ref - n.coeff(k)));
      }
      CHECK(err <= 1e-12 * scale);
    }
  }

  TEST_CASE("norm examples") {
    SpectralState s(3);
    s.set({1, 0}, 1.0);
    CHECK(enstrophy(s) == doctest::Approx(2.0));
    CHECK(sobolev_norm(s, {1}) * sobolev_norm(s, {1}) == doctest::Approx(2.0));
    CHECK(sobolev_norm(s, {2}) * sobolev_norm(s, {2}) == doctest::Approx(2.0));
    CHECK(energy(s) == doctest::Approx(2.0));
    SpectralState t(3);
    t.set({2, 1}, 1.0);
    CHECK(sobolev_norm(t, {1}) * sobolev_norm(t, {1}) == doctest::Approx(10.0));
    CHECK(energy(t) == doctest::Approx(0.4));
    const SpectralState z(3);
    CHECK(energy(z) == 0.0);
    CHECK(enstrophy(z) == 0.0);
    CHECK(sobolev_norm(z, {2}) == 0.0);
  }

  TEST_CASE("velocity of 2 cos x1") {
    SpectralState s(2);
    s.set({1, 0}, 1.0);
    const auto v = velocity_from_vorticity(s);
    CHECK(v.u1.max_abs() == 0.0);
    CHECK(std::abs(v.u2.coeff({1, 0}) - (-I)) < 1e-15);
    CHECK(std::abs(v.u2.coeff({-1, 0}) - I) < 1e-15);
    const auto z = velocity_from_vorticity(SpectralState(2));
    CHECK(z.u1.max_abs() == 0.0);
    CHECK(z.u2.max_abs() == 0.0);
  }

  TEST_CASE("velocity identities on a random state") {
    testing::Gen g(22);
    const auto s = g.state(5, 1.0);
    const auto v = velocity_from_vorticity(s);
    for (const auto& k : s.basis().modes()) {
      const Complex div = I * double(k.kx) * v.u1.coeff(k) + I * double(k.ky) * v.u2.coeff(k);
      const Complex curl = I * double(k.kx) * v.u2.coeff(k) - I * double(k.ky) * v.u1.coeff(k);
      CHECK(std::abs(div) < 1e-14);
      CHECK(std::abs(curl - s.coeff(k)) < 1e-14);
    }
  }

  TEST_CASE("projection") {
    testing::Gen g(23);
    const auto s = g.state(4, 1.0);
    CHECK(project(s, s.basis().modes()) == s);
    SpectralState one(4);
    one.set({1, 0}, 1.0);
    CHECK(project(one, ModeSet{{1, 1}, {-1, -1}}).max_abs() == 0.0);
    const ModeSet S{{1, 0}, {-1, 0}, {2, 3}, {-2, -3}};
    CHECK(project(s, S) + project_complement(s, S) == s);
    CHECK(project(project(s, S), S) == project(s, S));
    try {
      project(s, ModeSet{{1, 0}});
      FAIL("expected AsymmetricTarget");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AsymmetricTarget);
    }
  }

  TEST_CASE("asymmetric forcing is rejected") {
    SpectralState s(2);
    try {
      vector_field(s, {}, ModeField{{{1, 0}, 1.0}, {{-1, 0}, 2.0}});
      FAIL("expected AsymmetricForcing");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AsymmetricForcing);
    }
    const auto d = vector_field(s, {}, ModeField{{{1, 0}, {1.0, 2.0}}, {{-1, 0}, {1.0, -2.0}}});
    CHECK(d.coeff({1, 0}) == Complex{1.0, 2.0});
  }

  TEST_CASE("channels") {
    const ModeSet K{{1, 0}, {-1, 0}, {1, 1}, {-1, -1}};
    const Channels ch(K);
    CHECK(ch.size() == 4);
    CHECK(ch.mode_of(2) == ModeIndex{1, 1});
    CHECK(ch.is_imag(3));
    CHECK(*ch.channel_of({1, 1}, false) == 2);
    CHECK_FALSE(ch.channel_of({2, 1}, false).has_value());
    SpectralState s(3);
    s.set({1, 1}, {0.5, -0.25});
    CHECK(ch.observe(s) == std::vector<double>{0, 0, 0.5, -0.25});
    const std::vector<double> v{1, 2, 3, 4};
    const auto f = ch.to_field(v);
    CHECK(f.at({-1, 0}) == Complex{1, -2});
    CHECK(ch.from_field(f) == v);
    SpectralState t(3);
    ch.assign(t, v);
    CHECK(ch.observe(t) == v);
  }

  TEST_CASE("inner product and norms agree") {
    testing::Gen g(24);
    const auto a = g.state(4, 1.0);
    CHECK(inner(a, a) == doctest::Approx(enstrophy(a)));
    CHECK(std::sqrt(inner(a, a)) == doctest::Approx(sobolev_norm(a, {0})));
  }

  TEST_CASE("random decaying state") {
    const auto s = random_decaying_state(5, 0.1, 42);
    const auto t = random_decaying_state(5, 0.1, 42);
    CHECK(s == t);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(std::abs(s.data()[i]) == doctest::Approx(0.1 * std::pow(s.basis().norm_sq(i), -1.5)));
    }
    CHECK_FALSE(s == random_decaying_state(5, 0.1, 43));
  }
}

TEST_SUITE("spectral properties") {
  TEST_CASE("quadratic invariants of the truncated field") {
    testing::Gen g(25);
    for (int trial = 0; trial < 100; ++trial) {
      const int R = g.integer(2, 6);
      const auto s = g.state(R, g.uniform(0.1, 2.0), g.uniform(0.0, 3.0));
      const auto n = nonlinear_term(s);
      const double scale = sobolev_norm(n, {0}) * sobolev_norm(s, {0});
      CHECK(std::abs(inner(n, s)) <= 1e-12 * scale);
      CHECK(std::abs(inner_inv_laplace(n, s)) <= 1e-12 * scale);
    }
  }

  TEST_CASE("enstrophy dissipation identity") {
    testing::Gen g(26);
    for (int trial = 0; trial < 50; ++trial) {
      const auto s = g.state(g.integer(2, 6), 1.0, 1.0);
      const double nu = g.uniform(0.001, 1.0);
      const double lhs = inner(vector_field(s, {nu}), s);
      const double h1 = sobolev_norm(s, {1});
      CHECK(lhs == doctest::Approx(-nu * h1 * h1).epsilon(1e-11));
    }
  }

  TEST_CASE("vector field is linear in forcing") {
    testing::Gen g(27);
    for (int trial = 0; trial < 30; ++trial) {
      const auto s = g.state(4, 1.0);
      const ModeSet K = g.mode_set(3, 3, true);
      const Channels ch(K);
      std::vector<double> v(ch.size());
      for (double& x : v) x = g.uniform(-1, 1);
      const auto d = vector_field(s, {0.05}, ch.to_field(v)) - vector_field(s, {0.05});
      const auto got = ch.observe(d);
      for (std::size_t c = 0; c < v.size(); ++c) CHECK(std::abs(got[c] - v[c]) < 1e-13);
      CHECK(project_complement(d, K).max_abs() < 1e-13);
    }
  }
}
