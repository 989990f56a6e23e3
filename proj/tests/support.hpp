#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "vortctl/forcing.hpp"
#include "vortctl/lattice.hpp"
#include "vortctl/spectral.hpp"

namespace testing {

using vortctl::forcing::ForcingProgram;
using vortctl::forcing::ForcingSegment;
using vortctl::lattice::ModeIndex;
using vortctl::lattice::ModeSet;
using vortctl::spectral::Complex;
using vortctl::spectral::SpectralState;

// Small deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  bool coin() { return integer(0, 1) == 1; }
  Complex complex(double r) { return {uniform(-r, r), uniform(-r, r)}; }

  ModeIndex mode(int r) {
    for (;;) {
      ModeIndex k{integer(-r, r), integer(-r, r)};
      if (!k.is_zero()) return k;
    }
  }

  ModeSet mode_set(int count, int r, bool symmetric) {
    ModeSet s;
    for (int i = 0; i < count; ++i) {
      const ModeIndex k = mode(r);
      s.insert(k);
      if (symmetric) s.insert(-k);
    }
    return s;
  }

  // Uniform coefficients scaled by |k|^-decay.
  SpectralState state(int resolution, double amp, double decay = 0.0) {
    SpectralState s(resolution);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double w = std::pow(s.basis().norm_sq(i), -0.5 * decay);
      s.data()[i] = amp * w * complex(1.0);
    }
    return s;
  }

  // Piecewise constant with random channel values in [-a, a].
  ForcingProgram constant_program(const ModeSet& support, int pieces, double T, double a) {
    const vortctl::spectral::Channels ch(support);
    std::vector<double> cuts{0.0, T};
    for (int i = 1; i < pieces; ++i) cuts.push_back(uniform(0.05, 0.95) * T);
    std::sort(cuts.begin(), cuts.end());
    ForcingProgram p(support, {});
    for (int i = 0; i < pieces; ++i) {
      std::vector<double> v(ch.size());
      for (double& x : v) x = uniform(-a, a);
      const double d = cuts[std::size_t(i) + 1] - cuts[std::size_t(i)];
      if (d > 0.0) p.append(ForcingSegment::constant(d, ch.to_field(v)));
    }
    return p;
  }

  // Alternating constant and oscillatory segments.
  ForcingProgram mixed_program(const ModeSet& support, int pieces, double T, double a, double omega) {
    const auto reps = support.representatives();
    const vortctl::spectral::Channels ch(support);
    ForcingProgram p(support, {});
    for (int i = 0; i < pieces; ++i) {
      const double d = T / pieces;
      if (i % 2 == 0) {
        std::vector<double> v(ch.size());
        for (double& x : v) x = uniform(-a, a);
        p.append(ForcingSegment::constant(d, ch.to_field(v)));
      } else {
        std::vector<vortctl::forcing::OscTerm> terms;
        for (const auto& k : reps) terms.push_back({k, complex(a)});
        p.append(ForcingSegment::oscillatory(d, terms, omega * uniform(0.5, 1.5), uniform(0.0, 6.28)));
      }
    }
    return p;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Coefficient on any mode, negatives by conjugation.
inline Complex q_of(const SpectralState& s, ModeIndex k) { return s.coeff(k); }

// Unrearranged double sum over ordered pairs m + n = k inside the ball:
// sum (m ^ n) |m|^-2 q_m q_n. Independent of the triad table.
inline Complex naive_nonlinear(const SpectralState& s, ModeIndex k) {
  const int R = s.resolution();
  Complex acc{};
  for (int mx = -R; mx <= R; ++mx) {
    for (int my = -R; my <= R; ++my) {
      const ModeIndex m{mx, my};
      const ModeIndex n = k - m;
      if (m.is_zero() || n.is_zero()) continue;
      if (m.norm_sq() > long(R) * R || n.norm_sq() > long(R) * R) continue;
      const double c = double(vortctl::lattice::wedge(m, n)) / double(m.norm_sq());
      acc += c * q_of(s, m) * q_of(s, n);
    }
  }
  return acc;
}

// Composite Simpson rule on n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

}  // namespace testing
