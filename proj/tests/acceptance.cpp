// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vortctl/forcing.hpp"
#include "vortctl/integrator.hpp"
#include "vortctl/lattice.hpp"
#include "vortctl/spectral.hpp"
#include "vortctl/steering.hpp"

using namespace vortctl;
using forcing::ForcingProgram;
using forcing::ForcingSegment;
using lattice::ModeIndex;
using lattice::ModeSet;
using spectral::Complex;
using spectral::SpectralState;

namespace {

const ModeSet four_mode{{1, 0}, {-1, 0}, {1, 1}, {-1, -1}};
const ModeSet unit_modes{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string fmt(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s + "]";
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] <= v[i - 1])) return false;
  }
  return true;
}

SpectralState small_random(int R, double amp, std::uint64_t seed) { return spectral::random_decaying_state(R, amp, seed); }

void c1(Outcome& o) {
  const auto chain = lattice::saturation_chain(four_mode, 10, 20);
  const bool sat = lattice::is_saturating_symmetric(four_mode);
  o.detail << "status " << lattice::to_string(chain.status) << ", " << chain.levels.size() << " levels, saturating "
           << (sat ? "yes" : "no");
  o.require(chain.status == lattice::ChainStatus::Covered, "ball not covered");
  o.require(chain.levels.size() <= 20, "more than 20 levels");
  o.require(sat, "is_saturating_symmetric");
}

void c2(Outcome& o) {
  const auto chain = lattice::saturation_chain(unit_modes, 10, 20);
  const bool sat = lattice::is_saturating_symmetric(unit_modes);
  o.detail << "status " << lattice::to_string(chain.status) << ", top size " << chain.top().size() << ", saturating "
           << (sat ? "yes" : "no");
  o.require(chain.status == lattice::ChainStatus::Stationary, "chain not stationary");
  o.require(chain.top() == unit_modes, "chain grew");
  o.require(!sat, "is_saturating_symmetric");
}

double inverse_laplacian_pairing(const SpectralState& n, const SpectralState& s) {
  SpectralState inv = s;
  for (std::size_t i = 0; i < inv.size(); ++i) inv.data()[i] *= -1.0 / s.basis().norm_sq(i);
  return spectral::inner(n, inv);
}

void c3(Outcome& o) {
  const auto s0 = small_random(5, 0.5, 1);
  const double e0 = spectral::energy(s0);
  const double z0 = spectral::enstrophy(s0);
  double de = 0.0;
  double dz = 0.0;
  integrator::IntegratorConfig cfg;
  cfg.dt_base = 1e-3;
  const ForcingProgram none(ModeSet{}, {ForcingSegment::zero(1.0)});
  integrator::advance(s0, {0.0}, none, cfg, [&](double, const SpectralState& s, bool) {
    de = std::max(de, std::abs(spectral::energy(s) - e0) / e0);
    dz = std::max(dz, std::abs(spectral::enstrophy(s) - z0) / z0);
  });
  double id1 = 0.0;
  double id2 = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = spectral::random_decaying_state(5, 1.0, 1000 + seed, 2.0);
    const auto n = spectral::nonlinear_term(s);
    id1 = std::max(id1, std::abs(spectral::inner(n, s)));
    id2 = std::max(id2, std::abs(inverse_laplacian_pairing(n, s)));
  }
  o.detail << "energy drift " << fmt(de) << ", enstrophy drift " << fmt(dz) << ", |<N,s>| " << fmt(id1)
           << ", |<N,inv(L) s>| " << fmt(id2);
  o.require(de <= 1e-8 && dz <= 1e-8, "drift above 1e-8");
  o.require(id1 <= 1e-12 && id2 <= 1e-12, "algebraic identity above 1e-12");
}

void c4(Outcome& o) {
  SpectralState s(1);
  const Complex q0{0.7, -0.2};
  s.set({1, 0}, q0);
  const auto s1 = integrator::free_run(s, {1.0}, 1.0);
  const double err = std::abs(s1.coeff({1, 0}) - std::exp(-1.0) * q0);
  o.detail << "|q(1) - exp(-1) q(0)| " << fmt(err);
  o.require(err <= 1e-12, "decay error above 1e-12");
}

void c5(Outcome& o) {
  const ModeSet support = ModeSet{{1, 0}}.symmetrized();
  const ForcingProgram zero(support, {ForcingSegment::zero(1.0)});
  double worst = 0.0;
  for (double w : {1e2, 1e3, 1e4}) {
    const ForcingProgram f(support, {ForcingSegment::oscillatory(1.0, {{{1, 0}, 1.0 / std::sqrt(w)}}, w)});
    worst = std::max(worst, std::abs(forcing::relaxation_distance(f, zero) - 1.0 / std::sqrt(w)));
  }
  o.detail << "max |rx - omega^-1/2| " << fmt(worst);
  o.require(worst <= 1e-6, "relaxation law off by more than 1e-6");
}

void c6(Outcome& o) {
  const double A = 1.0;
  const ModeSet support = ModeSet{{1, 0}, {0, 1}, {1, 1}, {1, -1}}.symmetrized();
  const double kappa = double(spectral::Channels(support).size());
  const std::vector<int> Ls{5, 20, 100};
  std::vector<double> worst(Ls.size(), 0.0);
  bool within = true;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto p = forcing::random_hull_program(support, A, 1.0, 10, 7 + i);
    for (std::size_t l = 0; l < Ls.size(); ++l) {
      const double rx = forcing::relaxation_distance(forcing::chattering_approximation(p, A, Ls[l]), p);
      within = within && rx <= 2.0 * A * std::sqrt(kappa) / Ls[l];
      worst[l] = std::max(worst[l], rx);
    }
  }
  o.detail << "kappa " << kappa << ", max rx per L " << fmt(worst);
  o.require(kappa == 8.0, "kappa != 8");
  o.require(within, "bound 2 A sqrt(kappa) T / L exceeded");
  o.require(strictly_decreasing(worst), "rx not decreasing in L");
}

void c7(Outcome& o) {
  const std::vector<double> omegas{50, 100, 200, 400};
  for (double nu : {0.0, 0.01}) {
    for (const auto& [label, s0] : {std::pair{"rest", SpectralState(6)}, std::pair{"random", small_random(6, 0.1, 3)}}) {
      const auto r = steering::averaging_experiment({2, 1}, {{1, 0}, {1, 1}}, 1.0, omegas, 0.5, s0, {nu});
      const double ratio = r.deviations.back() / r.reference_sup;
      o.detail << " nu=" << nu << "/" << label << ": D " << fmt(r.deviations) << " ratio " << fmt(ratio) << ";";
      o.require(strictly_decreasing(r.deviations), "D not strictly decreasing");
      o.require(ratio <= 0.05, "D(400) above 0.05 sup |w_bar|");
    }
  }
}

void c8(Outcome& o) {
  const auto chain = lattice::saturation_chain(four_mode, 10, 20);
  steering::SteeringConfig cfg;
  cfg.tau = 0.02;
  cfg.R = 1.0;
  cfg.fp_tol = 1e-3;
  cfg.max_fp_iters = 10;
  for (double nu : {0.0, 0.01}) {
    for (const auto& [label, s0] : {std::pair{"rest", SpectralState(6)}, std::pair{"random", small_random(6, 0.1, 5)}}) {
      const auto c = steering::coverage_check(chain, four_mode, cfg.R, 3, s0, {nu}, cfg);
      const double err = *std::max_element(c.errors.begin(), c.errors.end());
      const int iters = *std::max_element(c.iterations.begin(), c.iterations.end());
      o.detail << " nu=" << nu << "/" << label << ": " << c.targets.size() << " targets, fraction " << c.fraction
               << ", max error " << fmt(err) << ", max iters " << iters << ";";
      o.require(c.targets.size() == 9, "grid is not 9 points");
      o.require(c.fraction == 1.0 && err <= 1e-3, "target missed");
      o.require(iters <= 10, "more than 10 iterations");
    }
  }
  const auto s0 = small_random(6, 0.1, 5);
  const auto grid = steering::l1_grid(4, 0.5, 3);
  std::vector<double> defects;
  for (double tau : {0.04, 0.02, 0.01}) defects.push_back(steering::near_identity_defect(four_mode, grid, tau, s0, {0.0}));
  const double r1 = defects[0] / defects[1];
  const double r2 = defects[1] / defects[2];
  o.detail << " defects " << fmt(defects) << ", ratios " << fmt(r1) << " " << fmt(r2);
  o.require(r1 >= 1.5 && r1 <= 2.5 && r2 >= 1.5 && r2 <= 2.5, "defect does not halve with tau");
}

void c9(Outcome& o) {
  const auto chain = lattice::saturation_chain(four_mode, 10, 20);
  const ModeSet k2 = chain.levels.at(1);
  steering::SteeringConfig cfg;
  cfg.tau = 0.1;
  cfg.R = 0.5;
  cfg.omega = 400.0;
  cfg.fp_tol = 1e-2;
  cfg.max_fp_iters = 20;
  o.detail << "K_obs channels " << spectral::Channels(k2).size() << ";";
  for (double nu : {0.0, 0.01}) {
    for (const auto& [label, s0] : {std::pair{"rest", SpectralState(6)}, std::pair{"random", small_random(6, 0.1, 5)}}) {
      const auto c = steering::coverage_check(chain, k2, cfg.R, 5, s0, {nu}, cfg);
      const double err = *std::max_element(c.errors.begin(), c.errors.end());
      o.detail << " nu=" << nu << "/" << label << ": " << c.targets.size() << " targets, fraction " << fmt(c.fraction)
               << ", max error " << fmt(err) << ";";
      o.require(c.fraction >= 0.95, "coverage below 0.95");
    }
  }
}

void c10(Outcome& o) {
  const auto chain = lattice::saturation_chain(four_mode, 10, 20);
  SpectralState e1(6);
  e1.set({1, 0}, 1.0);
  e1.set({2, 1}, 0.7);
  e1.set({1, 2}, 0.03);
  SpectralState e2(6);
  e2.set({0, 1}, 1.0);
  e2.set({1, 1}, Complex{0.0, 0.6});
  e2.set({2, 2}, 0.03);
  const double eps = 0.05;
  steering::SteeringConfig cfg;
  cfg.tau = 0.1;
  cfg.R = 0.6;
  cfg.omega = 400.0;
  cfg.fp_tol = 1e-3;
  const auto setup = steering::subspace_setup({e1, e2}, eps);
  o.detail << "support " << setup.support.size() << " modes, truncation " << fmt(setup.truncation_error) << ";";
  for (double nu : {0.0, 0.01}) {
    double err = 0.0;
    double tail = 0.0;
    const auto grid = steering::l1_grid(2, 0.3, 5);
    for (const auto& t : grid) {
      steering::EndpointReport rep;
      try {
        rep = steering::steer_in_projection({e1, e2}, t, chain, SpectralState(6), {nu}, cfg, eps);
      } catch (const steering::SteeringFailure& f) {
        rep = f.report();
      }
      err = std::max(err, rep.error_norm);
      tail = std::max(tail, rep.q_tail_growth);
    }
    o.detail << " nu=" << nu << ": " << grid.size() << " targets, max error " << fmt(err) << ", max tail growth "
             << fmt(tail) << ";";
    o.require(err <= 5e-2, "projection error above 5e-2");
    o.require(tail <= 3.5 * eps, "tail growth above 3.5 epsilon");
  }
}

void c11(Outcome& o) {
  const std::vector<double> deltas{0.1, 0.05, 0.025};
  for (double nu : {0.0, 0.01}) {
    const auto r = steering::rx_continuity_probe({1, 0}, deltas, 1.0, small_random(5, 0.5, 3), {nu});
    o.detail << " nu=" << nu << ": rx " << fmt(r.rx_distances) << ", deviation " << fmt(r.deviations) << ";";
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      o.require(std::abs(r.rx_distances[i] - deltas[i]) <= 1e-6 * deltas[i], "rx distance differs from delta");
    }
    o.require(nonincreasing(r.deviations), "deviation increases");
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "saturation of the 4-mode set", 1.0, c1},
      {2, "non-saturating unit modes", 1.0, c2},
      {3, "conservation", 60.0, c3},
      {4, "exact linear decay", 1.0, c4},
      {5, "relaxation-norm law", 1.0, c5},
      {6, "chattering bound", 10.0, c6},
      {7, "averaging cascade", 0.0, c7},
      {8, "steering, M=1", 0.0, c8},
      {9, "steering, M=2", 0.0, c9},
      {10, "projection steering", 0.0, c10},
      {11, "rx-continuity probe", 0.0, c11},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0) o.require(secs < c.budget_s, "runtime above " + fmt(c.budget_s) + " s");
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s (%.2f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.str().c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
