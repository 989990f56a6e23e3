#include "vortctl/steering.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace vortctl::steering {

using forcing::ForcingSegment;
using spectral::Complex;

namespace {

// <a, b>_0 for states of possibly different resolution; sums over a's modes.
double cross_inner(const SpectralState& a, const SpectralState& b) {
  double acc = 0.0;
  const auto q = a.data();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == Complex{}) continue;
    acc += (q[i] * std::conj(b.coeff(a.basis().mode(i)))).real();
  }
  return 2.0 * acc;
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double l1(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

// ||Q||_0 over the stored modes outside `observed`.
class TailMeter {
 public:
  TailMeter(const spectral::ModeBasis& basis, const ModeSet& observed) {
    for (std::size_t i = 0; i < basis.size(); ++i) {
      if (!observed.contains(basis.mode(i))) idx_.push_back(i);
    }
  }
  double operator()(const SpectralState& s) const {
    double acc = 0.0;
    for (std::size_t i : idx_) acc += std::norm(s.data()[i]);
    return std::sqrt(2.0 * acc);
  }

 private:
  std::vector<std::size_t> idx_;
};

int top_level_for(const SaturationChain& chain, const ModeSet& k_obs) {
  if (chain.levels.empty()) throw Error(ErrorCode::InvalidArgument, "empty saturation chain");
  const int M = chain.level_containing(k_obs);
  if (M == 0) {
    throw Error(ErrorCode::ChainTooShallow, "chain too shallow: observed set is not contained in any of the " +
                                                std::to_string(chain.levels.size()) + " levels");
  }
  return M;
}

void check_config(const SteeringConfig& c) {
  if (!(c.tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  if (!(c.gamma > 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma must exceed 1");
  if (!(c.R >= 0.0)) throw Error(ErrorCode::InvalidArgument, "R must be nonnegative");
  if (!(c.omega > 0.0)) throw Error(ErrorCode::InvalidArgument, "omega must be positive");
  if (c.correction_tau < 0.0) throw Error(ErrorCode::InvalidArgument, "correction_tau must be nonnegative");
  if (c.max_fp_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_fp_iters must be >= 1");
  if (!(c.fp_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "fp_tol must be positive");
  if (c.chatter_windows < 1) throw Error(ErrorCode::InvalidArgument, "chatter_windows must be >= 1");
}

}  // namespace

Projection Projection::coordinate(ModeSet set) {
  if (!set.is_symmetric()) throw Error(ErrorCode::AsymmetricTarget, "asymmetric target set");
  Projection p;
  p.set_ = std::move(set);
  return p;
}

Projection Projection::subspace(std::vector<SpectralState> basis) {
  if (basis.empty()) throw Error(ErrorCode::InvalidArgument, "subspace basis is empty");
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double g = cross_inner(basis[i], basis[j]);
      if (std::abs(g - (i == j ? 1.0 : 0.0)) > 1e-10) {
        throw Error(ErrorCode::InvalidArgument, "subspace basis is not orthonormal (entry " + std::to_string(i) +
                                                    "," + std::to_string(j) + " = " + std::to_string(g) + ")");
      }
    }
  }
  Projection p;
  p.basis_ = std::move(basis);
  return p;
}

std::size_t Projection::dimension() const { return is_coordinate() ? 2 * set_.representatives().size() : basis_.size(); }

std::vector<double> Projection::apply(const SpectralState& s) const {
  if (is_coordinate()) return Channels(set_).observe(s);
  std::vector<double> out;
  for (const auto& e : basis_) out.push_back(cross_inner(e, s));
  return out;
}

SpectralState Projection::project(const SpectralState& s) const {
  if (is_coordinate()) return spectral::project(s, set_);
  SpectralState out(s.basis_ptr());
  for (const auto& e : basis_) {
    const double c = cross_inner(e, s);
    const auto q = e.data();
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] == Complex{}) continue;
      const ModeIndex k = e.basis().mode(i);
      if (s.basis().contains(k)) out.set(k, out.coeff(k) + c * q[i]);
    }
  }
  return out;
}

SpectralState endpoint_map(const SpectralState& state0, const SimParams& params, const ForcingProgram& program,
                           const IntegratorConfig& config) {
  return integrator::advance(state0, params, program, config);
}

std::vector<double> observed_endpoint(const SpectralState& state0, const SimParams& params,
                                      const ForcingProgram& program, const Projection& proj,
                                      const IntegratorConfig& config) {
  return proj.apply(endpoint_map(state0, params, program, config));
}

ForcingProgram base_step_program(const ModeSet& support, const std::vector<double>& p, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  std::vector<double> v(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) v[i] = p[i] / tau;
  return forcing::constant_program(support, v, tau);
}

ForcingProgram correction_program(const ModeSet& support, const std::vector<double>& start,
                                  const std::vector<double>& end, double tau) {
  if (start.size() != end.size()) throw Error(ErrorCode::InvalidArgument, "correction endpoints differ in size");
  std::vector<double> d(start.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = end[i] - start[i];
  return base_step_program(support, d, tau);
}

std::vector<ForcingSegment> cascade_segments(ModeIndex k, ModeIndex m, ModeIndex n, Complex z, double duration,
                                             double omega, double omega_cap) {
  if (m + n != k) throw Error(ErrorCode::InvalidArgument, "cascade pair must sum to the target mode");
  if (!lattice::admissible_pair(m, n)) {
    throw Error(ErrorCode::InadmissiblePair,
                "inadmissible pair " + lattice::to_string(m) + ", " + lattice::to_string(n));
  }
  if (!(duration > 0.0) || !(omega > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "cascade duration and omega must be positive");
  }
  if (omega > omega_cap) {
    throw Error(ErrorCode::InvalidArgument, "cascade omega " + std::to_string(omega) + " exceeds omega_cap " +
                                                std::to_string(omega_cap));
  }
  if (z == Complex{}) return {ForcingSegment::zero(duration)};
  const double c = double(lattice::wedge(m, n)) * (1.0 / double(m.norm_sq()) - 1.0 / double(n.norm_sq()));
  const Complex w = 2.0 * z / c;
  const double r = std::sqrt(std::abs(w));
  const Complex en = std::polar(1.0, std::arg(w));
  const Complex I{0.0, 1.0};

  // Whole periods keep the primitive of every block mean-free.
  const long blocks = 2 * long(std::ceil(omega * duration / (4.0 * std::numbers::pi)));
  // Short segments get exactly two periods, possibly above omega_cap.
  const double omega_seg = 2.0 * std::numbers::pi * double(blocks) / duration;
  const double b = duration / double(blocks);
  std::vector<ForcingSegment> out;
  double used = 0.0;
  for (long j = 0; j < blocks; ++j) {
    const double len = j + 1 == blocks ? duration - used : b;
    used += len;
    const Complex am = j % 2 == 0 ? Complex{r} : I * r;
    const Complex an = j % 2 == 0 ? r * en : -I * r * en;
    out.push_back(ForcingSegment::oscillatory(len, {{m, am}, {n, an}}, omega_seg, 0.0));
  }
  return out;
}

ForcingProgram cascade_program(const ForcingProgram& extended, const ModeSet& k_prev, double omega,
                               double omega_cap) {
  ForcingProgram out(k_prev, {});
  for (std::size_t i = 0; i < extended.size(); ++i) {
    const ForcingSegment& seg = extended.segments()[i];
    if (std::holds_alternative<forcing::Zero>(seg.payload)) {
      out.append(seg);
      continue;
    }
    const auto* cst = std::get_if<forcing::Constant>(&seg.payload);
    if (!cst) throw Error(ErrorCode::SegmentNotExtreme, "segment not extreme-valued: segment " + std::to_string(i) +
                                                            " oscillates");
    std::optional<std::pair<ModeIndex, Complex>> active;
    for (const auto& [k, v] : cst->values) {
      if (!k.is_canonical() || v == Complex{}) continue;
      if (active || (v.real() != 0.0 && v.imag() != 0.0)) {
        throw Error(ErrorCode::SegmentNotExtreme,
                    "segment not extreme-valued: segment " + std::to_string(i) + " drives more than one channel");
      }
      active = {k, v};
    }
    if (!active) {
      out.append(ForcingSegment::zero(seg.duration));
    } else if (k_prev.contains(active->first)) {
      out.append(seg);
    } else {
      const auto [m, n] = lattice::find_generating_pair(active->first, k_prev);
      for (auto& s : cascade_segments(active->first, m, n, active->second, seg.duration, omega, omega_cap)) {
        out.append(std::move(s));
      }
    }
  }
  return out;
}

Synthesis synthesize_parameter(const std::vector<double>& p, const SaturationChain& chain, const ModeSet& k_obs,
                               const SpectralState& state0, const SimParams& params, const SteeringConfig& config) {
  check_config(config);
  const int M = top_level_for(chain, k_obs);
  const ModeSet& top = chain.levels[std::size_t(M - 1)];
  const Channels top_ch(top);
  if (p.size() != top_ch.size()) {
    throw Error(ErrorCode::InvalidArgument, "parameter vector has " + std::to_string(p.size()) +
                                                " entries, top level has " + std::to_string(top_ch.size()) +
                                                " channels");
  }

  ForcingProgram prog = base_step_program(top, p, config.tau);
  for (int j = M; j >= 2; --j) {
    const ModeSet& prev = chain.levels[std::size_t(j - 2)];
    const Channels cur(prog.support());
    std::size_t zero_channel = 0;
    while (zero_channel < cur.size() && !prev.contains(cur.mode_of(zero_channel))) ++zero_channel;
    double A = 0.0;
    int L = config.chatter_windows;
    const std::size_t level_idx = std::size_t(M - j);
    const double omega =
        level_idx < config.level_omegas.size() ? config.level_omegas[level_idx] : config.omega;
    if (j == M) {
      A = std::max(config.gamma * config.R, l1(p)) / config.tau;
    } else {
      // Lower levels see oscillatory input; windows must resolve it.
      for (const auto& s : prog.segments()) A = std::max(A, s.max_l1());
      double omega_in = 0.0;
      for (const auto& s : prog.segments()) {
        if (const auto* o = std::get_if<forcing::Oscillatory>(&s.payload)) omega_in = std::max(omega_in, o->omega);
      }
      L = std::max(L, int(std::ceil(8.0 * omega_in * prog.total_duration() / (2.0 * std::numbers::pi))));
    }
    if (A == 0.0) {
      prog = ForcingProgram(prev, {ForcingSegment::zero(prog.total_duration())});
      continue;
    }
    const ForcingProgram chat = forcing::chattering_approximation(prog, A, L, zero_channel);
    prog = cascade_program(chat, prev, omega, config.integrator.omega_cap);
  }

  const TailMeter tail(state0.basis(), k_obs);
  Synthesis out;
  out.top_level = M;
  out.tail_sup = 0.0;
  auto watch = [&](double, const SpectralState& s, bool) { out.tail_sup = std::max(out.tail_sup, tail(s)); };
  SpectralState wT = integrator::advance(state0, params, prog, config.integrator, watch);

  if (M > 1) {
    const ModeSet& k1 = chain.levels.front();
    const Channels k1_ch(k1);
    const std::vector<double> phi = k1_ch.observe(wT);
    std::vector<double> psi = k1_ch.observe(state0);
    for (std::size_t c = 0; c < k1_ch.size(); ++c) {
      const auto tc = top_ch.channel_of(k1_ch.mode_of(c), k1_ch.is_imag(c));
      if (tc) psi[c] += p[*tc];
    }
    const ForcingProgram corr = correction_program(k1, phi, psi, config.effective_correction_tau());
    wT = integrator::advance(wT, params, corr, config.integrator, watch);
    prog = prog.then(corr);
  }
  out.program = std::move(prog);
  out.final_state = std::move(wT);
  return out;
}

namespace {

struct ParameterMap {
  int M = 1;
  std::vector<std::size_t> obs_to_top;
  std::size_t top_size = 0;
};

ParameterMap parameter_map(const SaturationChain& chain, const ModeSet& k_obs) {
  ParameterMap pm;
  pm.M = top_level_for(chain, k_obs);
  const Channels top_ch(chain.levels[std::size_t(pm.M - 1)]);
  const Channels obs(k_obs);
  pm.top_size = top_ch.size();
  for (std::size_t c = 0; c < obs.size(); ++c) pm.obs_to_top.push_back(*top_ch.channel_of(obs.mode_of(c), obs.is_imag(c)));
  return pm;
}

std::vector<double> initial_parameter(const ParameterMap& pm, const std::vector<double>& target,
                                      const std::vector<double>& obs0) {
  std::vector<double> p(pm.top_size, 0.0);
  for (std::size_t c = 0; c < target.size(); ++c) p[pm.obs_to_top[c]] = target[c] - obs0[c];
  return p;
}

void check_target(const std::vector<double>& target, std::size_t expected) {
  if (target.size() != expected) {
    throw Error(ErrorCode::InvalidArgument, "target has " + std::to_string(target.size()) +
                                                " entries, observed set has " + std::to_string(expected) +
                                                " channels");
  }
  for (double x : target) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "target must be finite");
  }
}

}  // namespace

ForcingProgram synthesize(const std::vector<double>& target, const SaturationChain& chain, const ModeSet& k_obs,
                          const SpectralState& state0, const SimParams& params, const SteeringConfig& config) {
  const Channels obs(k_obs);
  check_target(target, obs.size());
  const ParameterMap pm = parameter_map(chain, k_obs);
  const auto p = initial_parameter(pm, target, obs.observe(state0));
  return synthesize_parameter(p, chain, k_obs, state0, params, config).program;
}

EndpointReport steer_to_target(const std::vector<double>& target, const SaturationChain& chain, const ModeSet& k_obs,
                               const SpectralState& state0, const SimParams& params, const SteeringConfig& config) {
  check_config(config);
  const Channels obs(k_obs);
  check_target(target, obs.size());
  const ParameterMap pm = parameter_map(chain, k_obs);
  const std::vector<double> obs0 = obs.observe(state0);
  std::vector<double> p = initial_parameter(pm, target, obs0);
  const double q0 = TailMeter(state0.basis(), k_obs)(state0);

  EndpointReport best;
  best.error_norm = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  for (int it = 1; it <= config.max_fp_iters; ++it) {
    Synthesis syn = synthesize_parameter(p, chain, k_obs, state0, params, config);
    std::vector<double> achieved = obs.observe(syn.final_state);
    std::vector<double> residual(target.size());
    for (std::size_t c = 0; c < target.size(); ++c) residual[c] = target[c] - achieved[c];
    const double err = l2(residual);
    history.push_back(err);
    if (err < best.error_norm) {
      best.target = target;
      best.achieved = std::move(achieved);
      best.error_norm = err;
      best.iterations = it;
      best.program = std::move(syn.program);
      best.q_tail_growth = std::max(0.0, syn.tail_sup - q0);
      best.final_state = std::move(syn.final_state);
    }
    if (err <= config.fp_tol) {
      best.converged = true;
      best.iterations = it;
      best.error_history = history;
      return best;
    }
    for (std::size_t c = 0; c < target.size(); ++c) p[pm.obs_to_top[c]] += residual[c];
  }
  best.error_history = history;
  throw SteeringFailure("did not converge: best error " + std::to_string(best.error_norm) + " after " +
                            std::to_string(config.max_fp_iters) + " iterations (fp_tol " +
                            std::to_string(config.fp_tol) + ")",
                        std::move(best));
}

double near_identity_defect(const ModeSet& k_obs, const std::vector<std::vector<double>>& displacements, double tau,
                            const SpectralState& state0, const SimParams& params, const IntegratorConfig& config) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  const Channels obs(k_obs);
  const std::vector<double> obs0 = obs.observe(state0);
  double sup = 0.0;
  for (const auto& p : displacements) {
    check_target(p, obs.size());
    const auto got = observed_endpoint(state0, params, base_step_program(k_obs, p, tau), Projection::coordinate(k_obs),
                                       config);
    std::vector<double> d(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) d[c] = got[c] - obs0[c] - p[c];
    sup = std::max(sup, l2(d));
  }
  return sup;
}

AveragingResult averaging_experiment(ModeIndex k, std::pair<ModeIndex, ModeIndex> pair, double A,
                                     const std::vector<double>& omegas, double T, const SpectralState& state0,
                                     const SimParams& params, const IntegratorConfig& config, int samples) {
  const auto [m, n] = pair;
  if (m + n != k) throw Error(ErrorCode::InvalidArgument, "averaging pair must sum to k");
  if (!lattice::admissible_pair(m, n)) {
    throw Error(ErrorCode::InadmissiblePair,
                "inadmissible pair " + lattice::to_string(m) + ", " + lattice::to_string(n));
  }
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "averaging horizon T must be positive");
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");

  const ModeSet k_set = ModeSet{k}.symmetrized();
  const ModeSet pair_set = ModeSet{m, n}.symmetrized();
  ForcingProgram ref(k_set, {});
  if (A == 0.0) {
    ref.append(ForcingSegment::zero(T));
  } else {
    ref.append(ForcingSegment::constant(T, {{k, Complex{A}}, {-k, Complex{A}}}));
  }
  std::vector<double> times;
  for (int i = 0; i <= samples; ++i) times.push_back(T * double(i) / double(samples));
  const auto ref_states = integrator::sample(state0, params, ref, times, config);

  AveragingResult res;
  res.omegas = omegas;
  for (const auto& s : ref_states) res.reference_sup = std::max(res.reference_sup, spectral::sobolev_norm(s, {0}));
  for (double omega : omegas) {
    ForcingProgram prog(pair_set, cascade_segments(k, m, n, Complex{A}, T, omega, config.omega_cap));
    const auto states = integrator::sample(state0, params, prog, times, config);
    double d = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      d = std::max(d, spectral::sobolev_norm(spectral::project_complement(states[i] - ref_states[i], pair_set), {0}));
    }
    res.deviations.push_back(d);
  }
  return res;
}

RxProbeResult rx_continuity_probe(ModeIndex mode, const std::vector<double>& deltas, double T,
                                  const SpectralState& state0, const SimParams& params,
                                  const IntegratorConfig& config, int samples) {
  if (mode == ModeIndex{0, 0}) throw Error(ErrorCode::InvalidArgument, "probe mode must be nonzero");
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "probe horizon T must be positive");
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  const ModeSet support = ModeSet{mode}.symmetrized();
  const ForcingProgram base(support, {ForcingSegment::zero(T)});
  std::vector<double> times;
  for (int i = 0; i <= samples; ++i) times.push_back(T * double(i) / double(samples));
  const auto base_states = integrator::sample(state0, params, base, times, config);

  RxProbeResult res;
  for (double delta : deltas) {
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "probe delta must be positive");
    const double omega = 1.0 / (delta * delta);
    // amp * omega = omega^{1/2}
    const ForcingProgram f(support, {ForcingSegment::oscillatory(T, {{mode, Complex{1.0 / std::sqrt(omega)}}}, omega)});
    const auto states = integrator::sample(state0, params, f, times, config);
    double d = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      d = std::max(d, spectral::sobolev_norm(states[i] - base_states[i], {0}));
    }
    res.deltas.push_back(delta);
    res.omegas.push_back(omega);
    res.rx_distances.push_back(forcing::relaxation_distance(f, base));
    res.deviations.push_back(d);
  }
  return res;
}

SubspaceSetup subspace_setup(const std::vector<SpectralState>& basis_raw, double epsilon) {
  if (basis_raw.empty()) throw Error(ErrorCode::InvalidArgument, "subspace basis is empty");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  const int res = basis_raw.front().resolution();
  for (const auto& b : basis_raw) {
    if (b.resolution() != res) throw Error(ErrorCode::InvalidArgument, "basis vectors differ in resolution");
  }

  std::vector<SpectralState> e;
  for (const auto& raw : basis_raw) {
    const double n0 = spectral::sobolev_norm(raw, {0});
    SpectralState v = raw;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : e) {
        SpectralState proj = u;
        proj *= spectral::inner(v, u);
        v -= proj;
      }
    }
    const double nv = spectral::sobolev_norm(v, {0});
    if (!(n0 > 0.0) || nv <= 1e-10 * n0) {
      throw Error(ErrorCode::DependentBasis, "dependent basis: vector " + std::to_string(e.size()) +
                                                 " lies in the span of the previous ones");
    }
    v *= 1.0 / nv;
    e.push_back(std::move(v));
  }

  SubspaceSetup out;
  std::vector<ModeIndex> kept;
  for (const auto& ei : e) {
    const auto q = ei.data();
    std::vector<std::size_t> order(q.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::norm(q[a]) < std::norm(q[b]); });
    SpectralState bar = ei;
    double dropped = 0.0;
    // The largest coefficient always survives.
    for (std::size_t r = 0; r + 1 < order.size(); ++r) {
      const double w = 2.0 * std::norm(q[order[r]]);
      if (dropped + w > epsilon * epsilon) break;
      dropped += w;
      bar.data()[order[r]] = Complex{};
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (bar.data()[i] != Complex{}) kept.push_back(ei.basis().mode(i));
    }
    out.truncation_error = std::max(out.truncation_error, std::sqrt(dropped));
    out.truncated.push_back(std::move(bar));
  }
  out.support = ModeSet(kept).symmetrized();
  out.projection = Projection::subspace(e);
  for (const auto& bar : out.truncated) {
    out.projection_defect =
        std::max(out.projection_defect, spectral::sobolev_norm(out.projection.project(bar) - bar, {0}));
  }
  const double bound = double(e.size() + 1) * epsilon;
  if (out.truncation_error > epsilon * (1.0 + 1e-12) || out.projection_defect > bound) {
    throw Error(ErrorCode::EpsilonUnattainable, "epsilon unattainable at resolution " + std::to_string(res) +
                                                    ": defect " + std::to_string(out.projection_defect) +
                                                    " exceeds " + std::to_string(bound));
  }
  return out;
}

EndpointReport steer_in_projection(const std::vector<SpectralState>& basis_raw, const std::vector<double>& target,
                                   const SaturationChain& chain, const SpectralState& state0, const SimParams& params,
                                   const SteeringConfig& config, double epsilon) {
  const SubspaceSetup setup = subspace_setup(basis_raw, epsilon);
  const auto& e = setup.projection.basis();
  const std::size_t ell = e.size();
  check_target(target, ell);
  for (const ModeIndex k : setup.support) {
    if (!state0.basis().contains(k)) {
      throw Error(ErrorCode::EpsilonUnattainable, "epsilon unattainable at resolution " +
                                                      std::to_string(state0.resolution()) + ": S needs mode " +
                                                      lattice::to_string(k));
    }
  }

  // Lift: x = Pi_S w0 + sum_j beta_j e_bar_j with <x, e_i>_0 = target_i.
  const SpectralState base = spectral::project(state0, setup.support);
  Eigen::MatrixXd G(ell, ell);
  Eigen::VectorXd rhs(ell);
  for (std::size_t i = 0; i < ell; ++i) {
    rhs(Eigen::Index(i)) = target[i] - cross_inner(e[i], base);
    for (std::size_t j = 0; j < ell; ++j) G(Eigen::Index(i), Eigen::Index(j)) = cross_inner(e[i], setup.truncated[j]);
  }
  const Eigen::VectorXd beta = G.fullPivLu().solve(rhs);
  SpectralState x = base;
  for (std::size_t j = 0; j < ell; ++j) {
    const auto q = setup.truncated[j].data();
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] == Complex{}) continue;
      const ModeIndex k = setup.truncated[j].basis().mode(i);
      x.set(k, x.coeff(k) + beta(Eigen::Index(j)) * q[i]);
    }
  }
  const std::vector<double> x_target = Channels(setup.support).observe(x);

  auto to_l = [&](EndpointReport rep) {
    rep.target = target;
    rep.achieved = setup.projection.apply(rep.final_state);
    std::vector<double> d(ell);
    for (std::size_t i = 0; i < ell; ++i) d[i] = target[i] - rep.achieved[i];
    rep.error_norm = l2(d);
    return rep;
  };
  try {
    return to_l(steer_to_target(x_target, chain, setup.support, state0, params, config));
  } catch (const SteeringFailure& f) {
    throw SteeringFailure(f.what(), to_l(f.report()));
  }
}

std::vector<std::vector<double>> l1_grid(std::size_t dimension, double r, int density) {
  if (r < 0.0) throw Error(ErrorCode::InvalidArgument, "grid radius must be nonnegative");
  if (r == 0.0 || dimension == 0) return {std::vector<double>(dimension, 0.0)};
  if (density < 2) throw Error(ErrorCode::InvalidArgument, "grid_density must be >= 2");
  std::vector<double> axis;
  for (int i = 0; i < density; ++i) axis.push_back(-r + 2.0 * r * double(i) / double(density - 1));
  for (double& a : axis) {
    if (std::abs(a) < 1e-14 * r) a = 0.0;
  }
  std::vector<std::vector<double>> out;
  std::vector<double> cur(dimension);
  const double limit = r * (1.0 + 1e-12);
  auto rec = [&](auto&& self, std::size_t d, double used) -> void {
    if (d == dimension) {
      out.push_back(cur);
      return;
    }
    for (double a : axis) {
      if (used + std::abs(a) > limit) continue;
      cur[d] = a;
      self(self, d + 1, used + std::abs(a));
    }
  };
  rec(rec, 0, 0.0);
  return out;
}

CoverageResult coverage_check(const SaturationChain& chain, const ModeSet& k_obs, double R, int grid_density,
                              const SpectralState& state0, const SimParams& params, const SteeringConfig& config) {
  check_config(config);
  top_level_for(chain, k_obs);
  const Channels obs(k_obs);
  const std::vector<double> obs0 = obs.observe(state0);
  CoverageResult res;
  for (auto& g : l1_grid(obs.size(), 0.5 * R, grid_density)) {
    for (std::size_t c = 0; c < g.size(); ++c) g[c] += obs0[c];
    res.targets.push_back(std::move(g));
  }
  const std::size_t n = res.targets.size();
  res.errors.assign(n, std::numeric_limits<double>::infinity());
  res.iterations.assign(n, 0);
  std::vector<char> ok(n, 0);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const EndpointReport rep = steer_to_target(res.targets[i], chain, k_obs, state0, params, config);
        res.errors[i] = rep.error_norm;
        res.iterations[i] = rep.iterations;
        ok[i] = 1;
      } catch (const SteeringFailure& f) {
        res.errors[i] = f.report().error_norm;
        res.iterations[i] = config.max_fp_iters;
      } catch (const Error&) {
        res.iterations[i] = config.max_fp_iters;
      }
    }
  };
  const int threads = std::max(1, std::min<int>(config.threads, int(n)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    res.converged.push_back(ok[i] != 0);
    hits += ok[i] ? 1 : 0;
  }
  res.fraction = n == 0 ? 1.0 : double(hits) / double(n);
  return res;
}

}  // namespace vortctl::steering
