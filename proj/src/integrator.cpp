#include "vortctl/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace vortctl::integrator {

using spectral::Complex;
using spectral::ModeBasis;

namespace {

// A segment resolved against one basis: forcing on stored representatives.
struct CompiledSegment {
  bool oscillatory = false;
  double start = 0.0;
  double end = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  std::vector<std::pair<std::size_t, Complex>> entries;  // constant value or oscillation amplitude
};

std::size_t slot_of(const ModeBasis& basis, spectral::ModeIndex k) {
  const auto s = basis.locate(k);
  if (!s) {
    throw Error(ErrorCode::InvalidArgument, "forcing mode " + lattice::to_string(k) + " outside resolution " +
                                                std::to_string(basis.resolution()));
  }
  return s->index;
}

CompiledSegment compile(const ForcingProgram& p, std::size_t i, const ModeBasis& basis, const IntegratorConfig& cfg) {
  CompiledSegment c;
  c.start = p.start_of(i);
  c.end = p.end_of(i);
  const auto& payload = p.segments()[i].payload;
  if (const auto* k = std::get_if<forcing::Constant>(&payload)) {
    for (const auto& [mode, v] : spectral::canonical_half(k->values, ErrorCode::AsymmetricForcing)) {
      if (v != Complex{}) c.entries.emplace_back(slot_of(basis, mode), v);
    }
  } else if (const auto* o = std::get_if<forcing::Oscillatory>(&payload)) {
    // The cap bounds step counts; a segment of at most one period is cheap at any frequency.
    if (o->omega > cfg.omega_cap && o->omega * (c.end - c.start) > 2.0 * std::numbers::pi * (1.0 + 1e-9)) {
      throw Error(ErrorCode::InvalidArgument, "oscillation frequency " + std::to_string(o->omega) +
                                                  " exceeds omega_cap " + std::to_string(cfg.omega_cap));
    }
    c.oscillatory = true;
    c.omega = o->omega;
    c.phase = o->phase;
    for (const auto& term : o->terms) c.entries.emplace_back(slot_of(basis, term.mode), term.amp);
  }
  return c;
}

class Stepper {
 public:
  Stepper(const std::shared_ptr<const ModeBasis>& basis, const SimParams& params, const IntegratorConfig& cfg)
      : basis_(basis), params_(params), cfg_(cfg) {
    if (params.nu < 0.0) throw Error(ErrorCode::InvalidArgument, "nu must be nonnegative");
    const std::size_t n = basis->size();
    k1_.resize(n);
    k2_.resize(n);
    k3_.resize(n);
    k4_.resize(n);
    tmp_.resize(n);
    e_half_.resize(n);
    e_full_.resize(n);
  }

  void set_dt(double h) {
    if (h == h_) return;
    h_ = h;
    for (std::size_t i = 0; i < basis_->size(); ++i) {
      e_half_[i] = std::exp(-params_.nu * basis_->norm_sq(i) * 0.5 * h);
      e_full_[i] = std::exp(-params_.nu * basis_->norm_sq(i) * h);
    }
  }

  // q <- q(t + h); forcing from `seg`.
  void advance(std::span<Complex> q, double t, const CompiledSegment* seg) {
    const double h = h_;
    const std::size_t n = q.size();
    rhs(q, t, seg, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = e_half_[i] * (q[i] + 0.5 * h * k1_[i]);
    rhs(tmp_, t + 0.5 * h, seg, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = e_half_[i] * q[i] + 0.5 * h * k2_[i];
    rhs(tmp_, t + 0.5 * h, seg, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = e_full_[i] * q[i] + h * e_half_[i] * k3_[i];
    rhs(tmp_, t + h, seg, k4_);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = e_full_[i] * q[i] +
             (h / 6.0) * (e_full_[i] * k1_[i] + 2.0 * e_half_[i] * (k2_[i] + k3_[i]) + k4_[i]);
    }
  }

 private:
  void rhs(std::span<const Complex> q, double t, const CompiledSegment* seg, std::vector<Complex>& out) const {
    spectral::nonlinear_into(*basis_, q, out);
    if (!seg) return;
    if (seg->oscillatory) {
      const double c = seg->omega * std::cos(seg->omega * (t - seg->start) + seg->phase);
      for (const auto& [i, a] : seg->entries) out[i] += a * c;
    } else {
      for (const auto& [i, v] : seg->entries) out[i] += v;
    }
  }

  std::shared_ptr<const ModeBasis> basis_;
  SimParams params_;
  IntegratorConfig cfg_;
  double h_ = -1.0;
  std::vector<Complex> k1_, k2_, k3_, k4_, tmp_;
  std::vector<double> e_half_, e_full_;
};

void check_finite(const SpectralState& s, double t, const IntegratorConfig& cfg) {
  for (const Complex c : s.data()) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()) || std::abs(c) > cfg.blowup_threshold) {
      std::ostringstream os;
      os << "non-finite state at t=" << t << " (coefficient magnitude beyond " << cfg.blowup_threshold << ")";
      throw Error(ErrorCode::NonFiniteState, os.str());
    }
  }
}

void check_config(const IntegratorConfig& cfg) {
  if (!(cfg.dt_base > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt_base must be positive");
  if (cfg.oscillation_resolution < 1) throw Error(ErrorCode::InvalidArgument, "oscillation_resolution must be >= 1");
  if (cfg.record_stride < 1) throw Error(ErrorCode::InvalidArgument, "record_stride must be >= 1");
}

double segment_dt(const CompiledSegment& seg, const IntegratorConfig& cfg) {
  if (!seg.oscillatory) return cfg.dt_base;
  const double period = 2.0 * std::numbers::pi / seg.omega;
  return std::min(cfg.dt_base, period / cfg.oscillation_resolution);
}

}  // namespace

SpectralState step(const SpectralState& state, double t, double dt, const SimParams& params,
                   const ForcingProgram& program, const IntegratorConfig& config) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  SpectralState out = state;
  Stepper st(state.basis_ptr(), params, config);
  st.set_dt(dt);
  if (program.size() == 0) {
    st.advance(out.data(), t, nullptr);
  } else {
    const std::size_t i = program.segment_at(t);
    const double slack = 1e-12 * std::max(1.0, program.total_duration());
    if (t + dt > program.end_of(i) + slack) {
      throw Error(ErrorCode::InvalidArgument, "step [" + std::to_string(t) + ", " + std::to_string(t + dt) +
                                                  "] crosses a forcing segment boundary");
    }
    const CompiledSegment seg = compile(program, i, state.basis(), config);
    st.advance(out.data(), t, &seg);
  }
  check_finite(out, t + dt, config);
  return out;
}

namespace {

// Drives the step sequence; `on_step(t, h, seg, before, after, boundary)` sees
// the state before and after each step.
template <class OnStep>
SpectralState drive(const SpectralState& state0, const SimParams& params, const ForcingProgram& program,
                    const IntegratorConfig& config, OnStep&& on_step) {
  check_config(config);
  std::vector<CompiledSegment> segs;
  for (std::size_t i = 0; i < program.size(); ++i) segs.push_back(compile(program, i, state0.basis(), config));

  SpectralState s = state0;
  SpectralState before = state0;
  check_finite(s, 0.0, config);
  Stepper st(s.basis_ptr(), params, config);
  for (const auto& seg : segs) {
    const double d = seg.end - seg.start;
    const auto n = std::max<long>(1, long(std::ceil(d / segment_dt(seg, config) - 1e-9)));
    const double h = d / double(n);
    st.set_dt(h);
    for (long j = 0; j < n; ++j) {
      const double t = seg.start + double(j) * h;
      std::copy(s.data().begin(), s.data().end(), before.data().begin());
      st.advance(s.data(), t, &seg);
      const bool last = j + 1 == n;
      check_finite(s, last ? seg.end : t + h, config);
      on_step(t, last ? seg.end - t : h, seg, before, s, last);
    }
  }
  return s;
}

}  // namespace

std::vector<SpectralState> sample(const SpectralState& state0, const SimParams& params, const ForcingProgram& program,
                                  const std::vector<double>& times, const IntegratorConfig& config) {
  const double T = program.total_duration();
  const double slack = 1e-12 * std::max(1.0, T);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < -slack || times[i] > T + slack || (i > 0 && times[i] < times[i - 1])) {
      throw Error(ErrorCode::TimeOutOfRange, "sample times must be nondecreasing inside [0, T]");
    }
  }
  std::vector<SpectralState> out;
  out.reserve(times.size());
  std::size_t next = 0;
  while (next < times.size() && times[next] <= slack) out.push_back(state0), ++next;
  Stepper aux(state0.basis_ptr(), params, config);
  SpectralState probe = state0;
  drive(state0, params, program, config,
        [&](double t, double h, const CompiledSegment& seg, const SpectralState& before, const SpectralState& after,
            bool) {
          while (next < times.size() && times[next] <= t + h + slack) {
            const double part = times[next] - t;
            if (part >= h - slack) {
              out.push_back(after);
            } else {
              std::copy(before.data().begin(), before.data().end(), probe.data().begin());
              aux.set_dt(part);
              aux.advance(probe.data(), t, &seg);
              out.push_back(probe);
            }
            ++next;
          }
        });
  while (out.size() < times.size()) out.push_back(out.empty() ? state0 : out.back());
  return out;
}

SpectralState advance(const SpectralState& state0, const SimParams& params, const ForcingProgram& program,
                      const IntegratorConfig& config, const StepObserver& observer) {
  if (observer) observer(0.0, state0, false);
  return drive(state0, params, program, config,
               [&](double t, double h, const CompiledSegment&, const SpectralState&, const SpectralState& after,
                   bool boundary) {
                 if (observer) observer(t + h, after, boundary);
               });
}

Trajectory integrate(const SpectralState& state0, const SimParams& params, const ForcingProgram& program,
                     const IntegratorConfig& config) {
  Trajectory tr;
  tr.forcing_ref = std::make_shared<const ForcingProgram>(program);
  long counter = 0;
  advance(state0, params, program, config, [&](double t, const SpectralState& s, bool boundary) {
    const bool first = tr.times.empty();
    if (first || boundary || (++counter % config.record_stride) == 0) {
      if (!first && t <= tr.times.back()) return;
      tr.times.push_back(t);
      tr.states.push_back(s);
    }
  });
  return tr;
}

SpectralState free_run(const SpectralState& state0, const SimParams& params, double duration,
                       const IntegratorConfig& config) {
  ForcingProgram p(lattice::ModeSet{}, {forcing::ForcingSegment::zero(duration)});
  return advance(state0, params, p, config);
}

ConvergenceReport convergence_order(const SpectralState& state0, const SimParams& params,
                                    const ForcingProgram& program, const std::vector<double>& dts,
                                    const IntegratorConfig& config) {
  if (dts.size() < 3) throw Error(ErrorCode::InsufficientLadder, "insufficient dt ladder: need >= 3 step sizes");
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (!(dts[i] > 0.0) || (i > 0 && !(dts[i] < dts[i - 1]))) {
      throw Error(ErrorCode::InsufficientLadder, "insufficient dt ladder: steps must be positive and decreasing");
    }
  }
  auto run = [&](double dt) {
    IntegratorConfig c = config;
    c.dt_base = dt;
    return advance(state0, params, program, c);
  };
  const SpectralState ref = run(dts.back() / 4.0);
  ConvergenceReport rep;
  rep.dts = dts;
  const double scale = std::max(1.0, spectral::sobolev_norm(ref, {0}));
  bool all_tiny = true;
  for (double dt : dts) {
    const double e = spectral::sobolev_norm(run(dt) - ref, {0});
    rep.errors.push_back(e);
    if (e > 1e-13 * scale) all_tiny = false;
  }
  if (all_tiny) {
    rep.indeterminate = true;
    return rep;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double x = std::log(dts[i]);
    const double y = std::log(std::max(rep.errors[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  rep.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return rep;
}

}  // namespace vortctl::integrator
