#include "vortctl/forcing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace vortctl::forcing {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double time_slack(double T) { return 1e-12 * std::max(1.0, T); }

void add_mode(ModeField& f, ModeIndex k, Complex v) {
  f[k] += v;
  f[-k] += std::conj(v);
}

}  // namespace

ForcingSegment ForcingSegment::zero(double duration) { return {duration, Zero{}}; }

ForcingSegment ForcingSegment::constant(double duration, ModeField values) {
  return {duration, Constant{std::move(values)}};
}

ForcingSegment ForcingSegment::oscillatory(double duration, std::vector<OscTerm> terms, double omega, double phase) {
  std::map<ModeIndex, Complex> merged;
  for (const auto& t : terms) {
    if (t.mode.is_zero()) throw Error(ErrorCode::InvalidArgument, "oscillatory term on the zero mode");
    if (t.mode.is_canonical()) {
      merged[t.mode] += t.amp;
    } else {
      merged[-t.mode] += std::conj(t.amp);
    }
  }
  Oscillatory osc{{}, omega, phase};
  for (const auto& [k, a] : merged) osc.terms.push_back({k, a});
  return {duration, std::move(osc)};
}

double ForcingSegment::max_l1() const {
  return std::visit(overloaded{
                        [](const Zero&) { return 0.0; },
                        [](const Constant& c) {
                          double s = 0.0;
                          for (const auto& [k, v] : c.values) {
                            if (k.is_canonical()) s += std::abs(v.real()) + std::abs(v.imag());
                          }
                          return s;
                        },
                        [](const Oscillatory& o) {
                          double s = 0.0;
                          for (const auto& t : o.terms) s += std::abs(t.amp.real()) + std::abs(t.amp.imag());
                          return o.omega * s;
                        },
                    },
                    payload);
}

ForcingProgram::ForcingProgram(ModeSet support, std::vector<ForcingSegment> segments) : support_(std::move(support)) {
  if (!support_.is_symmetric()) throw Error(ErrorCode::AsymmetricSet, "asymmetric set: forcing support");
  for (auto& s : segments) append(std::move(s));
}

void ForcingProgram::validate(const ForcingSegment& seg) const {
  if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) {
    throw Error(ErrorCode::InvalidArgument, "segment duration must be positive and finite");
  }
  auto check_mode = [&](ModeIndex k) {
    if (!support_.contains(k)) {
      throw Error(ErrorCode::InvalidArgument, "segment mode " + lattice::to_string(k) + " outside the support");
    }
  };
  std::visit(overloaded{
                 [](const Zero&) {},
                 [&](const Constant& c) {
                   spectral::canonical_half(c.values, ErrorCode::AsymmetricForcing);
                   for (const auto& [k, v] : c.values) {
                     if (v != Complex{}) check_mode(k);
                   }
                 },
                 [&](const Oscillatory& o) {
                   if (!(o.omega > 0.0) || !std::isfinite(o.omega)) {
                     throw Error(ErrorCode::InvalidArgument, "oscillatory omega must be positive");
                   }
                   for (const auto& t : o.terms) check_mode(t.mode);
                 },
             },
             seg.payload);
}

void ForcingProgram::append(ForcingSegment seg) {
  validate(seg);
  if (starts_.empty()) starts_.push_back(0.0);
  starts_.push_back(starts_.back() + seg.duration);
  segments_.push_back(std::move(seg));
}

ForcingProgram ForcingProgram::then(const ForcingProgram& tail) const {
  ForcingProgram out(support_.united(tail.support_), {});
  for (const auto& s : segments_) out.append(s);
  for (const auto& s : tail.segments_) out.append(s);
  return out;
}

ForcingProgram ForcingProgram::with_support(const ModeSet& larger) const {
  return ForcingProgram(support_.united(larger), segments_);
}

std::size_t ForcingProgram::segment_at(double t) const {
  const double T = total_duration();
  if (!std::isfinite(t) || t < -time_slack(T) || t > T + time_slack(T) || segments_.empty()) {
    throw Error(ErrorCode::TimeOutOfRange, "time out of range: t=" + std::to_string(t) +
                                               " outside [0, " + std::to_string(T) + "]");
  }
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
  const std::size_t idx = it == starts_.begin() ? 0 : std::size_t(it - starts_.begin()) - 1;
  return std::min(idx, segments_.size() - 1);
}

bool ForcingProgram::is_piecewise_constant() const {
  return std::all_of(segments_.begin(), segments_.end(), [](const ForcingSegment& s) { return s.is_constant(); });
}

ModeField evaluate(const ForcingProgram& p, double t) {
  if (p.size() == 0) {
    if (std::abs(t) <= time_slack(0.0)) return {};
    p.segment_at(t);  // throws
  }
  const std::size_t i = p.segment_at(t);
  const double local = t - p.start_of(i);
  ModeField out;
  std::visit(overloaded{
                 [](const Zero&) {},
                 [&](const Constant& c) {
                   for (const auto& [k, v] : c.values) {
                     if (v != Complex{}) out[k] = v;
                   }
                 },
                 [&](const Oscillatory& o) {
                   const double c = o.omega * std::cos(o.omega * local + o.phase);
                   for (const auto& term : o.terms) add_mode(out, term.mode, term.amp * c);
                 },
             },
             p.segments()[i].payload);
  return out;
}

namespace {

// Integral of segment `seg` over its first `local` time units, added to `out`.
void add_segment_integral(const ForcingSegment& seg, double local, ModeField& out) {
  std::visit(overloaded{
                 [](const Zero&) {},
                 [&](const Constant& c) {
                   for (const auto& [k, v] : c.values) out[k] += v * local;
                 },
                 [&](const Oscillatory& o) {
                   const double s = std::sin(o.omega * local + o.phase) - std::sin(o.phase);
                   for (const auto& term : o.terms) add_mode(out, term.mode, term.amp * s);
                 },
             },
             seg.payload);
}

}  // namespace

ModeField primitive(const ForcingProgram& p, double t) {
  if (p.size() == 0) {
    if (std::abs(t) <= time_slack(0.0)) return {};
    p.segment_at(t);
  }
  const std::size_t i = p.segment_at(t);
  ModeField out;
  for (std::size_t j = 0; j < i; ++j) add_segment_integral(p.segments()[j], p.segments()[j].duration, out);
  add_segment_integral(p.segments()[i], t - p.start_of(i), out);
  std::erase_if(out, [](const auto& kv) { return kv.second == Complex{}; });
  return out;
}

std::vector<double> to_channels(const Channels& ch, const ModeField& f) {
  for (const auto& [k, v] : f) {
    if (v != Complex{} && !ch.modes().contains(k)) {
      throw Error(ErrorCode::InvalidArgument, "mode " + lattice::to_string(k) + " has no channel");
    }
  }
  return ch.from_field(f);
}

PrimitiveEvaluator::PrimitiveEvaluator(const ForcingProgram& p, const Channels& channels)
    : program_(&p), channels_(&channels) {
  if (!p.support().is_subset_of(channels.modes())) {
    throw Error(ErrorCode::InvalidArgument, "channels do not cover the program support");
  }
  std::vector<double> acc(channels.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    offsets_.push_back(acc);
    segment_into(i, p.segments()[i].duration, acc);
  }
  offsets_.push_back(acc);
}

void PrimitiveEvaluator::segment_into(std::size_t i, double local, std::vector<double>& out) const {
  const ForcingSegment& seg = program_->segments()[i];
  auto add = [&](ModeIndex k, Complex v) {
    // k is canonical for oscillatory terms; constant values list both signs.
    if (!k.is_canonical()) return;
    const std::size_t c = *channels_->channel_of(k, false);
    out[c] += v.real();
    out[c + 1] += v.imag();
  };
  std::visit(overloaded{
                 [](const Zero&) {},
                 [&](const Constant& c) {
                   for (const auto& [k, v] : c.values) add(k, v * local);
                 },
                 [&](const Oscillatory& o) {
                   const double s = std::sin(o.omega * local + o.phase) - std::sin(o.phase);
                   for (const auto& term : o.terms) add(term.mode, term.amp * s);
                 },
             },
             seg.payload);
}

void PrimitiveEvaluator::at_into(double t, std::vector<double>& out) const {
  if (program_->size() == 0) {
    program_->segment_at(t);
  }
  const std::size_t i = program_->segment_at(t);
  out = offsets_[i];
  segment_into(i, t - program_->start_of(i), out);
}

std::vector<double> PrimitiveEvaluator::at(double t) const {
  std::vector<double> out;
  if (program_->size() == 0) {
    if (std::abs(t) > time_slack(0.0)) program_->segment_at(t);
    return std::vector<double>(channels_->size(), 0.0);
  }
  at_into(t, out);
  return out;
}

namespace {

void require_equal_durations(const ForcingProgram& f, const ForcingProgram& g) {
  const double a = f.total_duration(), b = g.total_duration();
  if (std::abs(a - b) > 1e-9 * std::max({1.0, a, b})) {
    throw Error(ErrorCode::DurationMismatch,
                "duration mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

std::vector<double> merged_breakpoints(const ForcingProgram& f, const ForcingProgram& g) {
  std::vector<double> pts{0.0};
  for (std::size_t i = 1; i <= f.size(); ++i) pts.push_back(f.start_of(i));
  for (std::size_t i = 1; i <= g.size(); ++i) pts.push_back(g.start_of(i));
  std::sort(pts.begin(), pts.end());
  const double T = std::max(f.total_duration(), g.total_duration());
  std::vector<double> out;
  for (double t : pts) {
    if (out.empty() || t - out.back() > time_slack(T)) out.push_back(t);
  }
  out.back() = std::min(f.total_duration(), g.total_duration());
  return out;
}

double active_omega(const ForcingProgram& p, double t) {
  if (p.size() == 0) return 0.0;
  const auto& seg = p.segments()[p.segment_at(t)];
  if (const auto* o = std::get_if<Oscillatory>(&seg.payload)) return o->omega;
  return 0.0;
}

}  // namespace

double relaxation_distance(const ForcingProgram& f, const ForcingProgram& g, int grid) {
  if (grid < 1) throw Error(ErrorCode::InvalidArgument, "relaxation grid must be >= 1");
  require_equal_durations(f, g);
  const Channels ch(f.support().united(g.support()));
  const PrimitiveEvaluator pf(f, ch), pg(g, ch);
  const double T = std::min(f.total_duration(), g.total_duration());
  if (T <= 0.0) return 0.0;

  std::vector<double> a, b;
  auto gap = [&](double t) {
    if (f.size() == 0) a.assign(ch.size(), 0.0); else pf.at_into(t, a);
    if (g.size() == 0) b.assign(ch.size(), 0.0); else pg.at_into(t, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };

  struct Candidate {
    double value, lo, hi;
  };
  constexpr std::size_t kKeep = 8;
  std::vector<Candidate> best;
  double result = 0.0;
  auto offer = [&](double value, double lo, double hi) {
    if (best.size() < kKeep) {
      best.push_back({value, lo, hi});
    } else {
      auto worst = std::min_element(best.begin(), best.end(),
                                    [](const Candidate& x, const Candidate& y) { return x.value < y.value; });
      if (value > worst->value) *worst = {value, lo, hi};
    }
  };

  const std::vector<double> pts = merged_breakpoints(f, g);
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double lo = pts[s], hi = pts[s + 1], len = hi - lo;
    const double mid = 0.5 * (lo + hi);
    const double omega = std::max(active_omega(f, mid), active_omega(g, mid));
    const double periods = omega * len / (2.0 * std::numbers::pi);
    const std::size_t n = std::max<std::size_t>(
        {2, std::size_t(std::ceil(grid * len / T)), std::size_t(std::ceil(16.0 * periods))});
    double prev2 = -1.0, prev1 = gap(lo);
    result = std::max(result, prev1);
    for (std::size_t j = 1; j <= n; ++j) {
      const double t = j == n ? hi : lo + len * double(j) / double(n);
      const double cur = gap(t);
      result = std::max(result, cur);
      // prev1 sits at lo + len*(j-1)/n; it is a local sample maximum.
      if (j >= 2 && prev1 >= prev2 && prev1 >= cur) {
        offer(prev1, lo + len * double(j - 2) / double(n), t);
      }
      prev2 = prev1;
      prev1 = cur;
    }
  }

  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (const Candidate& c : best) {
    double x0 = c.lo, x1 = c.hi;
    double u = x1 - phi * (x1 - x0), w = x0 + phi * (x1 - x0);
    double fu = gap(u), fw = gap(w);
    for (int it = 0; it < 80 && x1 - x0 > 1e-15 * std::max(1.0, T); ++it) {
      if (fu > fw) {
        x1 = w;
        w = u;
        fw = fu;
        u = x1 - phi * (x1 - x0);
        fu = gap(u);
      } else {
        x0 = u;
        u = w;
        fu = fw;
        w = x0 + phi * (x1 - x0);
        fw = gap(w);
      }
    }
    result = std::max({result, fu, fw});
  }
  return result;
}

double delta_distance(const ForcingProgram& f, const ForcingProgram& g) {
  if (!f.is_piecewise_constant() || !g.is_piecewise_constant()) {
    throw Error(ErrorCode::NonPiecewiseConstant, "non-piecewise-constant input");
  }
  require_equal_durations(f, g);
  const Channels ch(f.support().united(g.support()));
  const std::vector<double> pts = merged_breakpoints(f, g);
  double measure = 0.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double mid = 0.5 * (pts[s] + pts[s + 1]);
    const auto a = ch.from_field(evaluate(f, mid));
    const auto b = ch.from_field(evaluate(g, mid));
    bool differ = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
      if (std::abs(a[i] - b[i]) > 1e-12 * scale) differ = true;
    }
    if (differ) measure += pts[s + 1] - pts[s];
  }
  return measure;
}

std::pair<double, double> oscillatory_amplitudes(ModeIndex k, ModeIndex m, ModeIndex n, double A) {
  if (m + n != k) {
    throw Error(ErrorCode::InvalidArgument, "oscillatory_amplitudes: m + n must equal k");
  }
  if (!lattice::admissible_pair(m, n)) {
    throw Error(ErrorCode::InadmissiblePair, "inadmissible pair " + lattice::to_string(m) + ", " +
                                                 lattice::to_string(n));
  }
  const double c = double(lattice::wedge(m, n)) * (1.0 / double(m.norm_sq()) - 1.0 / double(n.norm_sq()));
  const double prod = 2.0 * A / c;
  const double am = std::sqrt(std::abs(prod));
  return {am, prod < 0.0 ? -am : am};
}

bool ExtremeSet::in_hull(std::span<const double> v, double rel_tol) const {
  double l1 = 0.0;
  for (double x : v) l1 += std::abs(x);
  return l1 <= amplitude * (1.0 + rel_tol);
}

bool ExtremeSet::is_extreme(std::span<const double> v, double rel_tol) const {
  if (v.size() != dimension) return false;
  std::size_t nonzero = 0;
  for (double x : v) {
    if (x == 0.0) continue;
    ++nonzero;
    if (std::abs(std::abs(x) - amplitude) > rel_tol * amplitude) return false;
  }
  return nonzero == 1;
}

ForcingProgram constant_program(const ModeSet& support, std::span<const double> channel_values, double duration) {
  const Channels ch(support);
  ModeField f = ch.to_field(channel_values);
  ForcingProgram p(support, {});
  p.append(f.empty() ? ForcingSegment::zero(duration) : ForcingSegment::constant(duration, std::move(f)));
  return p;
}

ForcingProgram random_hull_program(const ModeSet& support, double A, double T, int pieces, std::uint64_t seed) {
  if (!(A > 0.0) || !(T > 0.0) || pieces < 1) {
    throw Error(ErrorCode::InvalidArgument, "random_hull_program needs A > 0, T > 0 and pieces >= 1");
  }
  const Channels ch(support);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> cuts{0.0, T};
  for (int i = 1; i < pieces; ++i) cuts.push_back(T * unit(rng));
  std::sort(cuts.begin(), cuts.end());
  ForcingProgram p(support, {});
  for (int i = 0; i < pieces; ++i) {
    const double d = cuts[std::size_t(i) + 1] - cuts[std::size_t(i)];
    // normalized exponentials with a slack coordinate are uniform on the simplex
    std::vector<double> e(ch.size() + 1);
    double sum = 0.0;
    for (double& x : e) sum += (x = expo(rng));
    std::vector<double> v(ch.size());
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = A * e[c] / sum * (unit(rng) < 0.5 ? -1.0 : 1.0);
    if (d > 0.0) p.append(ForcingSegment::constant(d, ch.to_field(v)));
  }
  return p;
}

ForcingProgram chattering_approximation(const ForcingProgram& v, double A, int L, std::size_t zero_channel) {
  if (!(A > 0.0)) throw Error(ErrorCode::InvalidArgument, "chattering amplitude must be positive");
  if (L < 1) throw Error(ErrorCode::InvalidArgument, "chattering window count must be >= 1");
  const Channels ch(v.support());
  if (ch.size() == 0) throw Error(ErrorCode::InvalidArgument, "chattering needs a non-empty support");
  if (zero_channel >= ch.size()) throw Error(ErrorCode::InvalidArgument, "zero channel out of range");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double l1 = v.segments()[i].max_l1();
    if (l1 > A * (1.0 + 1e-9)) {
      throw Error(ErrorCode::OutsideConvexHull, "value outside convex hull: segment " + std::to_string(i) +
                                                    " reaches l1 norm " + std::to_string(l1) + " > A = " +
                                                    std::to_string(A));
    }
  }

  const double T = v.total_duration();
  const PrimitiveEvaluator pe(v, ch);
  auto extreme = [&](std::size_t channel, double sign) {
    const ModeIndex k = ch.mode_of(channel);
    const Complex val = ch.is_imag(channel) ? Complex{0.0, sign * A} : Complex{sign * A, 0.0};
    return ModeField{{k, val}, {-k, std::conj(val)}};
  };

  ForcingProgram out(v.support(), {});
  std::vector<double> prev = pe.at(0.0);
  for (int w = 0; w < L; ++w) {
    const double a = T * double(w) / double(L);
    const double b = w + 1 == L ? T : T * double(w + 1) / double(L);
    const double h = b - a;
    const std::vector<double> next = pe.at(b);

    struct Piece {
      std::size_t channel;
      double sign, length;
    };
    std::vector<Piece> pieces;
    double used = 0.0;
    for (std::size_t j = 0; j < ch.size(); ++j) {
      const double c = (next[j] - prev[j]) / h;
      if (c == 0.0) continue;
      const double len = std::abs(c) / A * h;
      pieces.push_back({j, c > 0 ? 1.0 : -1.0, len});
      used += len;
    }
    if (used > h) {
      for (auto& p : pieces) p.length *= h / used;  // hull tolerance overshoot
      used = h;
    }
    const double rest = h - used;
    if (rest > 1e-14 * h) {
      pieces.push_back({zero_channel, 1.0, 0.5 * rest});
      pieces.push_back({zero_channel, -1.0, 0.5 * rest});
    }
    double t = a;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const bool last = i + 1 == pieces.size();
      const double len = last ? b - t : pieces[i].length;
      if (len <= 1e-14 * std::max(1.0, T)) continue;
      out.append(ForcingSegment::constant(len, extreme(pieces[i].channel, pieces[i].sign)));
      t += len;
    }
    prev = next;
  }
  return out;
}

}  // namespace vortctl::forcing
