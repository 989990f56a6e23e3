#include "vortctl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

namespace vortctl::spectral {

ModeBasis::ModeBasis(int resolution) : resolution_(resolution) {
  if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "resolution must be >= 1");
  const int w = 2 * resolution + 1;
  grid_.assign(std::size_t(w) * w, 0);
  const ModeSet ball = ModeSet::ball(resolution);
  for (const ModeIndex k : ball) {
    if (!k.is_canonical()) continue;
    reps_.push_back(k);
    norm_sq_.push_back(double(k.norm_sq()));
  }
  auto cell = [&](ModeIndex k) -> std::int32_t& {
    return grid_[std::size_t(k.kx + resolution) * w + std::size_t(k.ky + resolution)];
  };
  for (std::size_t i = 0; i < reps_.size(); ++i) {
    cell(reps_[i]) = std::int32_t(i) + 1;
    cell(-reps_[i]) = -(std::int32_t(i) + 1);
  }

  // Every unordered pair {m, n} with m + n = k and |m| < |n| appears once.
  for (std::size_t ki = 0; ki < reps_.size(); ++ki) {
    const ModeIndex k = reps_[ki];
    for (const ModeIndex m : ball) {
      const ModeIndex n = k - m;
      if (n.is_zero()) continue;
      const long m2 = m.norm_sq(), n2 = n.norm_sq();
      if (m2 >= n2 || n2 > long(resolution) * resolution) continue;
      const long wdg = lattice::wedge(m, n);
      if (wdg == 0) continue;
      const auto sm = *locate(m);
      const auto sn = *locate(n);
      triads_.push_back({std::uint32_t(ki), std::uint32_t(sm.index), std::uint32_t(sn.index), sm.conjugate,
                         sn.conjugate, double(wdg) * (1.0 / double(m2) - 1.0 / double(n2))});
    }
  }
}

std::shared_ptr<const ModeBasis> ModeBasis::ball(int resolution) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const ModeBasis>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[resolution];
  if (!slot) slot = std::make_shared<const ModeBasis>(resolution);
  return slot;
}

std::optional<ModeBasis::Slot> ModeBasis::locate(ModeIndex k) const {
  const int r = resolution_;
  if (k.kx < -r || k.kx > r || k.ky < -r || k.ky > r) return std::nullopt;
  const std::int32_t code = grid_[std::size_t(k.kx + r) * (2 * r + 1) + std::size_t(k.ky + r)];
  if (code == 0) return std::nullopt;
  if (code > 0) return Slot{std::size_t(code - 1), false};
  return Slot{std::size_t(-code - 1), true};
}

ModeSet ModeBasis::modes() const { return ModeSet::ball(resolution_); }

SpectralState::SpectralState(int resolution) : SpectralState(ModeBasis::ball(resolution)) {}

SpectralState::SpectralState(std::shared_ptr<const ModeBasis> basis)
    : basis_(std::move(basis)), coeffs_(basis_->size(), Complex{}) {}

Complex SpectralState::coeff(ModeIndex k) const {
  const auto s = basis_->locate(k);
  if (!s) return {};
  return s->conjugate ? std::conj(coeffs_[s->index]) : coeffs_[s->index];
}

void SpectralState::set(ModeIndex k, Complex value) {
  const auto s = basis_->locate(k);
  if (!s) {
    throw Error(ErrorCode::InvalidArgument,
                "mode " + lattice::to_string(k) + " outside resolution " + std::to_string(resolution()));
  }
  coeffs_[s->index] = s->conjugate ? std::conj(value) : value;
}

bool SpectralState::is_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

double SpectralState::max_abs() const {
  double m = 0.0;
  for (const Complex c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

namespace {

void require_same(const SpectralState& a, const SpectralState& b) {
  if (a.resolution() != b.resolution()) {
    throw Error(ErrorCode::InvalidArgument, "states have different resolutions (" +
                                                std::to_string(a.resolution()) + " vs " +
                                                std::to_string(b.resolution()) + ")");
  }
}

}  // namespace

SpectralState& SpectralState::operator+=(const SpectralState& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

SpectralState& SpectralState::operator-=(const SpectralState& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

SpectralState& SpectralState::operator*=(double s) {
  for (Complex& c : coeffs_) c *= s;
  return *this;
}

double inner(const SpectralState& a, const SpectralState& b) {
  require_same(a, b);
  double acc = 0.0;
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] * std::conj(y[i])).real();
  return 2.0 * acc;  // each stored representative stands for k and -k
}

namespace {

double weighted_sum(const SpectralState& s, double power) {
  double acc = 0.0;
  const auto q = s.data();
  for (std::size_t i = 0; i < q.size(); ++i) acc += std::pow(s.basis().norm_sq(i), power) * std::norm(q[i]);
  return 2.0 * acc;
}

}  // namespace

double energy(const SpectralState& s) { return weighted_sum(s, -1.0); }
double enstrophy(const SpectralState& s) { return weighted_sum(s, 0.0); }

double sobolev_norm(const SpectralState& s, NormKind kind) {
  if (kind.order < 0 || kind.order > 2) {
    throw Error(ErrorCode::InvalidArgument, "sobolev order must be 0, 1 or 2");
  }
  return std::sqrt(weighted_sum(s, double(kind.order)));
}

void nonlinear_into(const ModeBasis& basis, std::span<const Complex> q, std::span<Complex> out) {
  std::fill(out.begin(), out.end(), Complex{});
  for (const Triad& t : basis.triads()) {
    const Complex qm = t.conj_m ? std::conj(q[t.m]) : q[t.m];
    const Complex qn = t.conj_n ? std::conj(q[t.n]) : q[t.n];
    out[t.k] += t.coef * qm * qn;
  }
}

SpectralState nonlinear_term(const SpectralState& s) {
  SpectralState out(s.basis_ptr());
  nonlinear_into(s.basis(), s.data(), out.data());
  return out;
}

ModeField canonical_half(const ModeField& field, ErrorCode code) {
  ModeField half;
  for (const auto& [k, v] : field) {
    if (k.is_zero()) throw Error(code, std::string(to_string(code)) + ": zero mode carries a value");
    const auto it = field.find(-k);
    const Complex partner = it == field.end() ? Complex{} : it->second;
    const double scale = std::max({1.0, std::abs(v), std::abs(partner)});
    if (std::abs(partner - std::conj(v)) > 1e-12 * scale) {
      throw Error(code, std::string(to_string(code)) + ": v" + lattice::to_string(-k) +
                            " is not the conjugate of v" + lattice::to_string(k));
    }
    if (k.is_canonical()) half[k] = v;
  }
  return half;
}

SpectralState vector_field(const SpectralState& s, const SimParams& params, const ModeField& forcing) {
  if (params.nu < 0.0) throw Error(ErrorCode::InvalidArgument, "nu must be nonnegative");
  const ModeField half = canonical_half(forcing, ErrorCode::AsymmetricForcing);
  SpectralState out = nonlinear_term(s);
  auto d = out.data();
  const auto q = s.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= params.nu * s.basis().norm_sq(i) * q[i];
  for (const auto& [k, v] : half) {
    const auto slot = s.basis().locate(k);
    if (!slot) {
      throw Error(ErrorCode::InvalidArgument,
                  "forcing mode " + lattice::to_string(k) + " outside resolution " + std::to_string(s.resolution()));
    }
    d[slot->index] += v;
  }
  return out;
}

Velocity velocity_from_vorticity(const SpectralState& s) {
  Velocity u{SpectralState(s.basis_ptr()), SpectralState(s.basis_ptr())};
  const auto q = s.data();
  auto u1 = u.u1.data(), u2 = u.u2.data();
  const Complex I{0.0, 1.0};
  for (std::size_t i = 0; i < q.size(); ++i) {
    const ModeIndex k = s.basis().mode(i);
    const double k2 = s.basis().norm_sq(i);
    u1[i] = q[i] * I * (double(k.ky) / k2);
    u2[i] = -q[i] * I * (double(k.kx) / k2);
  }
  return u;
}

namespace {

SpectralState masked(const SpectralState& s, const ModeSet& set, bool keep_inside) {
  if (!set.is_symmetric()) throw Error(ErrorCode::AsymmetricTarget, "asymmetric target set");
  SpectralState out(s.basis_ptr());
  const auto q = s.data();
  auto o = out.data();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (set.contains(s.basis().mode(i)) == keep_inside) o[i] = q[i];
  }
  return out;
}

}  // namespace

SpectralState project(const SpectralState& s, const ModeSet& set) { return masked(s, set, true); }

SpectralState project_complement(const SpectralState& s, const ModeSet& set) { return masked(s, set, false); }

SpectralState random_decaying_state(int resolution, double amplitude, std::uint64_t seed, double decay) {
  SpectralState s(resolution);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  auto q = s.data();
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double mag = amplitude * std::pow(s.basis().norm_sq(i), -0.5 * decay);
    q[i] = std::polar(mag, phase(rng));
  }
  return s;
}

Channels::Channels(const ModeSet& symmetric_set) : modes_(symmetric_set), reps_(symmetric_set.representatives()) {
  if (!symmetric_set.is_symmetric()) throw Error(ErrorCode::AsymmetricSet, "asymmetric set");
}

std::optional<std::size_t> Channels::channel_of(ModeIndex k, bool imag) const {
  const auto it = std::lower_bound(reps_.begin(), reps_.end(), k);
  if (it == reps_.end() || *it != k) return std::nullopt;
  return 2 * std::size_t(it - reps_.begin()) + (imag ? 1 : 0);
}

std::vector<double> Channels::observe(const SpectralState& s) const {
  std::vector<double> out;
  out.reserve(size());
  for (const ModeIndex k : reps_) {
    const Complex c = s.coeff(k);
    out.push_back(c.real());
    out.push_back(c.imag());
  }
  return out;
}

std::vector<double> Channels::from_field(const ModeField& field) const {
  std::vector<double> out;
  out.reserve(size());
  for (const ModeIndex k : reps_) {
    const auto it = field.find(k);
    const Complex c = it == field.end() ? Complex{} : it->second;
    out.push_back(c.real());
    out.push_back(c.imag());
  }
  return out;
}

ModeField Channels::to_field(std::span<const double> values) const {
  if (values.size() != size()) {
    throw Error(ErrorCode::InvalidArgument, "channel vector has " + std::to_string(values.size()) +
                                                " entries, expected " + std::to_string(size()));
  }
  ModeField f;
  for (std::size_t r = 0; r < reps_.size(); ++r) {
    const Complex c{values[2 * r], values[2 * r + 1]};
    if (c == Complex{}) continue;
    f[reps_[r]] = c;
    f[-reps_[r]] = std::conj(c);
  }
  return f;
}

void Channels::assign(SpectralState& s, std::span<const double> values) const {
  if (values.size() != size()) {
    throw Error(ErrorCode::InvalidArgument, "channel vector has " + std::to_string(values.size()) +
                                                " entries, expected " + std::to_string(size()));
  }
  for (std::size_t r = 0; r < reps_.size(); ++r) s.set(reps_[r], Complex{values[2 * r], values[2 * r + 1]});
}

}  // namespace vortctl::spectral
