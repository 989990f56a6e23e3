#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vortctl/errors.hpp"
#include "vortctl/lattice.hpp"

namespace vortctl::spectral {

using lattice::ModeIndex;
using lattice::ModeSet;
using Complex = std::complex<double>;

/// Sparse coefficient map over modes. Used at API boundaries for forcing
/// values and velocity spectra; both k and -k are listed.
using ModeField = std::map<ModeIndex, Complex>;

/// One term c * q_m * q_n of the rearranged quadratic sum feeding mode k.
/// Indices refer to canonical representatives; `conj_*` marks that the
/// actual mode is the negative of the representative.
struct Triad {
  std::uint32_t k;
  std::uint32_t m;
  std::uint32_t n;
  bool conj_m;
  bool conj_n;
  double coef;  ///< (m ∧ n)(|m|^-2 - |n|^-2), |m| < |n|
};

/// The set of modes 1 <= |k|^2 <= R^2 together with its triad table.
/// Instances are immutable and shared between states of equal resolution.
class ModeBasis {
 public:
  struct Slot {
    std::size_t index;
    bool conjugate;
  };

  static std::shared_ptr<const ModeBasis> ball(int resolution);

  int resolution() const { return resolution_; }
  std::size_t size() const { return reps_.size(); }
  ModeIndex mode(std::size_t i) const { return reps_[i]; }
  double norm_sq(std::size_t i) const { return norm_sq_[i]; }
  std::optional<Slot> locate(ModeIndex k) const;
  bool contains(ModeIndex k) const { return locate(k).has_value(); }
  const std::vector<Triad>& triads() const { return triads_; }
  /// Full symmetric mode set of the ball.
  ModeSet modes() const;

  explicit ModeBasis(int resolution);

 private:
  int resolution_;
  std::vector<ModeIndex> reps_;
  std::vector<double> norm_sq_;
  std::vector<std::int32_t> grid_;  // (2R+1)^2 lookup: +(i+1) canonical, -(i+1) conjugate, 0 absent
  std::vector<Triad> triads_;
};

/// Vorticity Fourier coefficients q_k on a ball of modes. Only canonical
/// representatives are stored; q_{-k} = conj(q_k) holds by construction and
/// q_0 = 0 is implicit.
class SpectralState {
 public:
  explicit SpectralState(int resolution = 1);
  explicit SpectralState(std::shared_ptr<const ModeBasis> basis);

  int resolution() const { return basis_->resolution(); }
  const ModeBasis& basis() const { return *basis_; }
  const std::shared_ptr<const ModeBasis>& basis_ptr() const { return basis_; }
  std::size_t size() const { return coeffs_.size(); }

  /// q_k for any k; zero outside the ball.
  Complex coeff(ModeIndex k) const;
  /// Sets q_k and, implicitly, q_{-k}. Throws for modes outside the ball.
  void set(ModeIndex k, Complex value);

  std::span<const Complex> data() const { return coeffs_; }
  std::span<Complex> data() { return coeffs_; }

  bool same_shape(const SpectralState& o) const { return basis_ == o.basis_ || resolution() == o.resolution(); }
  bool is_finite() const;
  double max_abs() const;

  SpectralState& operator+=(const SpectralState& o);
  SpectralState& operator-=(const SpectralState& o);
  SpectralState& operator*=(double s);
  friend SpectralState operator+(SpectralState a, const SpectralState& b) { return a += b; }
  friend SpectralState operator-(SpectralState a, const SpectralState& b) { return a -= b; }
  friend SpectralState operator*(double s, SpectralState a) { return a *= s; }

  friend bool operator==(const SpectralState& a, const SpectralState& b) {
    return a.resolution() == b.resolution() && a.coeffs_ == b.coeffs_;
  }

 private:
  std::shared_ptr<const ModeBasis> basis_;
  std::vector<Complex> coeffs_;
};

struct SimParams {
  double nu = 0.0;  ///< viscosity; 0 selects the Euler regime
};

/// Sobolev order for sobolev_norm.
struct NormKind {
  int order = 0;  ///< 0, 1 or 2
};

/// <a, b>_0 = sum_k a_k conj(b_k) over the full ball (a real number).
double inner(const SpectralState& a, const SpectralState& b);
double energy(const SpectralState& s);
double enstrophy(const SpectralState& s);
double sobolev_norm(const SpectralState& s, NormKind kind);

/// Rearranged quadratic term; pairs with |m| = |n| contribute nothing.
SpectralState nonlinear_term(const SpectralState& s);
/// Same as nonlinear_term, writing into a caller-provided buffer (hot loop).
void nonlinear_into(const ModeBasis& basis, std::span<const Complex> q, std::span<Complex> out);

/// Validates v_{-k} = conj(v_k) and returns the canonical half of the field.
/// Throws `code` on violation.
ModeField canonical_half(const ModeField& field, ErrorCode code);

/// dq/dt = N(q) - nu |k|^2 q + v. Throws AsymmetricForcing or InvalidArgument
/// (support outside the resolution).
SpectralState vector_field(const SpectralState& s, const SimParams& params, const ModeField& forcing = {});

struct Velocity {
  SpectralState u1;
  SpectralState u2;
};
/// u1_k = q_k i k2/|k|^2, u2_k = -q_k i k1/|k|^2.
Velocity velocity_from_vorticity(const SpectralState& s);

/// Zeroes coefficients outside `set`. Throws AsymmetricTarget for asymmetric sets.
SpectralState project(const SpectralState& s, const ModeSet& set);
SpectralState project_complement(const SpectralState& s, const ModeSet& set);

/// Random state with |q_k| = amplitude |k|^-decay and uniform random phases.
SpectralState random_decaying_state(int resolution, double amplitude, std::uint64_t seed, double decay = 3.0);

/// Real coordinates of a symmetric mode set: for each canonical representative
/// k (sorted) the pair (Re q_k, Im q_k).
class Channels {
 public:
  explicit Channels(const ModeSet& symmetric_set);

  std::size_t size() const { return 2 * reps_.size(); }
  const std::vector<ModeIndex>& representatives() const { return reps_; }
  const ModeSet& modes() const { return modes_; }
  ModeIndex mode_of(std::size_t channel) const { return reps_[channel / 2]; }
  bool is_imag(std::size_t channel) const { return channel % 2 == 1; }
  std::optional<std::size_t> channel_of(ModeIndex k, bool imag) const;

  std::vector<double> observe(const SpectralState& s) const;
  std::vector<double> from_field(const ModeField& field) const;
  ModeField to_field(std::span<const double> values) const;
  /// Writes the channel values into the ball state (other coefficients untouched).
  void assign(SpectralState& s, std::span<const double> values) const;

 private:
  ModeSet modes_;
  std::vector<ModeIndex> reps_;
};

}  // namespace vortctl::spectral
