#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace vortctl::lattice {

/// A point of the integer lattice Z^2 (a Fourier wavevector).
struct ModeIndex {
  int kx = 0;
  int ky = 0;

  constexpr long norm_sq() const { return long(kx) * kx + long(ky) * ky; }
  constexpr bool is_zero() const { return kx == 0 && ky == 0; }

  /// One member of each pair {k, -k} is canonical: kx > 0, or kx == 0 and ky > 0.
  constexpr bool is_canonical() const { return kx > 0 || (kx == 0 && ky > 0); }
  constexpr ModeIndex canonical() const { return is_canonical() ? *this : -*this; }

  constexpr ModeIndex operator-() const { return {-kx, -ky}; }
  friend constexpr ModeIndex operator+(ModeIndex a, ModeIndex b) { return {a.kx + b.kx, a.ky + b.ky}; }
  friend constexpr ModeIndex operator-(ModeIndex a, ModeIndex b) { return {a.kx - b.kx, a.ky - b.ky}; }
  friend constexpr auto operator<=>(const ModeIndex&, const ModeIndex&) = default;
};

std::string to_string(ModeIndex k);

/// Exterior product m1*n2 - m2*n1.
constexpr long wedge(ModeIndex m, ModeIndex n) { return long(m.kx) * n.ky - long(m.ky) * n.kx; }

/// Different lengths and not collinear; exact integer test.
constexpr bool admissible_pair(ModeIndex m, ModeIndex n) {
  return m.norm_sq() != n.norm_sq() && wedge(m, n) != 0;
}

/// Finite zero-free set of modes, kept sorted lexicographically by (kx, ky).
class ModeSet {
 public:
  using const_iterator = std::vector<ModeIndex>::const_iterator;

  ModeSet() = default;
  ModeSet(std::initializer_list<ModeIndex> modes);
  explicit ModeSet(std::vector<ModeIndex> modes);

  /// All k with 1 <= |k|^2 <= radius^2.
  static ModeSet ball(int radius);

  bool contains(ModeIndex k) const;
  /// Returns false if already present. Throws on the zero mode.
  bool insert(ModeIndex k);

  std::size_t size() const { return elems_.size(); }
  bool empty() const { return elems_.empty(); }
  const_iterator begin() const { return elems_.begin(); }
  const_iterator end() const { return elems_.end(); }
  const std::vector<ModeIndex>& elements() const { return elems_; }

  bool is_symmetric() const;
  bool is_subset_of(const ModeSet& other) const;
  ModeSet united(const ModeSet& other) const;
  ModeSet minus(const ModeSet& other) const;
  /// Closure under k -> -k.
  ModeSet symmetrized() const;
  /// Canonical members of the set, sorted.
  std::vector<ModeIndex> representatives() const;
  long max_norm_sq() const;

  friend bool operator==(const ModeSet&, const ModeSet&) = default;

 private:
  std::vector<ModeIndex> elems_;
};

/// K ∪ { m + n : m, n ∈ K admissible }.
ModeSet next_level(const ModeSet& k);

enum class ChainStatus { Covered, Stationary, Budget };

std::string to_string(ChainStatus s);

struct SaturationChain {
  std::vector<ModeSet> levels;  ///< levels[0] = K^1, levels[j] = K^{j+1}
  ChainStatus status = ChainStatus::Budget;
  int radius = 0;          ///< requested ball radius
  int covered_radius = 0;  ///< largest r <= radius whose ball lies in the top level
  bool pruned = false;     ///< modes beyond the working radius were discarded

  const ModeSet& top() const { return levels.back(); }
  /// 1-based index M of the first level containing `s`, or 0 if none does.
  int level_containing(const ModeSet& s) const;
};

struct ChainOptions {
  /// Modes with |k| above this radius are discarded while iterating. Zero
  /// selects 4 * radius (at least twice the largest generator).
  int working_radius = 0;
};

/// Iterates next_level until the ball of `radius` is covered, the chain is
/// provably stationary, or `max_levels` levels exist.
SaturationChain saturation_chain(const ModeSet& k1, int radius, int max_levels,
                                 const ChainOptions& opts = {});

/// Throws NotSaturating unless the chain covered its ball.
void require_covered(const SaturationChain& chain);

/// Symmetric-set criterion: two non-collinear members of different lengths.
bool is_saturating_symmetric(const ModeSet& k1);

/// Lexicographically smallest (by m) admissible pair m + n = k with m, n in `k_set`.
std::pair<ModeIndex, ModeIndex> find_generating_pair(ModeIndex k, const ModeSet& k_set);

}  // namespace vortctl::lattice
