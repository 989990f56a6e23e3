#include "vortctl/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vortctl/errors.hpp"

namespace vortctl::lattice {

std::string to_string(ModeIndex k) {
  return "(" + std::to_string(k.kx) + "," + std::to_string(k.ky) + ")";
}

ModeSet::ModeSet(std::initializer_list<ModeIndex> modes) : ModeSet(std::vector<ModeIndex>(modes)) {}

ModeSet::ModeSet(std::vector<ModeIndex> modes) : elems_(std::move(modes)) {
  for (const auto& k : elems_) {
    if (k.is_zero()) throw Error(ErrorCode::InvalidArgument, "mode set may not contain the zero mode");
  }
  std::sort(elems_.begin(), elems_.end());
  elems_.erase(std::unique(elems_.begin(), elems_.end()), elems_.end());
}

ModeSet ModeSet::ball(int radius) {
  std::vector<ModeIndex> out;
  const long r2 = long(radius) * radius;
  for (int x = -radius; x <= radius; ++x) {
    for (int y = -radius; y <= radius; ++y) {
      const ModeIndex k{x, y};
      if (!k.is_zero() && k.norm_sq() <= r2) out.push_back(k);
    }
  }
  ModeSet s;
  s.elems_ = std::move(out);  // generated in sorted order
  return s;
}

bool ModeSet::contains(ModeIndex k) const { return std::binary_search(elems_.begin(), elems_.end(), k); }

bool ModeSet::insert(ModeIndex k) {
  if (k.is_zero()) throw Error(ErrorCode::InvalidArgument, "mode set may not contain the zero mode");
  auto it = std::lower_bound(elems_.begin(), elems_.end(), k);
  if (it != elems_.end() && *it == k) return false;
  elems_.insert(it, k);
  return true;
}

bool ModeSet::is_symmetric() const {
  return std::all_of(elems_.begin(), elems_.end(), [&](ModeIndex k) { return contains(-k); });
}

bool ModeSet::is_subset_of(const ModeSet& other) const {
  return std::includes(other.elems_.begin(), other.elems_.end(), elems_.begin(), elems_.end());
}

ModeSet ModeSet::united(const ModeSet& other) const {
  ModeSet out;
  std::set_union(elems_.begin(), elems_.end(), other.elems_.begin(), other.elems_.end(),
                 std::back_inserter(out.elems_));
  return out;
}

ModeSet ModeSet::minus(const ModeSet& other) const {
  ModeSet out;
  std::set_difference(elems_.begin(), elems_.end(), other.elems_.begin(), other.elems_.end(),
                      std::back_inserter(out.elems_));
  return out;
}

ModeSet ModeSet::symmetrized() const {
  std::vector<ModeIndex> all = elems_;
  for (const auto& k : elems_) all.push_back(-k);
  return ModeSet(std::move(all));
}

std::vector<ModeIndex> ModeSet::representatives() const {
  std::vector<ModeIndex> reps;
  for (const auto& k : elems_) {
    if (k.is_canonical()) reps.push_back(k);
  }
  return reps;
}

long ModeSet::max_norm_sq() const {
  long m = 0;
  for (const auto& k : elems_) m = std::max(m, k.norm_sq());
  return m;
}

namespace {

// One application of the level iteration, discarding sums with |k|^2 > bound.
ModeSet grow(const ModeSet& k, long bound, bool& pruned) {
  std::vector<ModeIndex> out = k.elements();
  const auto& e = k.elements();
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      if (!admissible_pair(e[i], e[j])) continue;
      const ModeIndex s = e[i] + e[j];
      if (s.norm_sq() > bound) {
        pruned = true;
        continue;
      }
      out.push_back(s);
    }
  }
  return ModeSet(std::move(out));
}

int covered_radius_of(const ModeSet& s, int radius) {
  int covered = 0;
  for (int r = 1; r <= radius; ++r) {
    const ModeSet b = ModeSet::ball(r);
    if (!b.is_subset_of(s)) break;
    covered = r;
  }
  return covered;
}

}  // namespace

ModeSet next_level(const ModeSet& k) {
  bool pruned = false;
  return grow(k, std::numeric_limits<long>::max(), pruned);
}

std::string to_string(ChainStatus s) {
  switch (s) {
    case ChainStatus::Covered: return "covered";
    case ChainStatus::Stationary: return "stationary";
    case ChainStatus::Budget: return "budget";
  }
  return "budget";
}

int SaturationChain::level_containing(const ModeSet& s) const {
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (s.is_subset_of(levels[j])) return int(j) + 1;
  }
  return 0;
}

SaturationChain saturation_chain(const ModeSet& k1, int radius, int max_levels, const ChainOptions& opts) {
  if (radius < 1) throw Error(ErrorCode::InvalidArgument, "saturation_chain: radius must be >= 1");
  if (max_levels < 1) throw Error(ErrorCode::InvalidArgument, "saturation_chain: max_levels must be >= 1");

  int working = opts.working_radius;
  if (working <= 0) {
    const int gen = int(std::ceil(std::sqrt(double(k1.max_norm_sq()))));
    working = std::max(4 * radius, 2 * gen);
  }
  const long bound = long(working) * working;
  const ModeSet target = ModeSet::ball(radius);

  SaturationChain chain;
  chain.radius = radius;
  chain.levels.push_back(k1);
  while (true) {
    const ModeSet& top = chain.levels.back();
    if (target.is_subset_of(top)) {
      chain.status = ChainStatus::Covered;
      break;
    }
    if (int(chain.levels.size()) >= max_levels) {
      chain.status = ChainStatus::Budget;
      break;
    }
    ModeSet next = grow(top, bound, chain.pruned);
    if (next == top) {
      // A fixed point of the pruned iteration is only conclusive if nothing was pruned.
      chain.status = chain.pruned ? ChainStatus::Budget : ChainStatus::Stationary;
      break;
    }
    chain.levels.push_back(std::move(next));
  }
  chain.covered_radius = covered_radius_of(chain.top(), radius);
  return chain;
}

void require_covered(const SaturationChain& chain) {
  if (chain.status == ChainStatus::Covered) return;
  const std::string why = chain.status == ChainStatus::Stationary
                              ? "chain is stationary without covering the ball (not saturating)"
                              : "level budget exhausted before covering the ball (inconclusive)";
  throw Error(ErrorCode::NotSaturating, "not saturating within budget: " + why);
}

bool is_saturating_symmetric(const ModeSet& k1) {
  if (!k1.is_symmetric()) throw Error(ErrorCode::AsymmetricSet, "asymmetric set");
  const auto& e = k1.elements();
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      if (admissible_pair(e[i], e[j])) return true;
    }
  }
  return false;
}

std::pair<ModeIndex, ModeIndex> find_generating_pair(ModeIndex k, const ModeSet& k_set) {
  for (const ModeIndex m : k_set) {
    const ModeIndex n = k - m;
    if (n.is_zero() || !k_set.contains(n)) continue;
    if (admissible_pair(m, n)) return {m, n};
  }
  throw Error(ErrorCode::NoGeneratingPair, "no generating pair for mode " + to_string(k));
}

}  // namespace vortctl::lattice
