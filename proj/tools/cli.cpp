#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "vortctl/errors.hpp"
#include "vortctl/forcing.hpp"
#include "vortctl/integrator.hpp"
#include "vortctl/io.hpp"
#include "vortctl/lattice.hpp"
#include "vortctl/spectral.hpp"
#include "vortctl/steering.hpp"

namespace vortctl::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;
using lattice::ModeIndex;
using lattice::ModeSet;
using spectral::SpectralState;

namespace {

const std::vector<std::string> kExperiments{"saturate", "simulate", "steer", "average", "chatter", "cover", "project"};

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, "config field '" + field + "': " + what);
}

// Typed access to the config document. Every read is echoed, defaults
// included, into resolved() so the manifest holds the full configuration.
class Params {
 public:
  Params(json in, fs::path base) : in_(std::move(in)), base_(std::move(base)) {
    if (!in_.is_object()) bad("<root>", "config must be a JSON object");
  }

  bool has(const std::string& k) const { return in_.contains(k) && !in_.at(k).is_null(); }

  double real(const std::string& k, std::optional<double> def = std::nullopt) {
    used_.insert(k);
    double v = 0.0;
    if (has(k)) {
      const json& j = in_.at(k);
      if (!j.is_number()) bad(k, "expected a number");
      v = j.get<double>();
    } else if (def) {
      v = *def;
    } else {
      bad(k, "required");
    }
    if (!std::isfinite(v)) bad(k, "must be finite");
    out_[k] = v;
    return v;
  }
  double positive(const std::string& k, std::optional<double> def = std::nullopt) {
    const double v = real(k, def);
    if (!(v > 0.0)) bad(k, "must be positive");
    return v;
  }
  double nonneg(const std::string& k, std::optional<double> def = std::nullopt) {
    const double v = real(k, def);
    if (v < 0.0) bad(k, "must be nonnegative");
    return v;
  }

  long integer(const std::string& k, std::optional<long> def, long lo, long hi) {
    used_.insert(k);
    long v = 0;
    if (has(k)) {
      const json& j = in_.at(k);
      if (!j.is_number_integer() && !(j.is_number() && std::floor(j.get<double>()) == j.get<double>())) {
        bad(k, "expected an integer");
      }
      v = j.is_number_integer() ? j.get<long>() : long(j.get<double>());
    } else if (def) {
      v = *def;
    } else {
      bad(k, "required");
    }
    if (v < lo || v > hi) bad(k, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out_[k] = v;
    return v;
  }

  bool boolean(const std::string& k, bool def) {
    used_.insert(k);
    bool v = def;
    if (has(k)) {
      if (!in_.at(k).is_boolean()) bad(k, "expected true or false");
      v = in_.at(k).get<bool>();
    }
    out_[k] = v;
    return v;
  }

  std::string choice(const std::string& k, const std::string& def, const std::vector<std::string>& options) {
    used_.insert(k);
    std::string v = def;
    if (has(k)) {
      if (!in_.at(k).is_string()) bad(k, "expected a string");
      v = in_.at(k).get<std::string>();
    }
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      std::string all;
      for (const auto& o : options) all += (all.empty() ? "" : ", ") + o;
      bad(k, "unknown value '" + v + "' (expected one of " + all + ")");
    }
    out_[k] = v;
    return v;
  }

  std::vector<double> reals(const std::string& k, std::optional<std::vector<double>> def = std::nullopt) {
    used_.insert(k);
    std::vector<double> v;
    if (has(k)) {
      const json& j = in_.at(k);
      if (!j.is_array()) bad(k, "expected an array of numbers");
      for (const auto& x : j) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) bad(k, "expected an array of finite numbers");
        v.push_back(x.get<double>());
      }
    } else if (def) {
      v = *def;
    } else {
      bad(k, "required");
    }
    out_[k] = v;
    return v;
  }

  fs::path path(const std::string& k) {
    used_.insert(k);
    if (!has(k)) bad(k, "required");
    if (!in_.at(k).is_string()) bad(k, "expected a file path");
    return existing(k, in_.at(k).get<std::string>(), true);
  }

  ModeIndex mode(const std::string& k) {
    used_.insert(k);
    if (!has(k)) bad(k, "required");
    try {
      const ModeIndex m = io::mode_from_json(in_.at(k));
      out_[k] = io::mode_to_json(m);
      return m;
    } catch (const Error&) {
      bad(k, "expected [kx, ky] integers");
    }
  }

  // Inline [[kx, ky], ...] or a path to a mode-set text file.
  ModeSet modes(const std::string& k, std::optional<ModeSet> def = std::nullopt) {
    used_.insert(k);
    if (!has(k)) {
      if (!def) bad(k, "required");
      out_[k] = modes_json(*def);
      return *def;
    }
    const json& j = in_.at(k);
    if (j.is_string()) {
      const fs::path p = existing(k, j.get<std::string>(), true);
      try {
        return io::read_mode_set(p);
      } catch (const Error& e) {
        bad(k, e.what());
      }
    }
    if (!j.is_array()) bad(k, "expected [[kx, ky], ...] or a mode-set file path");
    ModeSet s;
    for (const auto& m : j) {
      ModeIndex idx;
      try {
        idx = io::mode_from_json(m);
      } catch (const Error&) {
        bad(k, "expected [[kx, ky], ...] integers");
      }
      if (idx.is_zero()) bad(k, "contains the zero mode");
      s.insert(idx);
    }
    out_[k] = modes_json(s);
    return s;
  }

  // Raw JSON value, recorded verbatim. String members naming files are resolved.
  json value(const std::string& k) {
    used_.insert(k);
    if (!has(k)) bad(k, "required");
    out_[k] = in_.at(k);
    return in_.at(k);
  }

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : fs::absolute(base_ / path).lexically_normal();
  }

  fs::path existing(const std::string& k, const std::string& p, bool record) {
    const fs::path abs = resolve(p);
    if (!fs::exists(abs)) bad(k, "file not found: " + abs.string());
    if (record) out_[k] = abs.string();
    return abs;
  }

  void finish(const std::string& experiment) const {
    for (const auto& [k, v] : in_.items()) {
      (void)v;
      if (!used_.count(k)) bad(k, "not a parameter of '" + experiment + "'");
    }
  }

  const json& resolved() const { return out_; }
  json& resolved() { return out_; }

 private:
  static json modes_json(const ModeSet& s) {
    json a = json::array();
    for (const auto& m : s) a.push_back(io::mode_to_json(m));
    return a;
  }

  json in_;
  fs::path base_;
  json out_ = json::object();
  std::set<std::string> used_;
};

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, std::string_view content) {
    io::write_atomic(dir_ / name, content);
    files_.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct Common {
  long seed = 0;
  std::vector<std::string> meta;
};

spectral::SimParams read_sim(Params& P) { return {P.nonneg("nu", 0.0)}; }

integrator::IntegratorConfig read_integrator(Params& P) {
  integrator::IntegratorConfig c;
  c.dt_base = P.positive("dt_base", c.dt_base);
  c.oscillation_resolution = int(P.integer("oscillation_resolution", c.oscillation_resolution, 4, 100000));
  c.record_stride = int(P.integer("record_stride", c.record_stride, 1, 100000000));
  c.omega_cap = P.positive("omega_cap", c.omega_cap);
  c.blowup_threshold = P.positive("blowup_threshold", c.blowup_threshold);
  return c;
}

// "state" (file) wins over "initial" = rest | random.
SpectralState read_initial(Params& P, long default_resolution, const Common& common) {
  if (P.has("state")) {
    const fs::path p = P.path("state");
    SpectralState s = [&] {
      try {
        return io::read_state(p);
      } catch (const Error& e) {
        bad("state", e.what());
      }
    }();
    if (P.has("resolution") && P.integer("resolution", std::nullopt, 1, 64) != s.resolution()) {
      bad("resolution", "differs from the resolution of the state file");
    }
    P.resolved()["resolution"] = s.resolution();
    return s;
  }
  const int R = int(P.integer("resolution", default_resolution, 1, 64));
  const std::string kind = P.choice("initial", "rest", {"rest", "random"});
  if (kind == "rest") return SpectralState(R);
  const double amp = P.nonneg("amplitude", 0.1);
  const double decay = P.real("decay", 3.0);
  return spectral::random_decaying_state(R, amp, std::uint64_t(common.seed), decay);
}

steering::SteeringConfig read_steering(Params& P) {
  steering::SteeringConfig c;
  c.tau = P.positive("tau", c.tau);
  c.gamma = P.real("gamma", c.gamma);
  if (!(c.gamma > 1.0)) bad("gamma", "must exceed 1");
  c.R = P.positive("R", c.R);
  c.omega = P.positive("omega", c.omega);
  c.correction_tau = P.nonneg("correction_tau", 0.0);
  c.max_fp_iters = int(P.integer("max_fp_iters", c.max_fp_iters, 1, 10000));
  c.fp_tol = P.positive("fp_tol", c.fp_tol);
  c.chatter_windows = int(P.integer("chatter_windows", c.chatter_windows, 1, 1000000));
  c.level_omegas = P.reals("level_omegas", std::vector<double>{});
  for (double w : c.level_omegas) {
    if (!(w > 0.0)) bad("level_omegas", "entries must be positive");
  }
  c.threads = int(P.integer("threads", 1, 1, 1024));
  c.integrator = read_integrator(P);
  P.resolved()["correction_tau"] = c.effective_correction_tau();
  return c;
}

lattice::SaturationChain read_chain(Params& P) {
  const ModeSet k1 = P.modes("k1");
  if (!k1.is_symmetric()) bad("k1", "mode set must be symmetric under k -> -k");
  const int radius = int(P.integer("chain_radius", 10, 1, 1000));
  const int levels = int(P.integer("max_levels", 20, 1, 1000));
  lattice::ChainOptions opts;
  opts.working_radius = int(P.integer("working_radius", 0, 0, 100000));
  return lattice::saturation_chain(k1, radius, levels, opts);
}

ModeSet read_observed(Params& P, const lattice::SaturationChain& chain) {
  if (P.has("obs")) {
    const ModeSet obs = P.modes("obs");
    if (!obs.is_symmetric()) bad("obs", "mode set must be symmetric under k -> -k");
    return obs;
  }
  const long level = P.integer("obs_level", 1, 1, long(chain.levels.size()));
  return chain.levels[std::size_t(level - 1)];
}

std::string csv_row(const std::vector<double>& xs) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

std::string meta_lines(const Common& c) {
  std::string s;
  for (const auto& m : c.meta) s += "# " + m + "\n";
  return s;
}

// ---------------------------------------------------------------------------

void run_saturate(Params& P, Outputs& O, const Common& common, std::ostream& out) {
  const ModeSet k1 = P.modes("k1");
  const int radius = int(P.integer("radius", 10, 1, 1000));
  const int levels = int(P.integer("max_levels", 20, 1, 1000));
  lattice::ChainOptions opts;
  opts.working_radius = int(P.integer("working_radius", 0, 0, 100000));
  const bool require = P.boolean("require_covered", false);
  P.finish("saturate");

  const auto chain = lattice::saturation_chain(k1, radius, levels, opts);
  json j = io::chain_to_json(chain);
  j["saturating_symmetric"] = k1.is_symmetric() && lattice::is_saturating_symmetric(k1);
  j["seed"] = common.seed;
  O.write_json("chain.json", j);
  out << "status " << lattice::to_string(chain.status) << ", " << chain.levels.size() << " levels, covered radius "
      << chain.covered_radius << ", saturating " << (j["saturating_symmetric"].get<bool>() ? "yes" : "no") << "\n";
  if (require) lattice::require_covered(chain);
}

void run_simulate(Params& P, Outputs& O, const Common& common, std::ostream& out) {
  const SpectralState s0 = read_initial(P, 5, common);
  const auto params = read_sim(P);
  const auto icfg = read_integrator(P);
  forcing::ForcingProgram program;
  if (P.has("program")) {
    const json pj = P.value("program");
    try {
      if (pj.is_string()) {
        const fs::path p = P.existing("program", pj.get<std::string>(), true);
        program = io::read_program(p);
      } else {
        program = io::program_from_json(pj);
      }
    } catch (const Error& e) {
      bad("program", e.what());
    }
    if (P.has("T") && std::abs(P.real("T") - program.total_duration()) > 1e-12 * program.total_duration()) {
      bad("T", "differs from the program duration");
    }
    P.resolved()["T"] = program.total_duration();
  } else {
    const double T = P.positive("T", 1.0);
    program = forcing::ForcingProgram(ModeSet{}, {forcing::ForcingSegment::zero(T)});
  }
  const bool convergence = P.has("convergence_dts");
  std::vector<double> dts;
  if (convergence) dts = P.reals("convergence_dts");
  P.finish("simulate");

  integrator::Trajectory tr;
  long step = 0;
  auto rec = [&](double t, const SpectralState& s, bool boundary) {
    if (step++ % icfg.record_stride == 0 || boundary) {
      if (tr.times.empty() || tr.times.back() != t) {
        tr.times.push_back(t);
        tr.states.push_back(s);
      }
    }
  };
  std::optional<Error> failure;
  try {
    integrator::advance(s0, params, program, icfg, rec);
  } catch (const Error& e) {
    if (!is_numerical(e.code())) throw;
    failure = e;
  }
  json inv;
  inv["seed"] = common.seed;
  inv["status"] = failure ? "failed" : "ok";
  if (failure) inv["error"] = failure->what();
  if (!tr.states.empty()) {
    const auto& a = tr.states.front();
    const auto& b = tr.states.back();
    auto rel = [](double x0, double x1) { return x0 == 0.0 ? std::abs(x1) : std::abs(x1 - x0) / std::abs(x0); };
    inv["t_final"] = tr.times.back();
    inv["energy"] = {spectral::energy(a), spectral::energy(b)};
    inv["enstrophy"] = {spectral::enstrophy(a), spectral::enstrophy(b)};
    inv["energy_drift"] = rel(spectral::energy(a), spectral::energy(b));
    inv["enstrophy_drift"] = rel(spectral::enstrophy(a), spectral::enstrophy(b));
    O.write("trajectory.csv", io::trajectory_csv(tr, common.meta));
    O.write("summary.csv", io::summary_csv(tr, common.meta));
    O.write("final_state.csv", io::state_to_csv(b, common.meta));
  }
  if (!failure && convergence) {
    const auto rep = integrator::convergence_order(s0, params, program, dts, icfg);
    inv["convergence"] = {{"order", rep.order}, {"indeterminate", rep.indeterminate}, {"dts", rep.dts},
                          {"errors", rep.errors}};
  }
  O.write_json("invariants.json", inv);
  if (failure) throw *failure;
  out << "T " << tr.times.back() << ", energy drift " << inv["energy_drift"].get<double>() << ", enstrophy drift "
      << inv["enstrophy_drift"].get<double>() << "\n";
}

std::vector<double> read_target(Params& P, const std::vector<double>& obs0) {
  if (P.has("target")) {
    auto t = P.reals("target");
    if (t.size() != obs0.size()) {
      bad("target", "has " + std::to_string(t.size()) + " entries, observed set has " + std::to_string(obs0.size()) +
                        " channels");
    }
    return t;
  }
  auto d = P.reals("displacement", std::vector<double>(obs0.size(), 0.0));
  if (d.size() != obs0.size()) {
    bad("displacement", "has " + std::to_string(d.size()) + " entries, observed set has " +
                            std::to_string(obs0.size()) + " channels");
  }
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += obs0[i];
  P.resolved()["target"] = d;
  return d;
}

void write_report(Outputs& O, const steering::EndpointReport& r, const Common& common, bool converged) {
  O.write_json("program.json", io::program_to_json(r.program));
  json j = io::report_to_json(r, "program.json");
  j["converged"] = converged;
  j["seed"] = common.seed;
  O.write_json("report.json", j);
  if (r.final_state.size() > 0) O.write("final_state.csv", io::state_to_csv(r.final_state, common.meta));
}

void run_steer(Params& P, Outputs& O, const Common& common, std::ostream& out) {
  const auto chain = read_chain(P);
  const ModeSet obs = read_observed(P, chain);
  const SpectralState s0 = read_initial(P, 6, common);
  const auto params = read_sim(P);
  const auto cfg = read_steering(P);
  const auto target = read_target(P, spectral::Channels(obs).observe(s0));
  P.finish("steer");
  try {
    const auto rep = steering::steer_to_target(target, chain, obs, s0, params, cfg);
    write_report(O, rep, common, true);
    out << "converged in " << rep.iterations << " iterations, error " << rep.error_norm << ", tail growth "
        << rep.q_tail_growth << "\n";
  } catch (const steering::SteeringFailure& f) {
    write_report(O, f.report(), common, false);
    throw;
  }
}

void run_cover(Params& P, Outputs& O, const Common& common, std::ostream& out) {
  const auto chain = read_chain(P);
  const ModeSet obs = read_observed(P, chain);
  const SpectralState s0 = read_initial(P, 6, common);
  const auto params = read_sim(P);
  const auto cfg = read_steering(P);
  const int density = int(P.integer("grid_density", 3, 2, 1000));
  std::vector<double> taus;
  if (P.has("near_identity_taus")) taus = P.reals("near_identity_taus");
  for (double t : taus) {
    if (!(t > 0.0)) bad("near_identity_taus", "entries must be positive");
  }
  P.finish("cover");

  const auto res = steering::coverage_check(chain, obs, cfg.R, density, s0, params, cfg);
  O.write("coverage.csv", meta_lines(common) + io::coverage_csv(res));
  json j;
  j["seed"] = common.seed;
  j["targets"] = res.targets.size();
  j["fraction"] = res.fraction;
  j["max_error"] = res.errors.empty() ? 0.0 : *std::max_element(res.errors.begin(), res.errors.end());
  j["max_iterations"] = res.iterations.empty() ? 0 : *std::max_element(res.iterations.begin(), res.iterations.end());
  if (!taus.empty()) {
    const spectral::Channels ch(obs);
    const auto grid = steering::l1_grid(ch.size(), 0.5 * cfg.R, density);
    std::string csv = meta_lines(common) + "tau,defect\n";
    json defects = json::array();
    for (double tau : taus) {
      const double d = steering::near_identity_defect(obs, grid, tau, s0, params, cfg.integrator);
      csv += csv_row({tau, d}) + "\n";
      defects.push_back({{"tau", tau}, {"defect", d}});
    }
    O.write("near_identity.csv", csv);
    j["near_identity"] = defects;
  }
  O.write_json("coverage.json", j);
  out << "coverage " << res.fraction << " over " << res.targets.size() << " targets, max error "
      << j["max_error"].get<double>() << "\n";
}

void run_average(Params& P, Outputs& O, const Common& common, std::ostream& out) {
  const std::string mode = P.choice("mode", "cascade", {"cascade", "rx"});
  const SpectralState s0 = read_initial(P, 6, common);
  const auto params = read_sim(P);
  const auto icfg = read_integrator(P);
  const double T = P.positive("T", 0.5);
  const int samples = int(P.integer("samples", 400, 1, 10000000));
  json j;
  j["seed"] = common.seed;
  if (mode == "cascade") {
    const ModeIndex k = P.mode("k");
    const ModeIndex m = P.mode("m");
    const ModeIndex n = P.mode("n");
    const double A = P.real("A", 1.0);
    const auto omegas = P.reals("omegas", std::vector<double>{50, 100, 200, 400});
    for (double w : omegas) {
      if (!(w > 0.0)) bad("omegas", "entries must be positive");
    }
    P.finish("average");
    const auto res = steering::averaging_experiment(k, {m, n}, A, omegas, T, s0, params, icfg, samples);
    std::string csv = meta_lines(common) + "omega,D,reference_sup\n";
    bool decreasing = true;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      csv += csv_row({omegas[i], res.deviations[i], res.reference_sup}) + "\n";
      if (i > 0 && !(res.deviations[i] < res.deviations[i - 1])) decreasing = false;
    }
    O.write("averaging.csv", csv);
    j["deviations"] = res.deviations;
    j["reference_sup"] = res.reference_sup;
    j["strictly_decreasing"] = decreasing;
    j["final_ratio"] = res.reference_sup > 0.0 && !res.deviations.empty() ? res.deviations.back() / res.reference_sup : 0.0;
    O.write_json("averaging.json", j);
    out << "D " << csv_row(res.deviations) << ", ratio " << j["final_ratio"].get<double>() << "\n";
  } else {
    const ModeIndex k = P.mode("probe_mode");
    const auto deltas = P.reals("deltas", std::vector<double>{0.1, 0.05, 0.025});
    P.finish("average");
    const auto res = steering::rx_continuity_probe(k, deltas, T, s0, params, icfg, samples);
    std::string csv = meta_lines(common) + "delta,omega,rx_distance,deviation\n";
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      csv += csv_row({res.deltas[i], res.omegas[i], res.rx_distances[i], res.deviations[i]}) + "\n";
    }
    O.write("rx_probe.csv", csv);
    j["deltas"] = res.deltas;
    j["rx_distances"] = res.rx_distances;
    j["deviations"] = res.deviations;
    O.write_json("rx_probe.json", j);
    out << "deviations " << csv_row(res.deviations) << "\n";
  }
}

void run_chatter(Params& P, Outputs& O, const Common& common, std::ostream& out) {
  const std::string mode = P.choice("mode", "chattering", {"chattering", "relaxation"});
  const double T = P.positive("T", 1.0);
  const int grid = int(P.integer("rx_grid", 256, 2, 100000000));
  json j;
  j["seed"] = common.seed;
  if (mode == "relaxation") {
    const auto omegas = P.reals("omegas", std::vector<double>{1e2, 1e3, 1e4});
    const ModeIndex k = P.has("probe_mode") ? P.mode("probe_mode") : ModeIndex{1, 0};
    P.resolved()["probe_mode"] = io::mode_to_json(k);
    P.finish("chatter");
    const ModeSet support = ModeSet{k}.symmetrized();
    const forcing::ForcingProgram zero(support, {forcing::ForcingSegment::zero(T)});
    std::string csv = meta_lines(common) + "omega,rx_distance,expected\n";
    json rows = json::array();
    for (double w : omegas) {
      if (!(w > 0.0)) bad("omegas", "entries must be positive");
      const forcing::ForcingProgram f(support, {forcing::ForcingSegment::oscillatory(T, {{k, 1.0 / std::sqrt(w)}}, w)});
      const double rx = forcing::relaxation_distance(f, zero, grid);
      csv += csv_row({w, rx, 1.0 / std::sqrt(w)}) + "\n";
      rows.push_back({{"omega", w}, {"rx_distance", rx}, {"expected", 1.0 / std::sqrt(w)}});
    }
    O.write("relaxation.csv", csv);
    j["rows"] = rows;
    O.write_json("relaxation.json", j);
    out << "relaxation law over " << omegas.size() << " frequencies written\n";
    return;
  }

  const double A = P.positive("A", 1.0);
  std::vector<double> Ls_raw = P.reals("windows", std::vector<double>{5, 20, 100});
  std::vector<int> Ls;
  for (double L : Ls_raw) {
    if (L < 1 || std::floor(L) != L) bad("windows", "entries must be positive integers");
    Ls.push_back(int(L));
  }
  std::vector<forcing::ForcingProgram> programs;
  if (P.has("program")) {
    const json pj = P.value("program");
    try {
      programs.push_back(pj.is_string() ? io::read_program(P.existing("program", pj.get<std::string>(), true))
                                        : io::program_from_json(pj));
    } catch (const Error& e) {
      bad("program", e.what());
    }
  } else {
    const int count = int(P.integer("count", 50, 1, 100000));
    const int pieces = int(P.integer("pieces", 10, 1, 100000));
    const ModeSet support = P.modes("support", ModeSet{{1, 0}, {0, 1}, {1, 1}, {1, -1}}.symmetrized());
    if (!support.is_symmetric()) bad("support", "mode set must be symmetric under k -> -k");
    for (int i = 0; i < count; ++i) {
      programs.push_back(forcing::random_hull_program(support, A, T, pieces, std::uint64_t(common.seed) + std::uint64_t(i)));
    }
  }
  P.finish("chatter");
  const double kappa = double(spectral::Channels(programs.front().support()).size());
  std::string csv = meta_lines(common) + "program,L,rx_distance,bound\n";
  std::vector<double> worst(Ls.size(), 0.0);
  bool within = true;
  for (std::size_t p = 0; p < programs.size(); ++p) {
    const double Tp = programs[p].total_duration();
    for (std::size_t l = 0; l < Ls.size(); ++l) {
      const auto chat = forcing::chattering_approximation(programs[p], A, Ls[l]);
      const double rx = forcing::relaxation_distance(chat, programs[p], grid);
      const double bound = 2.0 * A * std::sqrt(kappa) * Tp / Ls[l];
      within = within && rx <= bound;
      worst[l] = std::max(worst[l], rx);
      csv += std::to_string(p) + "," + std::to_string(Ls[l]) + "," + csv_row({rx, bound}) + "\n";
    }
  }
  O.write("chatter.csv", csv);
  j["windows"] = Ls;
  j["max_rx_distance"] = worst;
  j["within_bound"] = within;
  j["kappa"] = kappa;
  O.write_json("chatter.json", j);
  out << "max rx distance per L " << csv_row(worst) << ", within bound " << (within ? "yes" : "no") << "\n";
}

std::vector<SpectralState> read_basis(Params& P, int resolution) {
  const json b = P.value("basis");
  if (!b.is_array() || b.empty()) bad("basis", "expected a non-empty array of vectors");
  std::vector<SpectralState> out;
  json echoed = json::array();
  for (const auto& v : b) {
    if (v.is_string()) {
      const fs::path p = P.existing("basis", v.get<std::string>(), false);
      try {
        out.push_back(io::read_state(p));
      } catch (const Error& e) {
        bad("basis", e.what());
      }
      echoed.push_back(p.string());
      continue;
    }
    if (!v.is_array()) bad("basis", "each vector is a file path or a list of {\"mode\", \"value\"} entries");
    SpectralState s(resolution);
    for (const auto& e : v) {
      if (!e.is_object() || !e.contains("mode") || !e.contains("value")) {
        bad("basis", "entries need \"mode\" and \"value\"");
      }
      ModeIndex k;
      try {
        k = io::mode_from_json(e.at("mode"));
      } catch (const Error&) {
        bad("basis", "mode must be [kx, ky] integers");
      }
      if (!s.basis().contains(k)) bad("basis", "mode " + lattice::to_string(k) + " outside resolution");
      const json& val = e.at("value");
      spectral::Complex z;
      if (val.is_number()) {
        z = val.get<double>();
      } else if (val.is_array() && val.size() == 2 && val[0].is_number() && val[1].is_number()) {
        z = {val[0].get<double>(), val[1].get<double>()};
      } else {
        bad("basis", "value must be a number or [re, im]");
      }
      // entries may be given for k or -k
      s.set(k, k.is_canonical() ? z : std::conj(z));
    }
    out.push_back(std::move(s));
    echoed.push_back(v);
  }
  P.resolved()["basis"] = echoed;
  return out;
}

void run_project(Params& P, Outputs& O, const Common& common, std::ostream& out) {
  const auto chain = read_chain(P);
  const SpectralState s0 = read_initial(P, 6, common);
  const auto params = read_sim(P);
  const auto cfg = read_steering(P);
  const double eps = P.positive("epsilon", 0.05);
  const auto basis = read_basis(P, s0.resolution());
  std::vector<std::vector<double>> targets;
  if (P.has("target")) {
    targets.push_back(P.reals("target"));
    if (targets.front().size() != basis.size()) bad("target", "length must equal the number of basis vectors");
  } else {
    const double r = P.nonneg("grid_radius", 0.3);
    const int density = int(P.integer("grid_density", 5, 2, 1000));
    targets = steering::l1_grid(basis.size(), r, density);
  }
  P.finish("project");

  const auto setup = steering::subspace_setup(basis, eps);
  const auto proj0 = setup.projection.apply(s0);
  const std::size_t n = targets.size();
  std::vector<steering::EndpointReport> reports(n);
  std::vector<char> ok(n, 0);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        reports[i] = steering::steer_in_projection(basis, targets[i], chain, s0, params, cfg, eps);
        ok[i] = 1;
      } catch (const steering::SteeringFailure& f) {
        reports[i] = f.report();
      } catch (const Error& e) {
        errors[i] = e.what();
        reports[i].target = targets[i];
        reports[i].error_norm = std::numeric_limits<double>::infinity();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(cfg.threads, int(n)); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorCode::InvalidArgument, e);
  }

  std::string csv = meta_lines(common);
  for (std::size_t i = 0; i < basis.size(); ++i) csv += "target_" + std::to_string(i) + ",";
  csv += "error,tail_growth,iterations,converged\n";
  double max_err = 0.0;
  double max_tail = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    csv += csv_row(targets[i]) + "," + csv_row({reports[i].error_norm, reports[i].q_tail_growth}) + "," +
           std::to_string(reports[i].iterations) + "," + (ok[i] ? "1" : "0") + "\n";
    max_err = std::max(max_err, reports[i].error_norm);
    max_tail = std::max(max_tail, reports[i].q_tail_growth);
    hits += ok[i] ? 1 : 0;
  }
  O.write("projection.csv", csv);
  json j;
  j["seed"] = common.seed;
  json support = json::array();
  for (const auto& k : setup.support) support.push_back(io::mode_to_json(k));
  j["support"] = support;
  j["truncation_error"] = setup.truncation_error;
  j["projection_defect"] = setup.projection_defect;
  j["initial_coordinates"] = proj0;
  j["targets"] = n;
  j["fraction"] = n ? double(hits) / double(n) : 1.0;
  j["max_error"] = max_err;
  j["max_tail_growth"] = max_tail;
  O.write_json("projection.json", j);
  out << "projection steering: " << hits << "/" << n << " converged, max error " << max_err << ", max tail growth "
      << max_tail << "\n";
}

}  // namespace

int run(const std::string& experiment, json config, const fs::path& base_dir, std::ostream& out, std::ostream& err) {
  if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end()) {
    err << "error: unknown experiment '" << experiment << "'\n";
    return 1;
  }
  // A manifest is accepted in place of a config.
  if (config.is_object() && config.contains("tool") && config.contains("config")) config = config.at("config");
  if (config.is_object() && config.contains("experiment")) {
    if (config.at("experiment") != experiment) {
      err << "error: config field 'experiment': is " << config.at("experiment").dump() << ", subcommand is "
          << experiment << "\n";
      return 1;
    }
    config.erase("experiment");
  }

  std::optional<Outputs> outs;
  Params P(json::object(), base_dir);
  int status = 0;
  std::string message;
  try {
    P = Params(std::move(config), base_dir);
    P.resolved()["experiment"] = experiment;
    Common common;
    common.seed = P.integer("seed", 0, 0, std::numeric_limits<long>::max());
    common.meta = {"experiment=" + experiment, "seed=" + std::to_string(common.seed)};
    const std::string dir = [&] {
      if (!P.has("output_dir")) return "out/" + experiment;
      const json v = P.value("output_dir");
      if (!v.is_string()) bad("output_dir", "expected a path");
      return v.get<std::string>();
    }();
    const fs::path out_dir = fs::absolute(fs::path(dir)).lexically_normal();
    P.resolved()["output_dir"] = out_dir.string();
    outs.emplace(out_dir);

    if (experiment == "saturate") run_saturate(P, *outs, common, out);
    if (experiment == "simulate") run_simulate(P, *outs, common, out);
    if (experiment == "steer") run_steer(P, *outs, common, out);
    if (experiment == "cover") run_cover(P, *outs, common, out);
    if (experiment == "average") run_average(P, *outs, common, out);
    if (experiment == "chatter") run_chatter(P, *outs, common, out);
    if (experiment == "project") run_project(P, *outs, common, out);
  } catch (const Error& e) {
    status = is_numerical(e.code()) ? 2 : 1;
    message = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const fs::filesystem_error& e) {
    status = 1;
    message = e.what();
  } catch (const json::exception& e) {
    status = 1;
    message = e.what();
  }
  if (status != 0) err << "error: " << message << "\n";

  if (outs && (status != 1 || !outs->files().empty())) {
    json manifest = {{"tool", "vortctl"},
                     {"version", VORTCTL_VERSION},
                     {"config", P.resolved()},
                     {"outputs", outs->files()},
                     {"status", status == 0 ? "ok" : status == 1 ? "validation_error" : "numerical_failure"}};
    if (status != 0) manifest["error"] = message;
    try {
      io::write_atomic(outs->dir() / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "error: writing manifest: " << e.what() << "\n";
      return status == 0 ? 1 : status;
    }
  }
  return status;
}

int main(int argc, char** argv) {
  CLI::App app{"Spectral vorticity simulator and control-synthesis experiments"};
  app.set_version_flag("--version", std::string(VORTCTL_VERSION));
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : kExperiments) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON config or manifest");
    sub->allow_extras();
    subs[name] = sub;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  std::string experiment;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) experiment = name;
  }
  json config = json::object();
  fs::path base = fs::current_path();
  if (!config_path.empty()) {
    try {
      config = io::parse_json(io::read_text(config_path), config_path);
    } catch (const Error& e) {
      std::cerr << "error: config: " << e.what() << "\n";
      return 1;
    }
    base = fs::absolute(fs::path(config_path)).parent_path();
    if (config.is_object() && config.contains("tool") && config.contains("config")) config = config.at("config");
  }
  if (!config.is_object()) {
    std::cerr << "error: config must be a JSON object\n";
    return 1;
  }

  // --field value overrides a top-level scalar field.
  const auto extras = subs[experiment]->remaining();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i];
    std::string val;
    if (key.rfind("--", 0) != 0) {
      std::cerr << "error: unexpected argument '" << key << "'\n";
      return 1;
    }
    key = key.substr(2);
    if (const auto eq = key.find('='); eq != std::string::npos) {
      val = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else if (i + 1 < extras.size()) {
      val = extras[++i];
    } else {
      std::cerr << "error: flag --" << key << " needs a value\n";
      return 1;
    }
    if (config.contains(key) && (config[key].is_array() || config[key].is_object())) {
      std::cerr << "error: config field '" << key << "': only scalar fields can be overridden by flags\n";
      return 1;
    }
    json parsed;
    try {
      parsed = json::parse(val);
      if (!parsed.is_primitive()) parsed = val;
    } catch (const json::parse_error&) {
      parsed = val;
    }
    // Paths given on the command line are relative to the working directory.
    if (parsed.is_string()) {
      const fs::path p(parsed.get<std::string>());
      if (key != "initial" && key != "mode" && key != "experiment" && fs::exists(p)) parsed = fs::absolute(p).string();
    }
    config[key] = parsed;
  }
  return run(experiment, std::move(config), base, std::cout, std::cerr);
}

}  // namespace vortctl::cli
