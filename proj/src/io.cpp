#include "vortctl/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace vortctl::io {

using forcing::ForcingProgram;
using forcing::ForcingSegment;
using lattice::ModeIndex;
using lattice::ModeSet;
using spectral::Complex;
using spectral::SpectralState;

namespace {

// 17 significant digits round-trip doubles exactly.
std::ostream& num(std::ostream& os) { return os << std::setprecision(17); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

[[noreturn]] void parse_error(const std::string& origin, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::Parse, origin + ":" + std::to_string(line) + ": " + what);
}

int to_int(const std::string& s, const std::string& origin, std::size_t line) {
  int v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || first == last) parse_error(origin, line, "bad integer '" + s + "'");
  return v;
}

double to_double(const std::string& s, const std::string& origin, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    parse_error(origin, line, "bad number '" + s + "'");
  }
}

void write_meta(std::ostream& os, const std::vector<std::string>& meta) {
  for (const auto& m : meta) os << "# " << m << '\n';
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j, const char* field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw Error(ErrorCode::Parse, std::string(field) + ": expected a number or [re, im]");
}

const json& field(const json& j, const char* name, const std::string& ctx) {
  if (!j.is_object() || !j.contains(name)) throw Error(ErrorCode::Parse, ctx + ": missing field '" + name + "'");
  return j.at(name);
}

double number(const json& j, const char* name, const std::string& ctx) {
  const json& v = field(j, name, ctx);
  if (!v.is_number()) throw Error(ErrorCode::Parse, ctx + "." + name + ": expected a number");
  return v.get<double>();
}

ModeIndex parse_key(const std::string& key) {
  const auto parts = split(key, ',');
  if (parts.size() != 2) throw Error(ErrorCode::Parse, "values key '" + key + "': expected \"kx,ky\"");
  return {to_int(parts[0], "values key", 0), to_int(parts[1], "values key", 0)};
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write file " + tmp.string());
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json parse_json(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, origin + ": " + e.what());
  }
}

ModeSet parse_mode_set(std::string_view text) {
  ModeSet out;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 2) parse_error("mode set", lineno, "expected \"kx ky\"");
    const ModeIndex k{to_int(tok[0], "mode set", lineno), to_int(tok[1], "mode set", lineno)};
    if (k.is_zero()) parse_error("mode set", lineno, "zero mode");
    out.insert(k);
  }
  return out;
}

ModeSet read_mode_set(const fs::path& path) { return parse_mode_set(read_text(path)); }

std::string format_mode_set(const ModeSet& set) {
  std::ostringstream os;
  for (const auto& k : set) os << k.kx << ' ' << k.ky << '\n';
  return os.str();
}

json mode_to_json(ModeIndex k) { return json::array({k.kx, k.ky}); }

ModeIndex mode_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw Error(ErrorCode::Parse, "mode: expected [kx, ky] integers");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

json chain_to_json(const lattice::SaturationChain& chain) {
  json levels = json::array();
  for (const auto& lv : chain.levels) {
    json l = json::array();
    for (const auto& k : lv) l.push_back(mode_to_json(k));
    levels.push_back(std::move(l));
  }
  return {{"levels", std::move(levels)},
          {"covered_radius", chain.covered_radius},
          {"status", lattice::to_string(chain.status)},
          {"radius", chain.radius},
          {"pruned", chain.pruned}};
}

lattice::SaturationChain chain_from_json(const json& j) {
  lattice::SaturationChain c;
  for (const auto& lv : field(j, "levels", "chain")) {
    ModeSet s;
    for (const auto& k : lv) s.insert(mode_from_json(k));
    c.levels.push_back(std::move(s));
  }
  if (c.levels.empty()) throw Error(ErrorCode::Parse, "chain: no levels");
  c.covered_radius = int(number(j, "covered_radius", "chain"));
  const auto st = field(j, "status", "chain").get<std::string>();
  if (st == "covered") {
    c.status = lattice::ChainStatus::Covered;
  } else if (st == "stationary") {
    c.status = lattice::ChainStatus::Stationary;
  } else if (st == "budget") {
    c.status = lattice::ChainStatus::Budget;
  } else {
    throw Error(ErrorCode::Parse, "chain.status: unknown value '" + st + "'");
  }
  c.radius = j.value("radius", c.covered_radius);
  c.pruned = j.value("pruned", false);
  return c;
}

std::string state_to_csv(const SpectralState& s, const std::vector<std::string>& meta) {
  std::ostringstream os;
  num(os);
  write_meta(os, meta);
  os << "# resolution=" << s.resolution() << '\n' << "kx,ky,re,im\n";
  const auto& b = s.basis();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto k = b.mode(i);
    os << k.kx << ',' << k.ky << ',' << s.data()[i].real() << ',' << s.data()[i].imag() << '\n';
  }
  return os.str();
}

SpectralState state_from_csv(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  int resolution = -1;
  bool header = false;
  std::vector<std::pair<ModeIndex, Complex>> rows;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto pos = t.find("resolution=");
      if (pos != std::string::npos) resolution = to_int(trim(t.substr(pos + 11)), "state csv", lineno);
      continue;
    }
    if (!header) {
      if (t != "kx,ky,re,im") parse_error("state csv", lineno, "expected header kx,ky,re,im");
      header = true;
      continue;
    }
    const auto cols = split(t, ',');
    if (cols.size() != 4) parse_error("state csv", lineno, "expected 4 columns");
    rows.push_back({{to_int(cols[0], "state csv", lineno), to_int(cols[1], "state csv", lineno)},
                    {to_double(cols[2], "state csv", lineno), to_double(cols[3], "state csv", lineno)}});
  }
  if (resolution < 1) throw Error(ErrorCode::Parse, "state csv: missing '# resolution=R' line");
  SpectralState s(resolution);
  for (const auto& [k, v] : rows) {
    if (!s.basis().contains(k)) throw Error(ErrorCode::Parse, "state csv: mode " + lattice::to_string(k) + " outside resolution");
    s.set(k, v);
  }
  return s;
}

json state_to_json(const SpectralState& s) {
  json coeffs = json::array();
  const auto& b = s.basis();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto k = b.mode(i);
    coeffs.push_back({{"kx", k.kx}, {"ky", k.ky}, {"re", s.data()[i].real()}, {"im", s.data()[i].imag()}});
  }
  return {{"resolution", s.resolution()}, {"coefficients", std::move(coeffs)}};
}

SpectralState state_from_json(const json& j) {
  const int res = int(number(j, "resolution", "state"));
  if (res < 1) throw Error(ErrorCode::Parse, "state.resolution: must be >= 1");
  SpectralState s(res);
  for (const auto& c : field(j, "coefficients", "state")) {
    const ModeIndex k{int(number(c, "kx", "state.coefficients")), int(number(c, "ky", "state.coefficients"))};
    if (!s.basis().contains(k)) throw Error(ErrorCode::Parse, "state: mode " + lattice::to_string(k) + " outside resolution");
    s.set(k, {number(c, "re", "state.coefficients"), number(c, "im", "state.coefficients")});
  }
  return s;
}

SpectralState read_state(const fs::path& path) {
  const auto text = read_text(path);
  if (path.extension() == ".json") return state_from_json(parse_json(text, path.string()));
  return state_from_csv(text);
}

json program_to_json(const ForcingProgram& p) {
  json support = json::array();
  for (const auto& k : p.support()) support.push_back(mode_to_json(k));
  json segs = json::array();
  for (const auto& seg : p.segments()) {
    json js;
    if (std::holds_alternative<forcing::Zero>(seg.payload)) {
      js = {{"kind", "zero"}, {"duration", seg.duration}};
    } else if (const auto* c = std::get_if<forcing::Constant>(&seg.payload)) {
      json values = json::object();
      for (const auto& [k, v] : c->values) values[std::to_string(k.kx) + "," + std::to_string(k.ky)] = complex_to_json(v);
      js = {{"kind", "constant"}, {"duration", seg.duration}, {"values", std::move(values)}};
    } else {
      const auto& o = std::get<forcing::Oscillatory>(seg.payload);
      json pairs = json::array();
      for (const auto& t : o.terms) {
        json amp = t.amp.imag() == 0.0 ? json(t.amp.real()) : complex_to_json(t.amp);
        pairs.push_back({{"mode", mode_to_json(t.mode)}, {"amp", std::move(amp)}});
      }
      js = {{"kind", "oscillatory"}, {"duration", seg.duration}, {"omega", o.omega}, {"phase", o.phase},
            {"pairs", std::move(pairs)}};
    }
    segs.push_back(std::move(js));
  }
  return {{"support", std::move(support)}, {"segments", std::move(segs)}};
}

ForcingProgram program_from_json(const json& j) {
  ModeSet support;
  for (const auto& k : field(j, "support", "program")) support.insert(mode_from_json(k));
  std::vector<ForcingSegment> segs;
  std::size_t idx = 0;
  for (const auto& js : field(j, "segments", "program")) {
    const std::string ctx = "program.segments[" + std::to_string(idx++) + "]";
    const auto kind = field(js, "kind", ctx).get<std::string>();
    const double d = number(js, "duration", ctx);
    if (kind == "zero") {
      segs.push_back(ForcingSegment::zero(d));
    } else if (kind == "constant") {
      spectral::ModeField values;
      for (const auto& [key, v] : field(js, "values", ctx).items()) values[parse_key(key)] = complex_from_json(v, "values");
      segs.push_back(ForcingSegment::constant(d, std::move(values)));
    } else if (kind == "oscillatory") {
      std::vector<forcing::OscTerm> terms;
      for (const auto& pr : field(js, "pairs", ctx)) {
        terms.push_back({mode_from_json(field(pr, "mode", ctx + ".pairs")), complex_from_json(field(pr, "amp", ctx), "amp")});
      }
      segs.push_back(ForcingSegment::oscillatory(d, std::move(terms), number(js, "omega", ctx), js.value("phase", 0.0)));
    } else {
      throw Error(ErrorCode::Parse, ctx + ".kind: unknown value '" + kind + "'");
    }
  }
  return ForcingProgram(std::move(support), std::move(segs));
}

ForcingProgram read_program(const fs::path& path) { return program_from_json(parse_json(read_text(path), path.string())); }

std::string trajectory_csv(const integrator::Trajectory& tr, const std::vector<std::string>& meta) {
  std::ostringstream os;
  num(os);
  write_meta(os, meta);
  os << "t,kx,ky,re,im\n";
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const auto& s = tr.states[i];
    const auto& b = s.basis();
    for (std::size_t j = 0; j < b.size(); ++j) {
      os << tr.times[i] << ',' << b.mode(j).kx << ',' << b.mode(j).ky << ',' << s.data()[j].real() << ','
         << s.data()[j].imag() << '\n';
    }
  }
  return os.str();
}

std::string summary_csv(const integrator::Trajectory& tr, const std::vector<std::string>& meta) {
  std::ostringstream os;
  num(os);
  write_meta(os, meta);
  os << "t,energy,enstrophy,h1,h2\n";
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const auto& s = tr.states[i];
    os << tr.times[i] << ',' << spectral::energy(s) << ',' << spectral::enstrophy(s) << ','
       << spectral::sobolev_norm(s, {1}) << ',' << spectral::sobolev_norm(s, {2}) << '\n';
  }
  return os.str();
}

json report_to_json(const steering::EndpointReport& r, const std::string& program_ref) {
  return {{"target", r.target},
          {"achieved", r.achieved},
          {"error", r.error_norm},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"tail_growth", r.q_tail_growth},
          {"error_history", r.error_history},
          {"program_ref", program_ref}};
}

std::string coverage_csv(const steering::CoverageResult& c, const std::vector<std::string>& meta) {
  std::ostringstream os;
  num(os);
  write_meta(os, meta);
  const std::size_t dim = c.targets.empty() ? 0 : c.targets.front().size();
  for (std::size_t i = 0; i < dim; ++i) os << "target_" << i << ',';
  os << "error,converged\n";
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    for (double v : c.targets[i]) os << v << ',';
    os << c.errors[i] << ',' << (c.converged[i] ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace vortctl::io
