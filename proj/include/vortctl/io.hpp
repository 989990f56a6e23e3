#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vortctl/forcing.hpp"
#include "vortctl/integrator.hpp"
#include "vortctl/lattice.hpp"
#include "vortctl/spectral.hpp"
#include "vortctl/steering.hpp"

namespace vortctl::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Whole file as a string. Throws InvalidArgument if it cannot be read.
std::string read_text(const fs::path& path);
/// Writes to a sibling temporary and renames over `path`.
void write_atomic(const fs::path& path, std::string_view content);

/// One "kx ky" pair per line; '#' starts a comment. Throws Parse with the line number.
lattice::ModeSet parse_mode_set(std::string_view text);
lattice::ModeSet read_mode_set(const fs::path& path);
std::string format_mode_set(const lattice::ModeSet& set);

json mode_to_json(lattice::ModeIndex k);
lattice::ModeIndex mode_from_json(const json& j);

json chain_to_json(const lattice::SaturationChain& chain);
lattice::SaturationChain chain_from_json(const json& j);

/// "# key=value" lines from `meta`, then "# resolution=R", header kx,ky,re,im and
/// one row per stored representative.
std::string state_to_csv(const spectral::SpectralState& s, const std::vector<std::string>& meta = {});
spectral::SpectralState state_from_csv(std::string_view text);
json state_to_json(const spectral::SpectralState& s);
spectral::SpectralState state_from_json(const json& j);
/// Dispatches on the extension (.json, anything else is CSV).
spectral::SpectralState read_state(const fs::path& path);

json program_to_json(const forcing::ForcingProgram& p);
forcing::ForcingProgram program_from_json(const json& j);
forcing::ForcingProgram read_program(const fs::path& path);

/// Long format t,kx,ky,re,im.
std::string trajectory_csv(const integrator::Trajectory& tr, const std::vector<std::string>& meta = {});
/// t,energy,enstrophy,h1,h2.
std::string summary_csv(const integrator::Trajectory& tr, const std::vector<std::string>& meta = {});

json report_to_json(const steering::EndpointReport& r, const std::string& program_ref);
/// target_0..target_{d-1},error,converged.
std::string coverage_csv(const steering::CoverageResult& c, const std::vector<std::string>& meta = {});

/// Parses a JSON document, mapping syntax errors to Parse.
json parse_json(std::string_view text, const std::string& origin);

}  // namespace vortctl::io
