#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

namespace vortctl::cli {

/// Runs one experiment from a config document. `base_dir` anchors relative
/// file paths. Returns the process exit status (0, 1 validation, 2 numerical).
int run(const std::string& experiment, nlohmann::json config, const std::filesystem::path& base_dir,
        std::ostream& out, std::ostream& err);

/// argv front-end: `vortctl <experiment> [--config file] [--field value ...]`.
int main(int argc, char** argv);

}  // namespace vortctl::cli
