#pragma once

// Command-line front end. run() is the whole program minus process setup,
// so tests can drive it in-process.

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wcae/dataset.hpp"

namespace wcae::cli {

/// Runs one invocation; args excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Line-oriented "key = value" text with '#' comments. Later keys replace
/// earlier ones; a line without '=' is a ParseError at its byte offset.
std::map<std::string, std::string> parse_key_values(std::string_view text);

struct Manifest {
    std::string path;
    std::map<std::string, std::string> fields;
    std::vector<double> snr_eval;

    data::PairSet load(data::Role role) const;
};

/// Throws InvalidInput naming the path when it cannot be read.
Manifest read_manifest(const std::string& path);

}  // namespace wcae::cli
