#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace ldalg::cli {

// Exit codes of run().
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;  // a check failed or a soliton was rejected
inline constexpr int kExitSpecError = 2;    // bad spec, bad flags, dimension mismatch
inline constexpr int kExitNumeric = 3;      // degeneracy, domain or other numeric failure

// Runs one command. args excludes the program name. Human output goes to out,
// diagnostics to err; --json, --csv and --metric-out write files.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Deterministic JSON text: insertion-ordered keys, two-space indent, floats
// as %.12e, non-finite numbers as null, trailing newline.
std::string dump_json(const nlohmann::ordered_json& j);

// %.12e, or "nan"/"inf"/"-inf".
std::string format_double(double v);

// RFC 4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

}  // namespace ldalg::cli
