#pragma once

// Config-driven experiment runner. Parses a JSON config describing one named
// experiment, executes it, and writes results.csv, summary.json and
// report.txt (plus an optional SVG chart) into the output directory.
// Assertion failures are recorded and reflected in the outcome, not thrown;
// config problems throw with a field-path diagnostic.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qlocal::experiment {

inline constexpr const char* kVersion = "qlocal 1.0.0";

// command-line overrides applied on top of the config file
struct Overrides {
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

struct Outcome {
  bool ok = false;                      // every assertion passed
  std::vector<std::string> failures;    // one line per failed assertion
  std::string out_dir;
  bool cache_hit = false;               // artifacts restored from QLOCAL_CACHE_DIR
};

// schema, name-resolution and cap checks only; no numerics. ok is always
// true on return (problems throw); out_dir reports where a run would write
Outcome validate_file(const std::string& config_path, const Overrides& ov = {});

// full run with artifact emission
Outcome run_file(const std::string& config_path, const Overrides& ov = {});

}  // namespace qlocal::experiment
