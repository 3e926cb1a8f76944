#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <dlab/constructions.hpp>
#include <dlab/io.hpp>

namespace dlab::lab {

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct RunOutcome {
  std::vector<Check> checks;
  /// Empty unless a stage threw.
  std::string failed_stage;
  std::string error;
  int exit_code = 0;

  bool all_pass() const;
};

/// Builds the single space named by a normalized "space" section.
DiscreteSpace build_space(const Json& space_cfg);
SpaceSequence build_family(const Json& family_cfg);
CoefficientSet build_coefficients(const Json& coeff_cfg, const DiscreteSpace& space);
CoefficientSequence build_coefficient_sequence(const Json& coeff_cfg, const SpaceSequence& seq);

/// Runs a normalized config, writing manifest.json, summary.json and CSV
/// tables under `out`. Exit code 0 iff every check passes, 1 when a check
/// fails, 2 when a stage throws (a `.partial` marker is then left in `out`).
RunOutcome run_experiment(const Json& config, const std::filesystem::path& out, std::ostream& log);

}  // namespace dlab::lab
