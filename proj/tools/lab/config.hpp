#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <dlab/io.hpp>
#include <dlab/mm_space.hpp>

namespace dlab::lab {

enum class ExperimentKind { kValidate, kSpectrum, kSimulate, kConverge, kConserve, kFdd, kTightness };

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);
std::string to_string(ExperimentKind kind);
const std::vector<std::string>& experiment_kind_names();

struct ConfigResult {
  Json normalized;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

/// Fills defaults and rejects unknown keys. `kind` overrides a missing
/// "kind" entry and must agree with a present one.
ConfigResult normalize_config(const Json& raw, std::optional<ExperimentKind> kind = std::nullopt);

/// Reads JSON from disk, then normalizes. Parse errors are reported with the
/// byte offset.
ConfigResult load_config(const std::string& path, std::optional<ExperimentKind> kind = std::nullopt);

std::uint64_t fnv1a64(std::string_view bytes);

/// Canonical serialization used for hashing and echoing.
std::string canonical_dump(const Json& j);

/// Ambient function from a normalized function spec.
AmbientFunction make_function(const Json& spec);

}  // namespace dlab::lab
