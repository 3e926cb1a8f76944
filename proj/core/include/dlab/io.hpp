#pragma once

// JSON readers and writers for spaces and coefficient sets, and the CSV
// tables produced by experiments.

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dlab/calculus.hpp"
#include "dlab/convergence.hpp"
#include "dlab/diffusion_sim.hpp"
#include "dlab/mm_space.hpp"
#include "dlab/semigroup.hpp"

namespace dlab {

using Json = nlohmann::json;

/// Throws naming `where` and the first key not in `allowed`.
void reject_unknown_keys(const Json& obj, const std::vector<std::string>& allowed,
                         const std::string& where);

/// {"ambient": {"coords" | "distance_table" [+ "coords"] | "coords" + "periods"},
///  "vertices": [ambient index...], "edges": [{"u","v","length","conductance"}],
///  "measure": [..] or scalar, "basepoint": index}.
/// Missing vertices default to every ambient point; missing edge lengths to
/// the ambient distance; missing conductance to 1.
DiscreteSpace space_from_json(const Json& j, const std::string& where = "space");
Json space_to_json(const DiscreteSpace& space);

/// {"a": scalar | per-edge, "lambda", "theta1", "theta2": per-edge or 0,
///  "c": scalar | per-vertex}. Missing entries take the trivial values.
CoefficientSet coefficients_from_json(const Json& j, const DiscreteSpace& space,
                                      const std::string& where = "coefficients");
Json coefficients_to_json(const CoefficientSet& coeffs);

/// Shortest round-trip decimal for a double.
std::string format_double(double x);

/// t,x,y,p
void write_kernel_csv(std::ostream& os, const std::vector<HeatKernel>& kernels);
/// path_id,jump_time,state with -1 for the cemetery.
void write_paths_csv(std::ostream& os, const std::vector<PathSample>& paths);
/// member_index,check_name,defect
void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);

}  // namespace dlab
