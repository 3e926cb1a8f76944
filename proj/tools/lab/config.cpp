#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace dlab::lab {
namespace {

const Json kEmpty = Json::object();

// Reads one JSON object section, filling defaults into `out` and recording
// every problem instead of stopping at the first.
class Fields {
 public:
  Fields(const Json& in, std::string path, std::vector<std::string>& errors)
      : in_(in.is_object() ? in : kEmpty), path_(std::move(path)), errors_(errors) {
    if (!in.is_object() && !in.is_null()) fail(path_, "must be an object");
  }

  Json out = Json::object();

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& where, const std::string& what) {
    errors_.push_back((where.empty() ? std::string("config") : where) + ": " + what);
  }

  bool has(const std::string& key) const { return in_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return in_.contains(key) ? in_.at(key) : kNull;
  }

  double number(const std::string& key, std::optional<double> def, double lo = -kInf,
                bool strict = false) {
    const Json& v = raw(key);
    double x = def.value_or(0.0);
    if (v.is_null()) {
      if (!def) fail(at(key), "missing required number");
    } else if (!v.is_number()) {
      fail(at(key), "must be a number");
    } else {
      x = v.get<double>();
      if (!std::isfinite(x)) fail(at(key), "must be finite");
      if (strict ? !(x > lo) : !(x >= lo)) {
        fail(at(key), std::string("must be ") + (strict ? "> " : ">= ") + format_double(lo));
      }
    }
    out[key] = x;
    return x;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def,
                       std::int64_t lo = 0) {
    const Json& v = raw(key);
    std::int64_t x = def.value_or(0);
    if (v.is_null()) {
      if (!def) fail(at(key), "missing required integer");
    } else if (!v.is_number_integer()) {
      fail(at(key), "must be an integer");
    } else {
      x = v.get<std::int64_t>();
      if (x < lo) fail(at(key), "must be >= " + std::to_string(lo));
    }
    out[key] = x;
    return x;
  }

  std::uint64_t u64(const std::string& key, std::uint64_t def) {
    const Json& v = raw(key);
    std::uint64_t x = def;
    if (!v.is_null()) {
      if (v.is_number_unsigned()) {
        x = v.get<std::uint64_t>();
      } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        x = static_cast<std::uint64_t>(v.get<std::int64_t>());
      } else {
        fail(at(key), "must be an unsigned 64-bit integer");
      }
    }
    out[key] = x;
    return x;
  }

  bool boolean(const std::string& key, bool def) {
    const Json& v = raw(key);
    bool x = def;
    if (!v.is_null()) {
      if (v.is_boolean()) {
        x = v.get<bool>();
      } else {
        fail(at(key), "must be true or false");
      }
    }
    out[key] = x;
    return x;
  }

  std::string choice(const std::string& key, std::optional<std::string> def,
                     const std::vector<std::string>& allowed) {
    const Json& v = raw(key);
    std::string x = def.value_or("");
    if (v.is_null()) {
      if (!def) fail(at(key), "missing required string");
    } else if (!v.is_string()) {
      fail(at(key), "must be a string");
    } else {
      x = v.get<std::string>();
      if (std::find(allowed.begin(), allowed.end(), x) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(at(key), "unknown value '" + x + "' (expected one of " + list + ")");
      }
    }
    out[key] = x;
    return x;
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def,
                              bool positive, bool increasing, bool nonempty = true) {
    const Json& v = raw(key);
    std::vector<double> xs = def.value_or(std::vector<double>{});
    if (v.is_null()) {
      if (!def) fail(at(key), "missing required array of numbers");
    } else if (!v.is_array()) {
      fail(at(key), "must be an array of numbers");
    } else {
      xs.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
          fail(at(key) + "[" + std::to_string(i) + "]", "must be a number");
          continue;
        }
        xs.push_back(v[i].get<double>());
        if (!std::isfinite(xs.back())) fail(at(key) + "[" + std::to_string(i) + "]", "must be finite");
        if (positive && !(xs.back() > 0.0)) {
          fail(at(key) + "[" + std::to_string(i) + "]", "must be positive");
        }
      }
    }
    if (nonempty && xs.empty()) fail(at(key), "must not be empty");
    if (increasing) {
      for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) {
          fail(at(key), "must be strictly increasing");
          break;
        }
      }
    }
    out[key] = xs;
    return xs;
  }

  std::vector<std::int64_t> integers(const std::string& key,
                                     std::optional<std::vector<std::int64_t>> def, bool increasing,
                                     bool nonempty = true) {
    const Json& v = raw(key);
    std::vector<std::int64_t> xs = def.value_or(std::vector<std::int64_t>{});
    if (v.is_null()) {
      if (!def) fail(at(key), "missing required array of integers");
    } else if (!v.is_array()) {
      fail(at(key), "must be an array of integers");
    } else {
      xs.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 0) {
          fail(at(key) + "[" + std::to_string(i) + "]", "must be a nonnegative integer");
          continue;
        }
        xs.push_back(v[i].get<std::int64_t>());
      }
    }
    if (nonempty && xs.empty()) fail(at(key), "must not be empty");
    if (increasing) {
      for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) {
          fail(at(key), "must be strictly increasing");
          break;
        }
      }
    }
    out[key] = xs;
    return xs;
  }

  /// Marks the key as known and returns the raw sub-object (or null).
  const Json& section(const std::string& key) { return raw(key); }

  void finish() {
    for (const auto& [key, value] : in_.items()) {
      if (!seen_.count(key)) fail(at(key), "unknown key '" + key + "'");
    }
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static inline const Json kNull = nullptr;
  const Json& in_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

Json norm_function(const Json& in, const std::string& path, std::vector<std::string>& errors) {
  Fields f(in, path, errors);
  const std::string type =
      f.choice("type", std::nullopt, {"const", "cos", "sin", "coord", "distance"});
  if (type == "const") {
    f.number("value", 0.0);
  } else if (type == "cos" || type == "sin") {
    f.number("freq", 1.0);
    f.number("amplitude", 1.0);
    f.integer("axis", 0);
  } else if (type == "coord") {
    f.integer("axis", 0);
  } else if (type == "distance") {
    f.integer("point", 0);
    f.number("level", 1.0, 0.0, true);
  }
  f.finish();
  return f.out;
}

Json norm_function_list(Fields& parent, const std::string& key, const Json& def,
                        std::vector<std::string>& errors) {
  const Json& raw = parent.section(key);
  const Json& src = raw.is_null() ? def : raw;
  Json out = Json::array();
  if (!src.is_array()) {
    parent.fail(parent.at(key), "must be an array of function specs");
  } else {
    for (std::size_t i = 0; i < src.size(); ++i) {
      out.push_back(norm_function(src[i], parent.at(key) + "[" + std::to_string(i) + "]", errors));
    }
  }
  parent.out[key] = out;
  return out;
}

Json default_distance() { return {{"type", "distance"}, {"point", 0}, {"level", 1.0}}; }

Json norm_space(const Json& in, std::vector<std::string>& errors) {
  const Json& src = in.is_null() ? Json{{"model", Json::object()}} : in;
  if (src.is_object() && src.contains("model")) {
    Fields outer(src, "space", errors);
    Fields f(outer.section("model"), "space.model", errors);
    f.choice("kind", "circle", {"circle", "interval", "torus"});
    f.integer("n", 16, 3);
    f.number("length", 0.0, 0.0);
    f.finish();
    outer.finish();
    return {{"model", f.out}};
  }
  // Inline spaces are validated structurally by the parser itself.
  try {
    space_from_json(src, "space");
  } catch (const std::exception& e) {
    errors.emplace_back(e.what());
  }
  return src;
}

Json norm_family(const Json& in, std::vector<std::string>& errors) {
  Fields f(in, "family", errors);
  f.choice("kind", "circle", {"circle", "interval", "torus"});
  const auto sizes = f.integers("sizes", std::vector<std::int64_t>{8, 16, 32, 64, 128}, true);
  for (auto n : sizes) {
    if (n < 3) f.fail("family.sizes", "every size must be >= 3");
  }
  const auto lim = f.integer("limit_size", 512, 3);
  if (!sizes.empty() && lim <= sizes.back()) {
    f.fail("family.limit_size", "must exceed the largest member size");
  }
  f.number("length", 0.0, 0.0);
  f.finish();
  return f.out;
}

Json norm_coefficients(const Json& in, std::vector<std::string>& errors) {
  Fields f(in, "coefficients", errors);
  const std::string factory =
      f.choice("factory", "trivial", {"trivial", "inline", "resolvent", "eigen"});
  if (factory == "inline") {
    const Json& v = f.section("values");
    if (!v.is_object()) {
      f.fail("coefficients.values", "must be an object");
    } else {
      try {
        reject_unknown_keys(v, {"a", "lambda", "theta1", "theta2", "c"}, "coefficients.values");
      } catch (const std::exception& e) {
        errors.emplace_back(e.what());
      }
      f.out["values"] = v;
    }
  } else if (factory == "resolvent") {
    const Json& g = f.section("g");
    f.out["g"] = norm_function(g.is_null() ? Json{{"type", "cos"}} : g, "coefficients.g", errors);
    const Json& g2 = f.section("g2");
    f.out["g2"] = g2.is_null() ? Json(nullptr) : norm_function(g2, "coefficients.g2", errors);
    const Json& h = f.section("h");
    f.out["h"] = norm_function(h.is_null() ? Json{{"type", "const"}} : h, "coefficients.h", errors);
    f.number("lam", 1.0, 0.0, true);
    f.number("a0", 1.0, 0.0, true);
    f.number("slack", 0.1, 0.0);
  } else if (factory == "eigen") {
    f.integer("k", 1);
    f.integer("k2", 1);
    f.number("slack", 0.1, 0.0);
  }
  f.finish();
  return f.out;
}

Json norm_params(ExperimentKind kind, const Json& in, std::vector<std::string>& errors) {
  Fields f(in, "params", errors);
  switch (kind) {
    case ExperimentKind::kValidate:
      f.integer("n_random", 100, 1);
      f.integer("sector_samples", 256, 1);
      f.numbers("duality_times", std::vector<double>{0.1, 1.0}, true, true);
      f.number("alpha", 1.0, 0.0, true);
      break;
    case ExperimentKind::kSpectrum:
      f.integer("k_max", 8, 1);
      f.numbers("t_grid", std::vector<double>{0.05, 0.1, 0.2, 0.5, 1.0}, true, true);
      f.number("nu", 0.5, 0.0);
      f.boolean("dump_kernels", true);
      break;
    case ExperimentKind::kSimulate: {
      const double horizon = f.number("horizon", 1.0, 0.0, true);
      f.integer("n_paths", 10000, 1);
      f.choice("scheme", "exact", {"exact", "uniformization"});
      {
        Fields init(f.section("initial"), "params.initial", errors);
        const std::string t = init.choice("type", "vertex", {"vertex", "measure"});
        if (t == "vertex") init.integer("vertex", 0);
        init.finish();
        f.out["initial"] = init.out;
      }
      const auto cps = f.numbers("checkpoints", std::vector<double>{0.25, 0.5, 0.75, 1.0}, true, true);
      const auto times = f.numbers("fdd_times", std::vector<double>{0.5, 1.0}, true, true);
      for (double t : cps) {
        if (t > horizon) f.fail("params.checkpoints", "must not exceed the horizon");
      }
      for (double t : times) {
        if (t > horizon) f.fail("params.fdd_times", "must not exceed the horizon");
      }
      const Json fns = norm_function_list(f, "fdd_functions",
                                          Json(std::vector<Json>(times.size(), default_distance())),
                                          errors);
      if (fns.size() != times.size()) {
        f.fail("params.fdd_functions", "needs one function per entry of fdd_times");
      }
      const Json& mf = f.section("martingale_function");
      f.out["martingale_function"] =
          norm_function(mf.is_null() ? default_distance() : mf, "params.martingale_function", errors);
      f.integer("dump_paths", 100, 0);
      f.boolean("markovize", false);
      break;
    }
    case ExperimentKind::kConverge:
      f.number("alpha", 1.0, 0.0, true);
      f.numbers("t_grid", std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0},
                true, true);
      f.integer("test_centers", 8, 1);
      f.numbers("test_levels", std::vector<double>{0.5, 1.0, 2.0}, true, true);
      f.integer("max_products", 8, 0);
      f.number("improvement_factor", 2.0, 1.0);
      break;
    case ExperimentKind::kConserve:
      f.number("T", 1.0, 0.0, true);
      f.number("R", 0.0, 0.0);
      f.numbers("r_grid", std::vector<double>{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0}, true, true);
      f.numbers("exact_times", std::vector<double>{0.1, 1.0, 10.0}, true, true);
      break;
    case ExperimentKind::kFdd: {
      const auto times = f.numbers("times", std::vector<double>{0.5, 1.0}, true, true);
      const Json fns = norm_function_list(
          f, "functions", Json(std::vector<Json>(times.size(), Json{{"type", "cos"}})), errors);
      if (fns.size() != times.size()) f.fail("params.functions", "needs one function per time");
      f.number("improvement_factor", 2.0, 1.0);
      break;
    }
    case ExperimentKind::kTightness: {
      f.number("beta", 4.0, 0.0, true);
      f.number("t", 0.5, 0.0);
      std::vector<double> hs;
      for (int k = 3; k <= 8; ++k) hs.push_back(std::ldexp(1.0, -k));
      std::reverse(hs.begin(), hs.end());
      f.numbers("h_grid", hs, true, true);
      f.choice("mode", "both", {"exact", "mc", "both"});
      f.integer("n_paths", 20000, 1);
      f.integers("starts", std::vector<std::int64_t>{0}, false);
      f.number("eta", 0.05, 0.0, true);
      f.number("epsilon", 0.5, 0.0, true);
      f.boolean("markovize", false);
      break;
    }
  }
  f.finish();
  return f.out;
}

Json norm_tolerances(ExperimentKind kind, const Json& in, std::vector<std::string>& errors) {
  Fields f(in, "tolerances", errors);
  switch (kind) {
    case ExperimentKind::kValidate:
      f.number("form", 1e-12, 0.0);
      f.number("duality", 1e-10, 0.0);
      f.number("resolvent", 1e-9, 0.0);
      break;
    case ExperimentKind::kSpectrum:
      f.number("entry_floor", 1e-10, 0.0);
      break;
    case ExperimentKind::kSimulate:
    case ExperimentKind::kTightness:
      f.number("standard_errors", 4.0, 0.0, true);
      break;
    case ExperimentKind::kConserve:
      f.number("conservative", 1e-10, 0.0);
      break;
    case ExperimentKind::kConverge:
    case ExperimentKind::kFdd:
      break;
  }
  f.finish();
  return f.out;
}

bool uses_family(ExperimentKind k) {
  return k == ExperimentKind::kConverge || k == ExperimentKind::kFdd;
}

}  // namespace

const std::vector<std::string>& experiment_kind_names() {
  static const std::vector<std::string> names{"validate", "spectrum", "simulate", "converge",
                                              "conserve", "fdd",      "tightness"};
  return names;
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  const auto& names = experiment_kind_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<ExperimentKind>(i);
  }
  return std::nullopt;
}

std::string to_string(ExperimentKind kind) {
  return experiment_kind_names()[static_cast<std::size_t>(kind)];
}

ConfigResult normalize_config(const Json& raw, std::optional<ExperimentKind> kind) {
  ConfigResult res;
  auto& errors = res.errors;
  if (!raw.is_object()) {
    errors.emplace_back("config: top level must be a JSON object");
    return res;
  }
  Fields top(raw, "", errors);
  const Json& k = top.section("kind");
  std::optional<ExperimentKind> resolved = kind;
  if (!k.is_null()) {
    const auto parsed = k.is_string() ? parse_experiment_kind(k.get<std::string>()) : std::nullopt;
    if (!parsed) {
      errors.emplace_back("kind: unknown experiment kind " + k.dump());
    } else if (kind && *parsed != *kind) {
      errors.emplace_back("kind: config declares '" + to_string(*parsed) +
                          "' but the subcommand is '" + to_string(*kind) + "'");
    } else {
      resolved = parsed;
    }
  }
  if (!resolved) {
    if (k.is_null()) errors.emplace_back("kind: missing experiment kind");
    top.finish();
    return res;
  }
  top.out["kind"] = to_string(*resolved);
  top.u64("seed", 0);
  top.integer("threads", 1, 1);
  {
    const Json& o = top.section("out");
    if (o.is_null()) {
      top.out["out"] = "dlab-out";
    } else if (!o.is_string() || o.get<std::string>().empty()) {
      errors.emplace_back("out: must be a non-empty string");
    } else {
      top.out["out"] = o;
    }
  }
  if (uses_family(*resolved)) {
    top.out["family"] = norm_family(top.section("family"), errors);
    if (top.has("space")) errors.emplace_back("space: not used by '" + to_string(*resolved) + "' (use family)");
  } else {
    top.out["space"] = norm_space(top.section("space"), errors);
    if (top.has("family")) errors.emplace_back("family: not used by '" + to_string(*resolved) + "' (use space)");
  }
  top.out["coefficients"] = norm_coefficients(top.section("coefficients"), errors);
  top.out["params"] = norm_params(*resolved, top.section("params"), errors);
  top.out["tolerances"] = norm_tolerances(*resolved, top.section("tolerances"), errors);
  top.finish();
  res.normalized = std::move(top.out);
  return res;
}

ConfigResult load_config(const std::string& path, std::optional<ExperimentKind> kind) {
  std::ifstream in(path);
  if (!in) {
    ConfigResult r;
    r.errors.push_back(path + ": cannot open config file");
    return r;
  }
  Json raw;
  try {
    raw = Json::parse(in);
  } catch (const Json::parse_error& e) {
    ConfigResult r;
    r.errors.push_back(path + ": JSON parse error at byte " + std::to_string(e.byte) + ": " +
                       e.what());
    return r;
  }
  return normalize_config(raw, kind);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_dump(const Json& j) { return j.dump(2); }

AmbientFunction make_function(const Json& spec) {
  const std::string type = spec.at("type").get<std::string>();
  if (type == "const") {
    const double v = spec.at("value").get<double>();
    return [v](const AmbientSpace&, Index) { return v; };
  }
  if (type == "cos" || type == "sin") {
    const double freq = spec.at("freq").get<double>();
    const double amp = spec.at("amplitude").get<double>();
    const auto axis = spec.at("axis").get<Eigen::Index>();
    const bool is_cos = type == "cos";
    return [=](const AmbientSpace& a, Index p) {
      require(a.coords() && axis < a.coords()->cols(), "function axis is not an ambient coordinate");
      const double x = (*a.coords())(static_cast<Eigen::Index>(p), axis);
      return amp * (is_cos ? std::cos(freq * x) : std::sin(freq * x));
    };
  }
  if (type == "coord") {
    const auto axis = spec.at("axis").get<Eigen::Index>();
    return [axis](const AmbientSpace& a, Index p) {
      require(a.coords() && axis < a.coords()->cols(), "function axis is not an ambient coordinate");
      return (*a.coords())(static_cast<Eigen::Index>(p), axis);
    };
  }
  const auto point = spec.at("point").get<Index>();
  const double level = spec.at("level").get<double>();
  return [point, level](const AmbientSpace& a, Index p) {
    require(point < a.size(), "distance function point is not an ambient point");
    return std::min(a.distance(point, p), level);
  };
}

}  // namespace dlab::lab
