#include "experiments.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <dlab/diagnostics.hpp>
#include <dlab/diffusion_sim.hpp>
#include <dlab/dirichlet_form.hpp>
#include <dlab/semigroup.hpp>

#include "config.hpp"

#ifndef DLAB_VERSION
#define DLAB_VERSION "unknown"
#endif

namespace dlab::lab {
namespace fs = std::filesystem;

namespace {

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec random_field(std::mt19937_64& rng, Index n) {
  Vec v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 2.0 * u01(rng) - 1.0;
  return v;
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  require(static_cast<bool>(os), "cannot write " + p.string());
  os << text;
}

std::vector<VertexField> restrict_all(const DiscreteSpace& s, const std::vector<AmbientFunction>& fs) {
  std::vector<VertexField> out;
  for (const auto& f : fs) out.push_back(s.restrict(f));
  return out;
}

std::vector<AmbientFunction> functions_from(const Json& list) {
  std::vector<AmbientFunction> out;
  for (const auto& spec : list) out.push_back(make_function(spec));
  return out;
}

SpaceSequence single(const DiscreteSpace& s) { return SpaceSequence{s.ambient(), {}, s}; }

class Runner {
 public:
  Runner(const Json& cfg, fs::path out, std::ostream& log)
      : cfg_(cfg), out_(std::move(out)), log_(log), params_(cfg.at("params")),
        tol_(cfg.at("tolerances")) {}

  std::string stage = "setup";
  std::vector<Check> checks;
  Json info = Json::object();

  void check(const std::string& name, bool pass, double value, double threshold) {
    checks.push_back({name, pass, value, threshold});
    log_ << (pass ? "PASS " : "FAIL ") << name << " value=" << format_double(value)
         << " threshold=" << format_double(threshold) << '\n';
  }

  void csv(const std::string& name, const std::string& text) { write_text(out_ / name, text); }

  std::uint64_t seed() const { return cfg_.at("seed").get<std::uint64_t>(); }
  unsigned threads() const { return cfg_.at("threads").get<unsigned>(); }

  void run() {
    const std::string kind = cfg_.at("kind").get<std::string>();
    if (kind == "validate") return validate();
    if (kind == "spectrum") return spectrum();
    if (kind == "simulate") return simulate();
    if (kind == "converge") return converge();
    if (kind == "conserve") return conserve();
    if (kind == "fdd") return fdd();
    if (kind == "tightness") return tightness();
    throw Error("unsupported experiment kind " + kind);
  }

 private:
  const Json& cfg_;
  fs::path out_;
  std::ostream& log_;
  const Json& params_;
  const Json& tol_;

  struct Setup {
    DiscreteSpace space;
    CoefficientSet coeffs;
  };

  Setup setup_single() {
    stage = "space";
    DiscreteSpace space = build_space(cfg_.at("space"));
    stage = "coefficients";
    CoefficientSet co = build_coefficients(cfg_.at("coefficients"), space);
    return {std::move(space), std::move(co)};
  }

  GeneratorPair sampling_generators(const Setup& s, const FormAssembly& form) {
    if (params_.at("markovize").get<bool>()) {
      const UpwindResult up = markovize_upwind(s.space, s.coeffs);
      info["upwind_modification_norm"] = up.modification_norm;
      info["upwind_operator_change"] = up.operator_change;
      return up.generators;
    }
    return generators(form);
  }

  void validate() {
    const Setup s = setup_single();
    stage = "assemble";
    const FormAssembly form = assemble(s.space, s.coeffs);
    const AssumptionReport& rep = form.assumptions;
    check("assumptions", rep.ok(), rep.min_a, s.coeffs.lambda);
    info["assumptions"] = {{"elliptic", rep.elliptic},
                           {"positivity_1", rep.positivity_1},
                           {"positivity_2", rep.positivity_2},
                           {"symmetric_a", rep.symmetric_a}};

    stage = "form_axioms";
    std::mt19937_64 rng(seed());
    const double tol = tol_.at("form").get<double>();
    const auto n_random = params_.at("n_random").get<Index>();
    std::ostringstream table;
    table << "sample,energy,lambda_cheeger\n";
    double worst = 0.0;
    for (Index i = 0; i < n_random; ++i) {
      const Vec f = random_field(rng, s.space.size());
      const double e = form.energy(f);
      const double lch = form.lambda * cheeger_energy(s.space, f);
      table << i << ',' << format_double(e) << ',' << format_double(lch) << '\n';
      const double scale = std::max(std::abs(e), 1e-300);
      worst = std::max({worst, (lch - e) / scale, -lch / scale});
    }
    csv("form_samples.csv", table.str());
    check("form_lower_bound", worst <= tol, worst, tol);

    stage = "sector";
    const SectorConstant sc =
        sector_constant(form, params_.at("sector_samples").get<Index>(), seed());
    info["sector"] = {{"analytic", sc.analytic}, {"measured", sc.measured}, {"sampled", sc.sampled}};
    check("sector_constant", sc.measured <= sc.analytic * (1.0 + 1e-12), sc.measured, sc.analytic);

    stage = "duality";
    const GeneratorPair gen = generators(form);
    info["markov"] = {{"nonnegative", gen.markov.nonnegative},
                      {"min_offdiag_L", gen.markov.min_offdiag_L},
                      {"min_offdiag_L_hat", gen.markov.min_offdiag_L_hat}};
    const SemigroupEvaluator T(gen.L, gen.m), Th(gen.L_hat, gen.m);
    const Vec f = random_field(rng, s.space.size());
    const Vec g = random_field(rng, s.space.size());
    double dual_worst = 0.0;
    for (const auto& tj : params_.at("duality_times")) {
      const double t = tj.get<double>();
      const double lhs = inner_m(T.evolve(f, t), g, gen.m);
      const double rhs = inner_m(f, Th.evolve(g, t), gen.m);
      dual_worst = std::max(dual_worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    const double dtol = tol_.at("duality").get<double>();
    check("semigroup_duality", dual_worst <= dtol, dual_worst, dtol);

    stage = "resolvent";
    const double alpha = params_.at("alpha").get<double>();
    const double rres = resolvent_form_residual(form, f, alpha);
    const double rtol = tol_.at("resolvent").get<double>();
    check("resolvent_form_identity", rres <= rtol, rres, rtol);
    const Mat Ga = T.resolvent_matrix(alpha), Gb = T.resolvent_matrix(2.0 * alpha);
    const double eq = ((Ga - Gb) - alpha * Ga * Gb).cwiseAbs().maxCoeff();
    check("resolvent_equation", eq <= dtol, eq, dtol);
  }

  void spectrum() {
    const Setup s = setup_single();
    stage = "spectrum";
    const Index k = std::min<Index>(params_.at("k_max").get<Index>(), s.space.size());
    const Spectrum sp = cheeger_spectrum(s.space, k);
    std::ostringstream os;
    os << "k,eigenvalue\n";
    for (Eigen::Index i = 0; i < sp.values.size(); ++i) {
      os << i << ',' << format_double(sp.values[i]) << '\n';
    }
    csv("spectrum.csv", os.str());
    const double floor_ok = -1e-10 * std::max(1.0, sp.values.cwiseAbs().maxCoeff());
    check("spectrum_nonnegative", sp.values[0] >= floor_ok, sp.values[0], floor_ok);

    stage = "heat_kernel";
    const FormAssembly form = assemble(s.space, s.coeffs);
    const GeneratorPair gen = generators(form);
    const SemigroupMethod method = SemigroupEvaluator::is_self_adjoint(gen.L, gen.m)
                                       ? SemigroupMethod::kSpectral
                                       : SemigroupMethod::kDenseExponential;
    const SemigroupEvaluator ev(gen.L, gen.m, method);
    std::vector<HeatKernel> kernels;
    for (const auto& tj : params_.at("t_grid")) kernels.push_back(heat_kernel(ev, tj.get<double>()));
    if (params_.at("dump_kernels").get<bool>()) {
      std::ostringstream ks;
      write_kernel_csv(ks, kernels);
      csv("kernels.csv", ks.str());
    }

    stage = "gaussian_fit";
    const Mat metric = shortest_path_metric(s.space);
    GaussianFitOptions opt;
    opt.entry_floor = tol_.at("entry_floor").get<double>();
    const GaussianFit fit = gaussian_bound_fit(kernels, s.space, metric, opt);
    info["gaussian_fit"] = {{"C1", fit.C1},
                            {"C2", fit.C2},
                            {"nu", fit.nu},
                            {"worst_ratio", fit.worst_ratio},
                            {"samples_used", fit.samples_used},
                            {"samples_below_floor", fit.samples_below_floor}};
    check("gaussian_bound", fit.holds, fit.worst_ratio, 1.0);
    const double nu = params_.at("nu").get<double>();
    const double bg = bishop_gromov_constant(s.space, metric, nu);
    check("bishop_gromov", bg > 0.0, bg, 0.0);
  }

  void simulate() {
    const Setup s = setup_single();
    stage = "generators";
    const FormAssembly form = assemble(s.space, s.coeffs);
    const GeneratorPair gen = sampling_generators(s, form);

    stage = "sampling";
    SimConfig sc;
    sc.horizon = params_.at("horizon").get<double>();
    sc.n_paths = params_.at("n_paths").get<Index>();
    sc.seed = seed();
    sc.threads = threads();
    sc.scheme = params_.at("scheme").get<std::string>() == "exact" ? Scheme::kExactJump
                                                                  : Scheme::kUniformization;
    const Json& init = params_.at("initial");
    sc.initial = init.at("type").get<std::string>() == "measure"
                     ? InitialLaw::measure()
                     : InitialLaw::at(init.at("vertex").get<Index>());
    const auto paths = sample_paths(gen.L, gen.m, sc);
    const auto dump = std::min<Index>(params_.at("dump_paths").get<Index>(), paths.size());
    std::ostringstream ps;
    write_paths_csv(ps, std::vector<PathSample>(paths.begin(), paths.begin() +
                                                                   static_cast<std::ptrdiff_t>(dump)));
    csv("paths.csv", ps.str());

    stage = "fdd";
    const double k = tol_.at("standard_errors").get<double>();
    const auto times = params_.at("fdd_times").get<std::vector<double>>();
    const auto fvals = restrict_all(s.space, functions_from(params_.at("fdd_functions")));
    const Vec p0 = sc.initial.probabilities(s.space.size(), gen.m);
    const FddComparison cmp = compare_fdd(paths, gen.L, p0, times, fvals);
    std::ostringstream fs_;
    fs_ << "estimate,std_error,exact\n"
        << format_double(cmp.estimate.value) << ',' << format_double(cmp.estimate.std_error) << ','
        << format_double(cmp.exact) << '\n';
    csv("fdd.csv", fs_.str());
    const double z = cmp.estimate.std_error > 0.0
                         ? std::abs(cmp.estimate.value - cmp.exact) / cmp.estimate.std_error
                         : (cmp.estimate.within(cmp.exact, k) ? 0.0 : INFINITY);
    check("fdd_consistency", cmp.estimate.within(cmp.exact, k), z, k);

    stage = "martingale";
    const VertexField mf = s.space.restrict(make_function(params_.at("martingale_function")));
    const auto cps = params_.at("checkpoints").get<std::vector<double>>();
    const MartingaleStats ms = martingale_residuals(paths, gen.L, mf, cps);
    std::ostringstream mt;
    mt << "checkpoint,mean,std_error\n";
    double zmax = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      mt << format_double(cps[i]) << ',' << format_double(ms.mean[i].value) << ','
         << format_double(ms.mean[i].std_error) << '\n';
      ok = ok && ms.mean[i].within(0.0, k);
      if (ms.mean[i].std_error > 0.0) {
        zmax = std::max(zmax, std::abs(ms.mean[i].value) / ms.mean[i].std_error);
      }
    }
    csv("martingale.csv", mt.str());
    check("martingale_mean", ok, zmax, k);
  }

  void converge() {
    stage = "family";
    const SpaceSequence seq = build_family(cfg_.at("family"));
    stage = "coefficients";
    const CoefficientSequence co = build_coefficient_sequence(cfg_.at("coefficients"), seq);
    stage = "test_family";
    const auto count = std::min<Index>(params_.at("test_centers").get<Index>(), seq.limit.size());
    std::vector<Index> centers;
    for (Index i = 0; i < count; ++i) centers.push_back(seq.limit.embed()[i * seq.limit.size() / count]);
    const TestFamily tests = build_test_family(seq.ambient, centers,
                                               params_.at("test_levels").get<std::vector<double>>(),
                                               params_.at("max_products").get<Index>());
    info["test_functions"] = tests.size();

    stage = "coefficient_defects";
    const ConvergenceReport coeff_rep = coefficient_convergence_defects(seq, co, tests);
    stage = "resolvent_semigroup";
    const ConvergenceReport rs = resolvent_semigroup_convergence(
        seq, co, params_.at("alpha").get<double>(),
        params_.at("t_grid").get<std::vector<double>>(), tests);
    ConvergenceReport all = coeff_rep;
    all.records.insert(all.records.end(), rs.records.begin(), rs.records.end());
    std::ostringstream os;
    write_convergence_csv(os, all);
    csv("convergence.csv", os.str());

    const double factor = params_.at("improvement_factor").get<double>();
    for (const std::string name : {"S", "R"}) {
      const auto series = rs.series(name);
      const double ratio = series.back() / series.front();
      check(name + "_defect_improvement", series.back() < series.front() / factor, ratio,
            1.0 / factor);
    }
    info["non_monotone_checks"] = all.non_monotone();
  }

  void conserve() {
    const Setup s = setup_single();
    stage = "criterion";
    ConservativenessOptions opt;
    opt.T = params_.at("T").get<double>();
    opt.R = params_.at("R").get<double>();
    opt.r_grid = params_.at("r_grid").get<std::vector<double>>();
    opt.exact_times = params_.at("exact_times").get<std::vector<double>>();
    const ConservativenessReport rep = conservativeness_criterion(s.space, s.coeffs, opt);
    std::ostringstream os;
    os << "r,ball_measure,max_energy,argument,product\n";
    for (const auto& r : rep.criterion_table) {
      os << format_double(r.r) << ',' << format_double(r.ball_measure) << ','
         << format_double(r.max_energy) << ',' << format_double(r.argument) << ','
         << format_double(r.product) << '\n';
    }
    csv("criterion.csv", os.str());
    info["criterion_applicable"] = rep.applicable;
    info["drift_bound_constant"] = rep.drift_bound_constant;
    check("criterion_decreasing", rep.criterion_decreasing,
          rep.criterion_table.empty() ? 0.0 : rep.criterion_table.back().product, 0.0);

    stage = "semigroup_mass";
    const GeneratorPair gen = generators(assemble(s.space, s.coeffs));
    const bool conservative_regime = rep.div_matches[1];
    info["regime"] = conservative_regime ? "conservative" : "sub_markov";
    const double tol = tol_.at("conservative").get<double>();
    std::ostringstream ms;
    ms << "t,min_mass,max_mass,defect\n";
    for (double t : opt.exact_times) {
      const Vec mass = evolve(gen.L, Vec::Ones(gen.L.rows()), t);
      const double defect = (mass.array() - 1.0).abs().maxCoeff();
      ms << format_double(t) << ',' << format_double(mass.minCoeff()) << ','
         << format_double(mass.maxCoeff()) << ',' << format_double(defect) << '\n';
      const std::string tag = "t=" + format_double(t);
      if (conservative_regime) {
        check("conservative_" + tag, defect <= tol, defect, tol);
      } else {
        const bool sub = mass.minCoeff() >= -1e-12 && mass.maxCoeff() <= 1.0 + 1e-12;
        check("sub_markov_" + tag, sub, mass.maxCoeff(), 1.0);
        check("mass_loss_" + tag, mass.cwiseAbs().maxCoeff() < 1.0, mass.cwiseAbs().maxCoeff(),
              1.0);
      }
    }
    csv("mass.csv", ms.str());
  }

  void fdd() {
    stage = "family";
    const SpaceSequence seq = build_family(cfg_.at("family"));
    stage = "coefficients";
    const CoefficientSequence co = build_coefficient_sequence(cfg_.at("coefficients"), seq);
    stage = "fdd";
    const auto times = params_.at("times").get<std::vector<double>>();
    const auto defects =
        fdd_convergence_defect(seq, co, times, functions_from(params_.at("functions")));
    std::ostringstream os;
    os << "member_index,vertices,defect\n";
    for (std::size_t i = 0; i < defects.size(); ++i) {
      os << i << ',' << seq.members[i].size() << ',' << format_double(defects[i]) << '\n';
    }
    csv("fdd.csv", os.str());
    const double factor = params_.at("improvement_factor").get<double>();
    check("fdd_defect_improvement", defects.back() < defects.front() / factor,
          defects.back() / defects.front(), 1.0 / factor);
  }

  void tightness() {
    const Setup s = setup_single();
    stage = "generators";
    const FormAssembly form = assemble(s.space, s.coeffs);
    const GeneratorPair gen = sampling_generators(s, form);
    const Mat metric = shortest_path_metric(s.space);
    KolmogorovOptions opt;
    opt.beta = params_.at("beta").get<double>();
    opt.t = params_.at("t").get<double>();
    opt.h_grid = params_.at("h_grid").get<std::vector<double>>();
    opt.starts = params_.at("starts").get<std::vector<Index>>();
    for (Index x : opt.starts) require(x < s.space.size(), "tightness start vertex out of range");
    opt.n_paths = params_.at("n_paths").get<Index>();
    opt.seed = seed();
    opt.threads = threads();
    const std::string mode = params_.at("mode").get<std::string>();
    const double k = tol_.at("standard_errors").get<double>();

    std::optional<KolmogorovResult> exact, mc;
    if (mode != "mc") {
      stage = "exact_moments";
      exact = kolmogorov_moment(gen.L, gen.m, metric, MomentMode::kExact, opt);
      check("theta_exact", exact->theta > 1.0, exact->theta, 1.0);
      info["exact"] = {{"C", exact->C}, {"theta", exact->theta}};
    }
    if (mode != "exact") {
      stage = "mc_moments";
      mc = kolmogorov_moment(gen.L, gen.m, metric, MomentMode::kMonteCarlo, opt);
      info["mc"] = {{"C", mc->C},
                    {"theta", mc->theta},
                    {"modulus_exceedance", mc->modulus_exceedance}};
      if (!exact) check("theta_mc", mc->theta > 1.0, mc->theta, 1.0);
    }
    std::ostringstream os;
    os << "start,h,exact,mc,std_error\n";
    double zmax = 0.0;
    bool agree = true;
    const auto& starts = exact ? exact->starts : mc->starts;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      for (std::size_t j = 0; j < opt.h_grid.size(); ++j) {
        const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
        os << starts[i] << ',' << format_double(opt.h_grid[j]) << ','
           << (exact ? format_double(exact->moments(r, c)) : "") << ','
           << (mc ? format_double(mc->moments(r, c)) : "") << ','
           << (mc ? format_double(mc->std_errors(r, c)) : "") << '\n';
        if (exact && mc) {
          const Estimate e{mc->moments(r, c), mc->std_errors(r, c)};
          agree = agree && e.within(exact->moments(r, c), k);
          if (e.std_error > 0.0) {
            zmax = std::max(zmax, std::abs(e.value - exact->moments(r, c)) / e.std_error);
          }
        }
      }
    }
    csv("kolmogorov.csv", os.str());
    if (exact && mc) check("mc_agrees_with_exact", agree, zmax, k);
  }
};

}  // namespace

bool RunOutcome::all_pass() const {
  if (!failed_stage.empty()) return false;
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

DiscreteSpace build_space(const Json& space_cfg) {
  if (space_cfg.contains("model")) {
    const Json& m = space_cfg.at("model");
    return model_space(parse_model_kind(m.at("kind").get<std::string>()), m.at("n").get<Index>(),
                       m.at("length").get<double>());
  }
  return space_from_json(space_cfg);
}

SpaceSequence build_family(const Json& f) {
  ModelFamily fam;
  fam.kind = parse_model_kind(f.at("kind").get<std::string>());
  fam.sizes = f.at("sizes").get<std::vector<Index>>();
  fam.limit_size = f.at("limit_size").get<Index>();
  fam.length = f.at("length").get<double>();
  return model_sequence(fam);
}

namespace {

CoefficientSequence factory_sequence(const Json& c, const SpaceSequence& seq) {
  const std::string factory = c.at("factory").get<std::string>();
  if (factory == "resolvent") {
    std::optional<AmbientFunction> g2;
    if (!c.at("g2").is_null()) g2 = make_function(c.at("g2"));
    return resolvent_coefficients(seq, make_function(c.at("g")), c.at("lam").get<double>(),
                                  c.at("a0").get<double>(), make_function(c.at("h")),
                                  c.at("slack").get<double>(), g2);
  }
  if (factory == "eigen") {
    return eigen_coefficients(seq, c.at("k").get<Index>(), c.at("k2").get<Index>(),
                              c.at("slack").get<double>());
  }
  CoefficientSequence out;
  for (const auto& s : seq.members) out.members.push_back(CoefficientSet::trivial(s));
  out.limit = CoefficientSet::trivial(seq.limit);
  require(factory == "trivial", "coefficient factory '" + factory + "' needs a single space");
  return out;
}

}  // namespace

CoefficientSet build_coefficients(const Json& c, const DiscreteSpace& space) {
  if (c.at("factory").get<std::string>() == "inline") {
    return coefficients_from_json(c.at("values"), space, "coefficients.values");
  }
  return factory_sequence(c, single(space)).limit;
}

CoefficientSequence build_coefficient_sequence(const Json& c, const SpaceSequence& seq) {
  return factory_sequence(c, seq);
}

RunOutcome run_experiment(const Json& config, const fs::path& out, std::ostream& log) {
  RunOutcome outcome;
  fs::create_directories(out);
  const fs::path marker = out / ".partial";
  write_text(marker, "");
  const std::string canon = canonical_dump(config);
  Json manifest = {{"tool", "dirichlet-lab"},
                   {"version", DLAB_VERSION},
                   {"config_hash", "fnv1a64:" + hex64(fnv1a64(canon))},
                   {"timestamp", utc_timestamp()},
                   {"libraries",
                    {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
                   {"config", config}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");

  Runner runner(config, out, log);
  try {
    runner.run();
  } catch (const std::exception& e) {
    outcome.failed_stage = runner.stage;
    outcome.error = e.what();
    log << "error in stage '" << runner.stage << "': " << e.what() << '\n';
  }
  outcome.checks = runner.checks;

  Json checks = Json::array();
  for (const auto& c : outcome.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value},
                      {"threshold", c.threshold}});
  }
  Json summary = {{"kind", config.at("kind")},
                  {"all_pass", outcome.all_pass()},
                  {"checks", checks},
                  {"info", runner.info}};
  if (!outcome.failed_stage.empty()) {
    summary["failed_stage"] = outcome.failed_stage;
    summary["error"] = outcome.error;
    write_text(out / "summary.json", summary.dump(2) + "\n");
    outcome.exit_code = 2;
    return outcome;
  }
  write_text(out / "summary.json", summary.dump(2) + "\n");
  fs::remove(marker);
  outcome.exit_code = outcome.all_pass() ? 0 : 1;
  return outcome;
}

}  // namespace dlab::lab
