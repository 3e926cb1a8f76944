#pragma once

// Continuous-time Markov chain sampling of the killed process behind a
// generator, plus the path-level checks: Dynkin martingales, the Lyons-Zheng
// forward/backward reconstruction, Kolmogorov moments and time reversal.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "dlab/common.hpp"
#include "dlab/dirichlet_form.hpp"

namespace dlab {

/// Jump rates to neighbors plus a killing rate to the cemetery.
struct JumpChain {
  Vec total_rate;  // q(x) = sum_{y != x} L(x,y) + kappa(x)
  Vec killing;     // kappa(x) = -sum_y L(x,y), clamped at 0
  std::vector<std::vector<std::pair<Index, double>>> jumps;
  /// Vertices whose raw killing rate was below -1e-12 before clamping.
  std::vector<Index> clamped;

  /// Throws naming the first negative off-diagonal entry.
  static JumpChain from_generator(const Mat& L);
  Index size() const { return static_cast<Index>(total_rate.size()); }
};

constexpr double kAlive = std::numeric_limits<double>::infinity();
constexpr int kCemetery = -1;

/// Piecewise-constant right-continuous path. states[i] holds on
/// [times[i], times[i+1]); after `lifetime` the path sits at the cemetery.
struct PathSample {
  std::vector<double> times;
  std::vector<Index> states;
  double lifetime = kAlive;
  std::uint64_t seed = 0;
  Index id = 0;

  /// State at time t, or nullopt once killed (t >= lifetime).
  std::optional<Index> state_at(double t) const;
  bool alive_at(double t) const { return t < lifetime; }
  /// int_a^b g(S_s) ds over the alive part of [a, b].
  double integral(const Vec& g, double a, double b) const;
  /// omega((T - s)-) for s in [0, T]; requires lifetime > T.
  PathSample reversed(double T) const;
};

enum class Scheme { kExactJump, kUniformization };

struct InitialLaw {
  enum class Kind { kVertex, kDistribution, kMeasure } kind = Kind::kVertex;
  Index vertex = 0;
  Vec distribution;  // for kDistribution

  static InitialLaw at(Index x) { return {Kind::kVertex, x, {}}; }
  static InitialLaw from(Vec p) { return {Kind::kDistribution, 0, std::move(p)}; }
  static InitialLaw measure() { return {Kind::kMeasure, 0, {}}; }
  /// Probability vector over n vertices.
  Vec probabilities(Index n, const Vec& m) const;
};

struct SimConfig {
  double horizon = 1.0;
  Index n_paths = 1000;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::kExactJump;
  InitialLaw initial;
  unsigned threads = 1;
};

/// Per-path seed derived from (seed, index); independent of thread fan-out.
std::uint64_t path_seed(std::uint64_t seed, Index index);

std::vector<PathSample> sample_paths(const Mat& L, const Vec& m, const SimConfig& config);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;

  bool within(double exact, double k = 4.0) const {
    return std::abs(value - exact) <= k * std_error + 1e-14;
  }
};

/// Mean and standard error with compensated summation.
Estimate mean_estimate(const std::vector<double>& xs);

/// E[prod_j f_j(S_{t_j})] with f(cemetery) = 0.
Estimate empirical_fdd(const std::vector<PathSample>& paths, const std::vector<double>& times,
                       const std::vector<VertexField>& fs);

struct FddComparison {
  Estimate estimate;
  double exact = 0.0;
  bool consistent = false;  // within 4 standard errors
};

FddComparison compare_fdd(const std::vector<PathSample>& paths, const Mat& L,
                          const Vec& initial_probabilities, const std::vector<double>& times,
                          const std::vector<VertexField>& fs);

struct MartingaleStats {
  std::vector<double> checkpoints;
  std::vector<Estimate> mean;            // of M_t at each checkpoint
  std::vector<Estimate> increment_cov;   // E[dM_i dM_{i+1}] for consecutive windows
  bool consistent = false;               // all within 4 SE of 0
};

/// M_t = f(S_t) - f(S_0) - int_0^{t ^ zeta} Lf(S_s) ds with f(cemetery) = 0.
double dynkin_martingale(const PathSample& path, const Mat& L, const VertexField& f, double t);

MartingaleStats martingale_residuals(const std::vector<PathSample>& paths, const Mat& L,
                                     const VertexField& f, const std::vector<double>& checkpoints);

struct LyonsZhengStats {
  std::vector<double> checkpoints;
  double max_residual = 0.0;          // with drift -1/2 int (L_hat - L) f
  double max_literal_residual = 0.0;  // with the divergence-sign-flipped drift
  std::vector<double> residual_at;    // per checkpoint
  std::vector<Estimate> forward_mean;  // E[M_t] over surviving primal paths
  std::vector<Estimate> dual_mean;     // E[M^_t] over surviving dual paths
  Index paths_used = 0;
};

/// f(S_t) - f(S_0) = 1/2 M_t - 1/2 (M^_T(r_T) - M^_{T-t}(r_T)) - 1/2 int_0^t (L_hat - L) f,
/// with (L_hat - L) f evaluated through the derivations, on paths surviving T.
LyonsZhengStats lyons_zheng_residual(const FormAssembly& form, const GeneratorPair& gen,
                                     const std::vector<PathSample>& primal,
                                     const std::vector<PathSample>& dual, const VertexField& f,
                                     double T, const std::vector<double>& checkpoints);

enum class MomentMode { kExact, kMonteCarlo };

struct KolmogorovOptions {
  double beta = 4.0;
  double t = 0.5;
  std::vector<double> h_grid;
  std::vector<Index> starts;  // defaults to every vertex (exact) / basepoint 0 (mc)
  Index n_paths = 20000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double eta = 0.05;     // modulus window
  double epsilon = 0.5;  // modulus exceedance level
};

struct KolmogorovResult {
  /// moments(i, j): E^{x_i}[min(d,1)^beta(S_t, S_{t+h_j})].
  Mat moments;
  std::vector<Index> starts;
  Vec sup_moment;  // over starts, per h
  double C = 0.0;
  double theta = 0.0;
  /// Monte Carlo mode only.
  Mat std_errors;
  double modulus_exceedance = 0.0;
};

KolmogorovResult kolmogorov_moment(const Mat& L, const Vec& m, const Mat& metric,
                                   MomentMode mode, const KolmogorovOptions& options);

/// prod_j f_j(S_{s_j}).
struct TimeFunctional {
  std::vector<double> times;
  std::vector<VertexField> fs;
};

/// E_mu[prod_j g_j(S_{u_j}) 1{zeta > horizon}] by nested kernels; times need
/// not be sorted.
double exact_path_expectation(const Mat& L, const Vec& mu, const std::vector<double>& times,
                              const std::vector<VertexField>& fs, double horizon);

struct TimeReversalResult {
  double mc_defect = 0.0;    // max over functionals
  double combined_se = 0.0;  // at the maximizing functional
  bool consistent = false;   // every functional within 4 combined SE
  double exact_defect = 0.0;
  std::vector<Estimate> reversed_primal;
  std::vector<Estimate> dual;
  std::vector<double> exact_reversed_primal;
  std::vector<double> exact_dual;
};

/// Compares E^m[F(r_T omega); zeta > T] under the primal chain with
/// E^m[F(omega); zeta > T] under the dual chain, both started from m/m(X).
TimeReversalResult time_reversal_check(const GeneratorPair& gen, double T,
                                       const std::vector<TimeFunctional>& functionals,
                                       Index n_paths, std::uint64_t seed, unsigned threads = 1);

}  // namespace dlab
