#include "dlab/diffusion_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "dlab/calculus.hpp"
#include "dlab/semigroup.hpp"

namespace dlab {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// [0, 1) with 53 random bits; platform independent unlike the std
// distributions.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

template <typename Fn>
void parallel_for(Index count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<Index>(count, 1))));
  if (threads == 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  const Index chunk = (count + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const Index lo = w * chunk;
    const Index hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (Index i = lo; i < hi; ++i) fn(i);
    });
  }
}

Index draw(const Vec& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.data(), cumulative.data() + cumulative.size(), u);
  return std::min<Index>(static_cast<Index>(it - cumulative.data()),
                         static_cast<Index>(cumulative.size()) - 1);
}

}  // namespace

JumpChain JumpChain::from_generator(const Mat& L) {
  require(L.rows() == L.cols(), "generator must be square");
  const auto n = L.rows();
  const double scale = std::max(1.0, L.cwiseAbs().maxCoeff());
  JumpChain jc;
  jc.total_rate = Vec::Zero(n);
  jc.killing = Vec::Zero(n);
  jc.jumps.assign(static_cast<std::size_t>(n), {});
  for (Eigen::Index x = 0; x < n; ++x) {
    double out = 0.0;
    for (Eigen::Index y = 0; y < n; ++y) {
      if (x == y) continue;
      double r = L(x, y);
      if (r < 0.0) {
        if (r < -1e-13 * scale) {
          std::ostringstream os;
          os << "negative jump rate L(" << x << "," << y << ") = " << r
             << "; apply markovize_upwind before sampling";
          throw Error(os.str());
        }
        r = 0.0;
      }
      if (r > 0.0) {
        jc.jumps[static_cast<std::size_t>(x)].emplace_back(static_cast<Index>(y), r);
        out += r;
      }
    }
    const double kappa = -L.row(x).sum();
    if (kappa < -1e-12) jc.clamped.push_back(static_cast<Index>(x));
    jc.killing[x] = std::max(0.0, kappa);
    jc.total_rate[x] = out + jc.killing[x];
  }
  return jc;
}

std::optional<Index> PathSample::state_at(double t) const {
  if (t >= lifetime || times.empty()) return std::nullopt;
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return states.front();
  return states[static_cast<std::size_t>(it - times.begin()) - 1];
}

double PathSample::integral(const Vec& g, double a, double b) const {
  b = std::min(b, lifetime);
  double acc = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double lo = std::max(a, times[i]);
    const double hi = std::min(b, i + 1 < times.size() ? times[i + 1] : b);
    if (hi > lo) acc += g[static_cast<Eigen::Index>(states[i])] * (hi - lo);
  }
  return acc;
}

PathSample PathSample::reversed(double T) const {
  require(lifetime > T, "time reversal requires a path surviving the horizon");
  PathSample r;
  r.seed = seed;
  r.id = id;
  std::size_t k = 0;
  while (k + 1 < times.size() && times[k + 1] < T) ++k;
  r.times.push_back(0.0);
  r.states.push_back(states[k]);
  for (std::size_t i = k; i >= 1; --i) {
    r.times.push_back(T - times[i]);
    r.states.push_back(states[i - 1]);
  }
  return r;
}

Vec InitialLaw::probabilities(Index n, const Vec& m) const {
  Vec p = Vec::Zero(static_cast<Eigen::Index>(n));
  switch (kind) {
    case Kind::kVertex:
      require(vertex < n, "initial vertex out of range");
      p[static_cast<Eigen::Index>(vertex)] = 1.0;
      break;
    case Kind::kDistribution:
      require(static_cast<Index>(distribution.size()) == n, "initial distribution length mismatch");
      require((distribution.array() >= 0.0).all(), "initial distribution must be nonnegative");
      require(std::abs(distribution.sum() - 1.0) <= 1e-12, "initial distribution must sum to 1");
      p = distribution;
      break;
    case Kind::kMeasure:
      require(static_cast<Index>(m.size()) == n, "measure length mismatch");
      p = m / m.sum();
      break;
  }
  return p;
}

std::uint64_t path_seed(std::uint64_t seed, Index index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(0xD1B54A32D192ED03ULL + index));
}

std::vector<PathSample> sample_paths(const Mat& L, const Vec& m, const SimConfig& config) {
  require(config.horizon > 0.0, "simulation horizon must be positive");
  require(config.n_paths >= 1, "at least one path is required");
  const JumpChain chain = JumpChain::from_generator(L);
  const Index n = chain.size();
  const Vec p0 = config.initial.probabilities(n, m);
  Vec cum0(p0.size());
  std::partial_sum(p0.data(), p0.data() + p0.size(), cum0.data());
  const double uniform_rate = chain.total_rate.size() ? chain.total_rate.maxCoeff() : 0.0;

  std::vector<PathSample> paths(config.n_paths);
  parallel_for(config.n_paths, config.threads, [&](Index i) {
    PathSample& p = paths[i];
    p.id = i;
    p.seed = path_seed(config.seed, i);
    std::mt19937_64 rng(p.seed);
    Index x = draw(cum0, uniform01(rng));
    p.times.push_back(0.0);
    p.states.push_back(x);
    double t = 0.0;
    while (true) {
      const double q = chain.total_rate[static_cast<Eigen::Index>(x)];
      if (q <= 0.0) break;
      double u = 0.0;
      if (config.scheme == Scheme::kExactJump) {
        t += exponential(rng, q);
        if (t >= config.horizon) break;
        u = uniform01(rng) * q;
      } else {
        t += exponential(rng, uniform_rate);
        if (t >= config.horizon) break;
        u = uniform01(rng) * uniform_rate;
        if (u >= q) continue;  // virtual jump
      }
      const double kappa = chain.killing[static_cast<Eigen::Index>(x)];
      if (u < kappa) {
        p.lifetime = t;
        break;
      }
      u -= kappa;
      const auto& nb = chain.jumps[x];
      Index next = nb.back().first;
      for (const auto& [y, r] : nb) {
        if (u < r) {
          next = y;
          break;
        }
        u -= r;
      }
      x = next;
      p.times.push_back(t);
      p.states.push_back(x);
    }
  });
  return paths;
}

Estimate mean_estimate(const std::vector<double>& xs) {
  require(!xs.empty(), "cannot estimate a mean from no samples");
  // Neumaier summation.
  double sum = 0.0, comp = 0.0;
  for (double v : xs) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  const double n = static_cast<double>(xs.size());
  const double mean = (sum + comp) / n;
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

Estimate empirical_fdd(const std::vector<PathSample>& paths, const std::vector<double>& times,
                       const std::vector<VertexField>& fs) {
  require(times.size() == fs.size(), "one function per time is required");
  std::vector<double> vals;
  vals.reserve(paths.size());
  for (const auto& p : paths) {
    double v = 1.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
      const auto s = p.state_at(times[j]);
      if (!s) {
        v = 0.0;
        break;
      }
      v *= fs[j][static_cast<Eigen::Index>(*s)];
    }
    vals.push_back(v);
  }
  return mean_estimate(vals);
}

FddComparison compare_fdd(const std::vector<PathSample>& paths, const Mat& L,
                          const Vec& initial_probabilities, const std::vector<double>& times,
                          const std::vector<VertexField>& fs) {
  FddComparison c;
  c.estimate = empirical_fdd(paths, times, fs);
  c.exact = exact_path_expectation(L, initial_probabilities, times, fs, times.back());
  c.consistent = c.estimate.within(c.exact, 4.0);
  return c;
}

double dynkin_martingale(const PathSample& path, const Mat& L, const VertexField& f, double t) {
  const Vec Lf = L * f;
  const auto s = path.state_at(t);
  const double ft = s ? f[static_cast<Eigen::Index>(*s)] : 0.0;
  return ft - f[static_cast<Eigen::Index>(path.states.front())] - path.integral(Lf, 0.0, t);
}

MartingaleStats martingale_residuals(const std::vector<PathSample>& paths, const Mat& L,
                                     const VertexField& f, const std::vector<double>& checkpoints) {
  require(!checkpoints.empty(), "at least one checkpoint is required");
  MartingaleStats st;
  st.checkpoints = checkpoints;
  const Vec Lf = L * f;
  std::vector<std::vector<double>> M(checkpoints.size());
  for (const auto& p : paths) {
    const double f0 = f[static_cast<Eigen::Index>(p.states.front())];
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      const double t = checkpoints[k];
      const auto s = p.state_at(t);
      const double ft = s ? f[static_cast<Eigen::Index>(*s)] : 0.0;
      M[k].push_back(ft - f0 - p.integral(Lf, 0.0, t));
    }
  }
  st.consistent = true;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    st.mean.push_back(mean_estimate(M[k]));
    st.consistent = st.consistent && st.mean.back().within(0.0);
  }
  for (std::size_t k = 0; k + 1 < checkpoints.size(); ++k) {
    std::vector<double> prod;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const double d1 = k == 0 ? M[0][i] : M[k][i] - M[k - 1][i];
      const double d2 = M[k + 1][i] - M[k][i];
      prod.push_back(d1 * d2);
    }
    st.increment_cov.push_back(mean_estimate(prod));
    st.consistent = st.consistent && st.increment_cov.back().within(0.0);
  }
  return st;
}

LyonsZhengStats lyons_zheng_residual(const FormAssembly& form, const GeneratorPair& gen,
                                     const std::vector<PathSample>& primal,
                                     const std::vector<PathSample>& dual, const VertexField& f,
                                     double T, const std::vector<double>& checkpoints) {
  require(T > 0.0, "horizon must be positive");
  for (double t : checkpoints) require(t >= 0.0 && t <= T, "checkpoints must lie in [0, T]");
  const auto& space = form.space;
  const auto& co = form.coeffs;
  const Vec div1 = divergence(space, co.theta1);
  const Vec div2 = divergence(space, co.theta2);
  const Vec b_part =
      2.0 * apply_derivation(space, co.theta1, f).bf - 2.0 * apply_derivation(space, co.theta2, f).bf;
  const Vec drift = 0.5 * (b_part + f.cwiseProduct(div1 - div2));
  const Vec drift_literal = 0.5 * (b_part - f.cwiseProduct(div1 - div2));
  const Vec Lf = gen.L * f;
  const Vec Lhf = gen.L_hat * f;

  LyonsZhengStats st;
  st.checkpoints = checkpoints;
  st.residual_at.assign(checkpoints.size(), 0.0);
  std::vector<std::vector<double>> fwd(checkpoints.size()), bwd(checkpoints.size());
  auto value = [&f](const PathSample& p, double t) {
    return f[static_cast<Eigen::Index>(*p.state_at(t))];
  };
  for (const auto& p : primal) {
    if (!p.alive_at(T)) continue;
    ++st.paths_used;
    const PathSample rev = p.reversed(T);
    const double f0 = value(p, 0.0);
    // Backward dual martingale on the reversed path: M^_s = f(w^(s)) - f(w^(0)) - int L_hat f.
    const double mhat_T = value(rev, T) - value(rev, 0.0) - rev.integral(Lhf, 0.0, T);
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      const double t = checkpoints[k];
      const double ft = value(p, t);
      const double m_t = ft - f0 - p.integral(Lf, 0.0, t);
      const double mhat_Tt = value(rev, T - t) - value(rev, 0.0) - rev.integral(Lhf, 0.0, T - t);
      const double backward = mhat_T - mhat_Tt;
      const double recon = 0.5 * m_t - 0.5 * backward - p.integral(drift, 0.0, t);
      const double recon_lit = 0.5 * m_t - 0.5 * backward - p.integral(drift_literal, 0.0, t);
      const double res = std::abs((ft - f0) - recon);
      st.residual_at[k] = std::max(st.residual_at[k], res);
      st.max_residual = std::max(st.max_residual, res);
      st.max_literal_residual = std::max(st.max_literal_residual, std::abs((ft - f0) - recon_lit));
      fwd[k].push_back(m_t);
    }
  }
  for (const auto& p : dual) {
    if (!p.alive_at(T)) continue;
    const double f0 = value(p, 0.0);
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      const double t = checkpoints[k];
      bwd[k].push_back(value(p, t) - f0 - p.integral(Lhf, 0.0, t));
    }
  }
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    st.forward_mean.push_back(fwd[k].empty() ? Estimate{} : mean_estimate(fwd[k]));
    st.dual_mean.push_back(bwd[k].empty() ? Estimate{} : mean_estimate(bwd[k]));
  }
  return st;
}

namespace {

void fit_power_law(const std::vector<double>& h, const Vec& y, double& C, double& theta) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t j = 0; j < h.size(); ++j) {
    if (y[static_cast<Eigen::Index>(j)] > 0.0) {
      pts.emplace_back(std::log(h[j]), std::log(y[static_cast<Eigen::Index>(j)]));
    }
  }
  C = 0.0;
  theta = 0.0;
  if (pts.size() < 2) return;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, v] : pts) {
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
  }
  const double n = static_cast<double>(pts.size());
  theta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  C = std::exp((sy - theta * sx) / n);
}

double path_modulus(const PathSample& p, const Vec& h, double eta, double horizon) {
  // Segments i < j qualify when the gap between them, times[j] - times[i+1], is at most eta.
  std::size_t k = p.times.size();
  double best = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (p.times[j] > horizon) break;
      if (p.times[j] - p.times[i + 1] > eta) break;
      best = std::max(best, std::abs(h[static_cast<Eigen::Index>(p.states[i])] -
                                     h[static_cast<Eigen::Index>(p.states[j])]));
    }
  }
  return best;
}

}  // namespace

KolmogorovResult kolmogorov_moment(const Mat& L, const Vec& m, const Mat& metric,
                                   MomentMode mode, const KolmogorovOptions& opt) {
  require(opt.beta > 0.0, "moment exponent beta must be positive");
  require(opt.t >= 0.0, "base time must be nonnegative");
  require(!opt.h_grid.empty(), "h grid must be non-empty");
  for (double h : opt.h_grid) require(h > 0.0, "h grid entries must be positive");
  const auto n = L.rows();
  require(metric.rows() == n && metric.cols() == n, "metric table size mismatch");
  const Mat dtil = metric.cwiseMin(1.0).array().pow(opt.beta).matrix();

  KolmogorovResult res;
  res.starts = opt.starts;
  if (res.starts.empty()) {
    if (mode == MomentMode::kExact) {
      for (Eigen::Index x = 0; x < n; ++x) res.starts.push_back(static_cast<Index>(x));
    } else {
      res.starts.push_back(0);
    }
  }
  const auto ns = static_cast<Eigen::Index>(res.starts.size());
  const auto nh = static_cast<Eigen::Index>(opt.h_grid.size());
  res.moments = Mat::Zero(ns, nh);
  res.std_errors = Mat::Zero(ns, nh);

  if (mode == MomentMode::kExact) {
    const SemigroupEvaluator sg(L, m);
    const Mat Tt = sg.matrix(opt.t);
    for (Eigen::Index j = 0; j < nh; ++j) {
      const Mat Th = sg.matrix(opt.h_grid[static_cast<std::size_t>(j)]);
      const Vec inner = Th.cwiseProduct(dtil).rowwise().sum();
      const Vec per_x = Tt * inner;
      for (Eigen::Index i = 0; i < ns; ++i) {
        res.moments(i, j) = per_x[static_cast<Eigen::Index>(res.starts[static_cast<std::size_t>(i)])];
      }
    }
  } else {
    const double hmax = *std::max_element(opt.h_grid.begin(), opt.h_grid.end());
    Index exceed = 0, total = 0;
    for (Eigen::Index i = 0; i < ns; ++i) {
      const Index x0 = res.starts[static_cast<std::size_t>(i)];
      SimConfig cfg;
      cfg.horizon = opt.t + hmax;
      cfg.n_paths = opt.n_paths;
      cfg.seed = opt.seed + static_cast<std::uint64_t>(i);
      cfg.initial = InitialLaw::at(x0);
      cfg.threads = opt.threads;
      const auto paths = sample_paths(L, m, cfg);
      for (Eigen::Index j = 0; j < nh; ++j) {
        const double h = opt.h_grid[static_cast<std::size_t>(j)];
        std::vector<double> vals;
        vals.reserve(paths.size());
        for (const auto& p : paths) {
          const auto a = p.state_at(opt.t);
          const auto b = p.state_at(opt.t + h);
          vals.push_back(a && b ? dtil(static_cast<Eigen::Index>(*a), static_cast<Eigen::Index>(*b))
                                : 0.0);
        }
        const Estimate e = mean_estimate(vals);
        res.moments(i, j) = e.value;
        res.std_errors(i, j) = e.std_error;
      }
      const Vec hfun = metric.row(static_cast<Eigen::Index>(x0)).transpose().cwiseMin(1.0);
      for (const auto& p : paths) {
        ++total;
        if (path_modulus(p, hfun, opt.eta, cfg.horizon) > opt.epsilon) ++exceed;
      }
    }
    res.modulus_exceedance = total ? static_cast<double>(exceed) / static_cast<double>(total) : 0.0;
  }
  res.sup_moment = res.moments.colwise().maxCoeff().transpose();
  fit_power_law(opt.h_grid, res.sup_moment, res.C, res.theta);
  return res;
}

double exact_path_expectation(const Mat& L, const Vec& mu, const std::vector<double>& times,
                              const std::vector<VertexField>& fs, double horizon) {
  require(times.size() == fs.size(), "one function per time is required");
  require(mu.size() == L.rows(), "initial law length mismatch");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return times[a] < times[b];
  });
  for (double t : times) require(t >= 0.0 && t <= horizon, "times must lie in [0, horizon]");
  Vec u = Vec::Ones(L.rows());
  double next = horizon;
  for (std::size_t k = order.size(); k-- > 0;) {
    const std::size_t i = order[k];
    u = evolve(L, u, next - times[i]);
    u = u.cwiseProduct(fs[i]);
    next = times[i];
  }
  u = evolve(L, u, next);
  return mu.dot(u);
}

TimeReversalResult time_reversal_check(const GeneratorPair& gen, double T,
                                       const std::vector<TimeFunctional>& functionals,
                                       Index n_paths, std::uint64_t seed, unsigned threads) {
  require(T > 0.0, "horizon must be positive");
  require(!functionals.empty(), "at least one functional is required");
  const Vec mu = gen.m / gen.m.sum();
  SimConfig cfg;
  cfg.horizon = T;
  cfg.n_paths = n_paths;
  cfg.initial = InitialLaw::measure();
  cfg.threads = threads;
  cfg.seed = seed;
  const auto primal = sample_paths(gen.L, gen.m, cfg);
  cfg.seed = splitmix64(seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  const auto dual = sample_paths(gen.L_hat, gen.m, cfg);

  TimeReversalResult r;
  r.consistent = true;
  for (const auto& F : functionals) {
    require(F.times.size() == F.fs.size(), "one function per functional time is required");
    std::vector<double> rev_times;
    for (double s : F.times) {
      require(s >= 0.0 && s <= T, "functional times must lie in [0, T]");
      rev_times.push_back(T - s);
    }
    auto eval = [&](const std::vector<PathSample>& paths, const std::vector<double>& ts) {
      std::vector<double> vals;
      vals.reserve(paths.size());
      for (const auto& p : paths) {
        double v = p.alive_at(T) ? 1.0 : 0.0;
        for (std::size_t j = 0; j < ts.size() && v != 0.0; ++j) {
          v *= F.fs[j][static_cast<Eigen::Index>(*p.state_at(ts[j]))];
        }
        vals.push_back(v);
      }
      return mean_estimate(vals);
    };
    const Estimate a = eval(primal, rev_times);
    const Estimate b = eval(dual, F.times);
    r.reversed_primal.push_back(a);
    r.dual.push_back(b);
    const double ea = exact_path_expectation(gen.L, mu, rev_times, F.fs, T);
    const double eb = exact_path_expectation(gen.L_hat, mu, F.times, F.fs, T);
    r.exact_reversed_primal.push_back(ea);
    r.exact_dual.push_back(eb);
    r.exact_defect = std::max(r.exact_defect, std::abs(ea - eb));
    const double se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    const double d = std::abs(a.value - b.value);
    if (d >= r.mc_defect) {
      r.mc_defect = d;
      r.combined_se = se;
    }
    r.consistent = r.consistent && d <= 4.0 * se + 1e-14;
  }
  return r;
}

}  // namespace dlab
