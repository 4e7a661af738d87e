#include "khl/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/math/special_functions/beta.hpp>

#include "khl/design.hpp"
#include "khl/errors.hpp"
#include "khl/model.hpp"
#include "khl/stats.hpp"

namespace khl::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::MatrixXd covariance_or_identity(const SimConfig& c) {
  return c.covariance.size() == 0 ? Eigen::MatrixXd::Identity(c.dims, c.dims) : c.covariance;
}

bool shifts_are_zero(const SimConfig& c) {
  return std::all_of(c.mean_shift.begin(), c.mean_shift.end(),
                     [](const Eigen::VectorXd& v) { return v.isZero(0.0); });
}

Dataset draw(const SimConfig& config, Eigen::Index rep, const Eigen::MatrixXd& chol) {
  std::mt19937_64 rng(substream_seed(config.seed, static_cast<std::uint64_t>(rep), 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.data.resize(config.n(), config.dims);
  Eigen::Index row = 0;
  for (std::size_t g = 0; g < config.n_per_group.size(); ++g) {
    for (Eigen::Index i = 0; i < config.n_per_group[g]; ++i, ++row) {
      Eigen::VectorXd z(config.dims);
      for (Eigen::Index j = 0; j < config.dims; ++j) z(j) = normal(rng);
      Eigen::VectorXd y = chol * z;
      if (!config.mean_shift.empty()) y += config.mean_shift[g];
      ds.data.row(row) = y.transpose();
      ds.labels.push_back("g" + std::to_string(g));
    }
  }
  return ds;
}

RepRecord run_replicate(const SimConfig& config, Eigen::Index rep, const Eigen::MatrixXd& chol) {
  RepRecord rec;
  rec.rep = rep;
  const std::size_t nt = config.truncations.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rec.nystrom_statistic.assign(nt, nan);
  rec.nystrom_p_value.assign(nt, nan);

  const Dataset ds = draw(config, rep, chol);

  auto start = Clock::now();
  const KernelSpec spec = resolve_bandwidth(config.kernel, ds.data);
  GramMatrix k = gram(ds.data, spec);
  DesignBundle design = one_way_design(ds.labels, "group");
  const ContrastMatrix contrast = factor_contrast(design, "group");
  const Eigen::Index t_max = *std::max_element(config.truncations.begin(), config.truncations.end());

  FitOptions options;
  options.max_components = std::min(t_max, k.n());
  const FittedModel model = fit(k, design, options);
  for (std::size_t j = 0; j < nt; ++j) {
    const TestResult r = tkhl_test(model, contrast, config.truncations[j]);
    rec.statistic.push_back(r.statistic);
    rec.p_value.push_back(r.p_value);
  }
  rec.seconds_exact = seconds_since(start);

  if (config.nystrom) {
    start = Clock::now();
    const Eigen::Index n = config.n();
    const Eigen::Index q = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::llround(config.nystrom->q_fraction * static_cast<double>(n))), 2, n);
    std::vector<Eigen::Index> codes = design.factor("group").codes;
    const LandmarkPlan plan = sample_landmarks(n, q, &codes, config.nystrom->strategy,
                                               substream_seed(config.seed, static_cast<std::uint64_t>(rep), 1));
    const GramMatrix k_z = k.submatrix(plan.indices);
    const Eigen::MatrixXd cross = k.rows(plan.indices);
    NystromModel ny;
    try {
      ny = nystrom_fit(plan, k_z, cross, design, config.nystrom->anchors);
    } catch (const AnchorRankError& e) {
      ny = nystrom_fit(plan, k_z, cross, design, static_cast<Eigen::Index>(e.achievable()));
    }
    for (std::size_t j = 0; j < nt; ++j) {
      if (config.truncations[j] > ny.anchors.m) continue;
      const TestResult r = nystrom_test(ny, contrast, config.truncations[j]);
      rec.nystrom_statistic[j] = r.statistic;
      rec.nystrom_p_value[j] = r.p_value;
    }
    rec.seconds_nystrom = seconds_since(start);
  }
  return rec;
}

SimReport summarize(const SimConfig& config, std::string experiment, std::vector<RepRecord> records) {
  SimReport report;
  report.experiment = std::move(experiment);
  report.n = config.n();
  report.reps = config.reps;
  report.alpha = config.alpha;
  const Eigen::Index d = static_cast<Eigen::Index>(config.n_per_group.size()) - 1;

  for (std::size_t j = 0; j < config.truncations.size(); ++j) {
    SimRow row;
    row.truncation = config.truncations[j];
    std::vector<double> stats, pvals;
    Eigen::Index rejections = 0, ny_rejections = 0, agree = 0, ny_reps = 0;
    int df = 0;
    for (const RepRecord& r : records) {
      stats.push_back(r.statistic[j]);
      pvals.push_back(r.p_value[j]);
      const bool reject = r.p_value[j] < config.alpha;
      rejections += reject;
      if (!std::isnan(r.nystrom_p_value[j])) {
        const bool ny_reject = r.nystrom_p_value[j] < config.alpha;
        ++ny_reps;
        ny_rejections += ny_reject;
        agree += (ny_reject == reject);
      }
    }
    // The exact test caps T at the residual rank; report the nominal df.
    df = static_cast<int>(d * row.truncation);
    row.df = df;
    const auto reps = static_cast<Eigen::Index>(records.size());
    row.rejection_rate = static_cast<double>(rejections) / static_cast<double>(reps);
    std::tie(row.ci_low, row.ci_high) = clopper_pearson(rejections, reps);
    row.q95 = empirical_quantile(stats, 0.95);
    row.q99 = empirical_quantile(stats, 0.99);
    row.chi2_q95 = chi2_quantile_upper(0.05, df);
    row.chi2_q99 = chi2_quantile_upper(0.01, df);
    row.ks_distance = ks_uniform_distance(pvals);
    row.nystrom_reps = ny_reps;
    if (ny_reps > 0) {
      row.nystrom_rejection_rate = static_cast<double>(ny_rejections) / static_cast<double>(ny_reps);
      row.agreement_rate = static_cast<double>(agree) / static_cast<double>(ny_reps);
    }
    report.rows.push_back(row);
  }

  if (config.record_timing) {
    double exact = 0.0, ny = 0.0;
    for (const RepRecord& r : records) {
      exact += r.seconds_exact;
      ny += r.seconds_nystrom;
    }
    report.mean_seconds_exact = exact / static_cast<double>(records.size());
    if (config.nystrom) report.mean_seconds_nystrom = ny / static_cast<double>(records.size());
  } else {
    for (RepRecord& r : records) r.seconds_exact = r.seconds_nystrom = 0.0;
  }
  report.records = std::move(records);
  return report;
}

SimReport run(const SimConfig& config, std::string experiment) {
  config.validate();
  const Eigen::MatrixXd chol = covariance_or_identity(config).llt().matrixL();
  std::vector<RepRecord> records(static_cast<std::size_t>(config.reps));

  unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  threads = static_cast<unsigned>(std::min<Eigen::Index>(threads, config.reps));
  if (threads <= 1) {
    for (Eigen::Index r = 0; r < config.reps; ++r) records[static_cast<std::size_t>(r)] = run_replicate(config, r, chol);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        try {
          for (Eigen::Index r = next++; r < config.reps && !failed; r = next++)
            records[static_cast<std::size_t>(r)] = run_replicate(config, r, chol);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      });
    }
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return summarize(config, std::move(experiment), std::move(records));
}

}  // namespace

Eigen::Index SimConfig::n() const {
  Eigen::Index total = 0;
  for (Eigen::Index g : n_per_group) total += g;
  return total;
}

void SimConfig::validate() const {
  if (n_per_group.size() < 2) throw InputError("simulation needs at least two groups");
  for (Eigen::Index g : n_per_group)
    if (g < 1) throw InputError("every group needs at least one observation");
  if (dims < 1) throw InputError("dims must be >= 1");
  if (!mean_shift.empty()) {
    if (mean_shift.size() != n_per_group.size()) throw InputError("mean_shift needs one vector per group");
    for (const Eigen::VectorXd& v : mean_shift) {
      if (v.size() != dims) throw InputError("mean_shift vectors must have length dims");
      if (!v.allFinite()) throw InputError("mean_shift must be finite");
    }
  }
  if (covariance.size() != 0) {
    if (covariance.rows() != dims || covariance.cols() != dims)
      throw InputError("covariance must be dims x dims");
    if (!covariance.allFinite() || !covariance.isApprox(covariance.transpose(), 1e-12))
      throw InputError("covariance must be finite and symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success || (llt.matrixL().toDenseMatrix().diagonal().array() <= 0.0).any())
      throw InputError("covariance is not positive definite");
  }
  if (truncations.empty()) throw InputError("at least one truncation is required");
  for (Eigen::Index t : truncations)
    if (t < 1) throw InputError("truncations must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (reps < 1) throw InputError("reps must be >= 1");
  if (nystrom) {
    if (!(nystrom->q_fraction > 0.0 && nystrom->q_fraction <= 1.0))
      throw InputError("nystrom q_fraction must lie in (0, 1]");
    if (nystrom->anchors < 1) throw InputError("nystrom anchors must be >= 1");
  }
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(seed) ^ rep) ^ stream);
}

Dataset generate_dataset(const SimConfig& config, Eigen::Index rep_index) {
  config.validate();
  const Eigen::MatrixXd chol = covariance_or_identity(config).llt().matrixL();
  return draw(config, rep_index, chol);
}

SimReport run_level_experiment(const SimConfig& config) {
  if (!shifts_are_zero(config)) throw InputError("level experiment requires all mean shifts to be zero");
  return run(config, "level");
}

SimReport run_power_experiment(const SimConfig& config) { return run(config, "power"); }

std::pair<double, double> clopper_pearson(Eigen::Index k, Eigen::Index n, double confidence) {
  if (n < 1 || k < 0 || k > n) throw InputError("clopper_pearson: need 0 <= k <= n, n >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InputError("clopper_pearson: confidence must lie in (0, 1)");
  const double a = (1.0 - confidence) / 2.0;
  const auto kd = static_cast<double>(k);
  const auto nd = static_cast<double>(n);
  const double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, a);
  const double hi = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - a);
  return {lo, hi};
}

double ks_uniform_distance(std::vector<double> p) {
  if (p.empty()) throw InputError("ks_uniform_distance: empty sample");
  std::sort(p.begin(), p.end());
  const auto m = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = std::clamp(p[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / m - x, x - static_cast<double>(i) / m});
  }
  return d;
}

double empirical_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw InputError("empirical_quantile: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw InputError("empirical_quantile: prob must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::string records_csv(const SimReport& report, const SimConfig& config) {
  auto num = [](double v) {
    if (std::isnan(v)) return std::string("NA");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "rep";
  for (Eigen::Index t : config.truncations) out << ",stat_T" << t << ",p_T" << t;
  if (config.nystrom)
    for (Eigen::Index t : config.truncations) out << ",nystrom_stat_T" << t << ",nystrom_p_T" << t;
  out << '\n';
  for (const RepRecord& r : report.records) {
    out << r.rep;
    for (std::size_t j = 0; j < r.statistic.size(); ++j) out << ',' << num(r.statistic[j]) << ',' << num(r.p_value[j]);
    if (config.nystrom)
      for (std::size_t j = 0; j < r.statistic.size(); ++j)
        out << ',' << num(r.nystrom_statistic[j]) << ',' << num(r.nystrom_p_value[j]);
    out << '\n';
  }
  return out.str();
}

}  // namespace khl::sim
