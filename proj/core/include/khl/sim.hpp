#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "khl/kernel.hpp"
#include "khl/nystrom.hpp"

namespace khl::sim {

/// Optional Nystrom arm run next to the exact test on every replicate.
struct NystromArm {
  double q_fraction = 0.5;  ///< landmarks q = round(q_fraction * n), clamped to [2, n]
  Eigen::Index anchors = 25;
  LandmarkStrategy strategy = LandmarkStrategy::uniform;
};

/// Monte Carlo setting: one multivariate normal sample per group with a
/// shared covariance, tested with a one-way design and the global contrast.
struct SimConfig {
  std::vector<Eigen::Index> n_per_group{100, 100};
  Eigen::Index dims = 3;
  std::vector<Eigen::VectorXd> mean_shift;  ///< one per group; empty means all zero
  Eigen::MatrixXd covariance;               ///< empty means identity
  KernelSpec kernel = KernelSpec::gaussian();
  std::vector<Eigen::Index> truncations{1, 3, 5};
  double alpha = 0.05;
  Eigen::Index reps = 200;
  std::uint64_t seed = 1;
  std::optional<NystromArm> nystrom;
  unsigned threads = 1;  ///< 0 means std::thread::hardware_concurrency()
  bool record_timing = false;

  Eigen::Index n() const;
  /// Throws InputError on any inconsistency (including a non-SPD covariance).
  void validate() const;
};

/// Seed of substream `stream` of replicate `rep`:
/// mix(mix(mix(seed) ^ rep) ^ stream), mix = SplitMix64 finalizer.
/// Stream 0 draws the data, stream 1 the landmarks. The substream seeds a
/// std::mt19937_64.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream);

struct Dataset {
  Eigen::MatrixXd data;             ///< n x dims
  std::vector<std::string> labels;  ///< "g0", "g1", ... per row, groups contiguous
};

/// Deterministic in (config.seed, rep_index).
Dataset generate_dataset(const SimConfig& config, Eigen::Index rep_index);

/// Per-replicate outputs, one entry per configured truncation. Nystrom
/// entries are NaN when the arm is off or T exceeds the anchors used.
struct RepRecord {
  Eigen::Index rep = 0;
  std::vector<double> statistic;
  std::vector<double> p_value;
  std::vector<double> nystrom_statistic;
  std::vector<double> nystrom_p_value;
  double seconds_exact = 0.0;
  double seconds_nystrom = 0.0;
};

struct SimRow {
  Eigen::Index truncation = 0;
  int df = 0;
  double rejection_rate = 0.0;
  double ci_low = 0.0;  ///< Clopper-Pearson 95%
  double ci_high = 0.0;
  double q95 = 0.0;  ///< empirical quantiles of the statistic
  double q99 = 0.0;
  double chi2_q95 = 0.0;
  double chi2_q99 = 0.0;
  double ks_distance = 0.0;  ///< sup distance of the p-values to Uniform(0, 1)
  std::optional<double> nystrom_rejection_rate;
  std::optional<double> agreement_rate;  ///< share of reps with equal exact/Nystrom decisions
  Eigen::Index nystrom_reps = 0;
};

struct SimReport {
  std::string experiment;  ///< "level" or "power"
  Eigen::Index n = 0;
  Eigen::Index reps = 0;
  double alpha = 0.05;
  std::vector<SimRow> rows;
  std::vector<RepRecord> records;
  std::optional<double> mean_seconds_exact;
  std::optional<double> mean_seconds_nystrom;
};

/// Null calibration run; throws InputError if any mean shift is nonzero.
SimReport run_level_experiment(const SimConfig& config);
/// Same harness with arbitrary shifts.
SimReport run_power_experiment(const SimConfig& config);

/// Exact two-sided Clopper-Pearson interval for k successes in n trials.
std::pair<double, double> clopper_pearson(Eigen::Index k, Eigen::Index n, double confidence = 0.95);

/// Kolmogorov-Smirnov distance between the empirical law of `p` and U(0, 1).
double ks_uniform_distance(std::vector<double> p);

/// Linear-interpolation (type 7) sample quantile.
double empirical_quantile(std::vector<double> values, double prob);

/// Per-rep CSV: rep, then stat_T/p_T (and nystrom columns) per truncation.
std::string records_csv(const SimReport& report, const SimConfig& config);

}  // namespace khl::sim
