#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace khl {

enum class KernelKind { gaussian, linear, polynomial };

/// Kernel choice and its parameters.
///
/// Gaussian: k(y, y') = exp(-|y - y'|^2 / (2 bandwidth^2)); an absent bandwidth
/// means "use the median heuristic on the data".
/// Linear: k(y, y') = <y, y'>.
/// Polynomial: k(y, y') = (<y, y'> + offset)^degree.
class KernelSpec {
 public:
  static KernelSpec gaussian(std::optional<double> bandwidth = std::nullopt);
  static KernelSpec linear();
  static KernelSpec polynomial(int degree, double offset = 0.0);

  KernelKind kind() const noexcept { return kind_; }
  const std::optional<double>& bandwidth() const noexcept { return bandwidth_; }
  int degree() const noexcept { return degree_; }
  double offset() const noexcept { return offset_; }

  /// False only for a gaussian kernel whose bandwidth is still unset.
  bool resolved() const noexcept { return kind_ != KernelKind::gaussian || bandwidth_.has_value(); }

  /// k(a, b) for two row vectors.
  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

 private:
  KernelSpec(KernelKind kind, std::optional<double> bandwidth, int degree, double offset);

  KernelKind kind_;
  std::optional<double> bandwidth_;
  int degree_;
  double offset_;
};

/// n x n symmetric PSD matrix of pairwise kernel evaluations.
class GramMatrix {
 public:
  GramMatrix() = default;
  /// Wraps an existing matrix; throws InputError unless square, finite and
  /// symmetric to 1e-12 relative.
  explicit GramMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index n() const noexcept { return values_.rows(); }

  /// Principal submatrix on `indices` (rows and columns).
  GramMatrix submatrix(const std::vector<Eigen::Index>& indices) const;
  /// Rows `indices`, all columns (a q x n cross-Gram block).
  Eigen::MatrixXd rows(const std::vector<Eigen::Index>& indices) const;
  /// Multiplies every entry by c > 0.
  GramMatrix scaled(double c) const;

 private:
  struct Unchecked {};
  GramMatrix(Eigen::MatrixXd values, Unchecked) : values_(std::move(values)) {}
  friend GramMatrix gram(const Eigen::MatrixXd&, const KernelSpec&);

  Eigen::MatrixXd values_;
};

/// Number of pairs above which the median heuristic subsamples pairs.
inline constexpr Eigen::Index kMedianAllPairsLimit = 5000;
inline constexpr std::size_t kMedianSubsamplePairs = 1'000'000;

/// Median of the pairwise Euclidean distances between rows. Above
/// kMedianAllPairsLimit rows a seeded uniform subsample of pairs is used.
/// Zero distances count; throws DegenerateDataError if the median is 0 or
/// there are fewer than two rows.
double median_heuristic(const Eigen::MatrixXd& data, std::uint64_t seed = 0);

/// Returns `spec` with the gaussian bandwidth filled in from `data` if unset.
KernelSpec resolve_bandwidth(const KernelSpec& spec, const Eigen::MatrixXd& data);

GramMatrix gram(const Eigen::MatrixXd& data, const KernelSpec& spec);

/// Entry (i, j) = k(a_i, b_j). cross_gram(a, a) is bit-identical to gram(a).
Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelSpec& spec);

}  // namespace khl
