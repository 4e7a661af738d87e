#include "khl/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "khl/errors.hpp"

namespace khl {

KernelSpec::KernelSpec(KernelKind kind, std::optional<double> bandwidth, int degree, double offset)
    : kind_(kind), bandwidth_(bandwidth), degree_(degree), offset_(offset) {}

KernelSpec KernelSpec::gaussian(std::optional<double> bandwidth) {
  if (bandwidth && !(std::isfinite(*bandwidth) && *bandwidth > 0.0))
    throw InputError("gaussian bandwidth must be finite and > 0");
  return KernelSpec(KernelKind::gaussian, bandwidth, 0, 0.0);
}

KernelSpec KernelSpec::linear() { return KernelSpec(KernelKind::linear, std::nullopt, 0, 0.0); }

KernelSpec KernelSpec::polynomial(int degree, double offset) {
  if (degree < 1) throw InputError("polynomial degree must be >= 1");
  if (!(std::isfinite(offset) && offset >= 0.0)) throw InputError("polynomial offset must be finite and >= 0");
  return KernelSpec(KernelKind::polynomial, std::nullopt, degree, offset);
}

double KernelSpec::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                              const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
  switch (kind_) {
    case KernelKind::gaussian: {
      if (!bandwidth_) throw InputError("gaussian bandwidth is unresolved");
      // Accumulate (a_k - b_k)^2 in index order so that k(a, b) == k(b, a) bitwise.
      double d2 = 0.0;
      for (Eigen::Index k = 0; k < a.size(); ++k) {
        const double diff = a(k) - b(k);
        d2 += diff * diff;
      }
      const double s = *bandwidth_;
      return std::exp(-d2 / (2.0 * s * s));
    }
    case KernelKind::linear: {
      double dot = 0.0;
      for (Eigen::Index k = 0; k < a.size(); ++k) dot += a(k) * b(k);
      return dot;
    }
    case KernelKind::polynomial: {
      double dot = 0.0;
      for (Eigen::Index k = 0; k < a.size(); ++k) dot += a(k) * b(k);
      return std::pow(dot + offset_, degree_);
    }
  }
  return 0.0;
}

GramMatrix::GramMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols()) throw InputError("Gram matrix must be square");
  if (!values_.allFinite()) throw InputError("Gram matrix has non-finite entries");
  const double scale = std::max(1.0, values_.cwiseAbs().maxCoeff());
  if ((values_ - values_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InputError("Gram matrix is not symmetric");
}

GramMatrix GramMatrix::submatrix(const std::vector<Eigen::Index>& indices) const {
  return GramMatrix(values_(indices, indices).eval(), Unchecked{});
}

Eigen::MatrixXd GramMatrix::rows(const std::vector<Eigen::Index>& indices) const {
  return values_(indices, Eigen::all);
}

GramMatrix GramMatrix::scaled(double c) const {
  if (!(c > 0.0)) throw InputError("kernel scale must be > 0");
  return GramMatrix(values_ * c, Unchecked{});
}

namespace {

double pair_distance(const Eigen::MatrixXd& data, Eigen::Index i, Eigen::Index j) {
  return (data.row(i) - data.row(j)).norm();
}

double median_inplace(std::vector<double>& values) {
  const std::size_t m = values.size();
  const std::size_t mid = m / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (m % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

void check_finite(const Eigen::MatrixXd& data) {
  if (!data.allFinite()) throw InputError("kernel input has non-finite entries");
}

}  // namespace

double median_heuristic(const Eigen::MatrixXd& data, std::uint64_t seed) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw DegenerateDataError("median heuristic needs at least 2 rows");
  check_finite(data);

  std::vector<double> distances;
  if (n <= kMedianAllPairsLimit) {
    distances.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) distances.push_back(pair_distance(data, i, j));
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    distances.reserve(kMedianSubsamplePairs);
    while (distances.size() < kMedianSubsamplePairs) {
      const Eigen::Index i = pick(rng);
      const Eigen::Index j = pick(rng);
      if (i != j) distances.push_back(pair_distance(data, i, j));
    }
  }
  const double median = median_inplace(distances);
  if (!(median > 0.0)) throw DegenerateDataError("median pairwise distance is zero");
  return median;
}

KernelSpec resolve_bandwidth(const KernelSpec& spec, const Eigen::MatrixXd& data) {
  if (spec.resolved()) return spec;
  return KernelSpec::gaussian(median_heuristic(data));
}

GramMatrix gram(const Eigen::MatrixXd& data, const KernelSpec& spec) {
  check_finite(data);
  if (!spec.resolved()) throw InputError("gaussian bandwidth is unresolved; call resolve_bandwidth first");
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = spec(data.row(i), data.row(j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return GramMatrix(std::move(k), GramMatrix::Unchecked{});
}

Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelSpec& spec) {
  if (a.cols() != b.cols()) throw InputError("cross_gram: inputs have different column counts");
  check_finite(a);
  check_finite(b);
  if (!spec.resolved()) throw InputError("gaussian bandwidth is unresolved; call resolve_bandwidth first");
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) k(i, j) = spec(a.row(i), b.row(j));
  return k;
}

}  // namespace khl
