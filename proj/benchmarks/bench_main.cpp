#include <random>

#include <benchmark/benchmark.h>

#include "khl/kernel.hpp"
#include "khl/model.hpp"
#include "khl/nystrom.hpp"

namespace {

Eigen::MatrixXd sample(Eigen::Index n, Eigen::Index dims) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(n, dims);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dims; ++j) m(i, j) = normal(rng);
  return m;
}

khl::DesignBundle two_groups(Eigen::Index n) {
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < n; ++i) labels.push_back(i % 2 == 0 ? "a" : "b");
  return khl::one_way_design(labels, "group");
}

void BM_Gram(benchmark::State& state) {
  const Eigen::MatrixXd data = sample(state.range(0), 3);
  const khl::KernelSpec spec = khl::KernelSpec::gaussian(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(khl::gram(data, spec));
  state.SetComplexityN(state.range(0));
}

void BM_ExactTest(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const khl::GramMatrix k = khl::gram(sample(n, 3), khl::KernelSpec::gaussian(2.0));
  const khl::DesignBundle design = two_groups(n);
  const khl::ContrastMatrix l = khl::factor_contrast(design, "group");
  khl::FitOptions options;
  if (state.range(1) > 0) options.max_components = state.range(1);
  for (auto _ : state) {
    const khl::FittedModel m = khl::fit(k, design, options);
    benchmark::DoNotOptimize(khl::tkhl_test(m, l, 5));
  }
  state.SetComplexityN(n);
}

void BM_NystromTest(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::MatrixXd data = sample(n, 3);
  const khl::KernelSpec spec = khl::KernelSpec::gaussian(2.0);
  const khl::DesignBundle design = two_groups(n);
  const khl::ContrastMatrix l = khl::factor_contrast(design, "group");
  const khl::LandmarkPlan plan = khl::sample_landmarks(n, 100, nullptr, khl::LandmarkStrategy::uniform, 1);
  const Eigen::MatrixXd z = data(plan.indices, Eigen::all);
  for (auto _ : state) {
    const khl::NystromModel ny =
        khl::nystrom_fit(plan, khl::gram(z, spec), khl::cross_gram(z, data, spec), design, 25);
    benchmark::DoNotOptimize(khl::nystrom_test(ny, l, 5));
  }
  state.SetComplexityN(n);
}

}  // namespace

BENCHMARK(BM_Gram)->RangeMultiplier(2)->Range(250, 2000)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_ExactTest)->ArgsProduct({{250, 500, 1000}, {0, 5}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NystromTest)->RangeMultiplier(2)->Range(250, 2000)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);
BENCHMARK_MAIN();
