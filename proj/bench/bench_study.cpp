#include <benchmark/benchmark.h>

#include "gdi/profile.hpp"
#include "gdi/select.hpp"
#include "gdi/simulate.hpp"

using namespace gdi;

namespace {

StudyConfig bench_config(int threads) {
  StudyConfig c;
  c.thetas = {0.35, 0.77, 1.17};
  c.replicates = 8;
  c.threads = threads;
  return c;
}

struct NineSpeciesData {
  Design design = nine_species_design();
  std::vector<double> response;
  std::vector<InteractionSpec> candidates = default_candidates(parse_grouping("1,1,1,1,1,2,2,3,3"));
  NineSpeciesData() {
    TruthModel t = nine_species_truth();
    t.theta_true = 0.77;
    Rng rng(20261016);
    response = simulate_response(design, t, rng);
  }
};

const NineSpeciesData& nine() {
  static const NineSpeciesData data;
  return data;
}

void BM_RobustnessSerial(benchmark::State& state) {
  const StudyConfig c = bench_config(1);
  for (auto _ : state) benchmark::DoNotOptimize(run_study_serial(c));
}

void BM_RobustnessParallel(benchmark::State& state) {
  const StudyConfig c = bench_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_study(c));
}

void BM_Procedure(benchmark::State& state) {
  const auto& d = nine();
  const Procedure p = static_cast<Procedure>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_procedure(p, d.design, d.response, d.candidates));
  state.SetLabel(std::string(procedure_name(p)));
}

void BM_ProfileLoglik(benchmark::State& state) {
  const auto& d = nine();
  const ProfileProblem problem(d.design, d.response, {Family::FullPairwise, std::nullopt, false});
  double theta = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(problem.loglik(theta));
    theta = theta < 2.0 ? theta + 0.01 : 0.5;
  }
}

void BM_ReferenceLoglik(benchmark::State& state) {
  const auto& d = nine();
  const InteractionSpec spec{Family::FullPairwise, std::nullopt, false};
  double theta = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(profile_loglik(d.design, d.response, spec, theta));
    theta = theta < 2.0 ? theta + 0.01 : 0.5;
  }
}

}  // namespace

BENCHMARK(BM_RobustnessSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RobustnessParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Procedure)
    ->Arg(static_cast<int>(Procedure::A))
    ->Arg(static_cast<int>(Procedure::B))
    ->Arg(static_cast<int>(Procedure::C))
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProfileLoglik)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ReferenceLoglik)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
