#include <benchmark/benchmark.h>

#include "blockade/dynamics.hpp"
#include "blockade/experiments.hpp"
#include "blockade/model.hpp"
#include "blockade/pnr.hpp"

using namespace blockade;

namespace {

SystemSpec driven(std::size_t n, int truncation) {
  SystemSpec s = SystemSpec::identical(5230.0, n, 5230.0, 13.2, 0.1, 0.1, truncation);
  s.drive = Drive{0.5, drive_frequency(s, DriveRule::LowerPolariton)};
  return s;
}

void BM_BuildLiouvillian(benchmark::State& state) {
  const SystemSpec s = driven(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_liouvillian(build_rotating_frame(s), build_collapse_set(s)));
  }
}
BENCHMARK(BM_BuildLiouvillian)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_SteadyState(benchmark::State& state) {
  const SystemSpec s = driven(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(steadystate(s));
}
BENCHMARK(BM_SteadyState)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_AnalyzeSpectrum(benchmark::State& state) {
  const Witness w = SystemSpec::reference_witness();
  const double chi = witness_chi(w, 5230.0);
  const double wt = lamb_shifted_witness_freq(w, 5230.0) / 1000.0;
  const LineLadder ladder = LineLadder::resonant(3);
  const auto grid = uniform_grid(wt - 0.002, wt + (ladder.offset(5) * chi + 2.0) / 1000.0,
                                 static_cast<std::size_t>(state.range(0)));
  const auto spectrum =
      synthesize_spectrum(PhotonDistribution::poisson(0.8, 5), chi, wt, ladder, 0.5, grid);
  for (auto _ : state) benchmark::DoNotOptimize(analyze_spectrum(spectrum, chi, wt, ladder));
}
BENCHMARK(BM_AnalyzeSpectrum)->Arg(2000)->Arg(20000);

}  // namespace
BENCHMARK_MAIN();
