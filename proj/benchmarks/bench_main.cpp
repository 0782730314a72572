// Microbenchmarks for the hot paths: synthesis, filtering, epoch
// handling, classification and the wire codecs.
#include <benchmark/benchmark.h>

#include <span>

#include "hbci/classify.hpp"
#include "hbci/dsp.hpp"
#include "hbci/rng.hpp"
#include "hbci/session.hpp"
#include "hbci/stim.hpp"
#include "hbci/synth.hpp"
#include "hbci/wire.hpp"

namespace {

using namespace hbci;

void BM_GenBackground(benchmark::State& state) {
  SynthConfig cfg;
  const auto n = static_cast<std::int64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gen_background(n, cfg));
  }
  state.SetItemsProcessed(state.iterations() * n * kNumChannels);
}
BENCHMARK(BM_GenBackground)->Arg(2048)->Arg(16384);

void BM_BandpassFilter(benchmark::State& state) {
  SynthConfig cfg;
  const EegBlock block = gen_background(state.range(0), cfg);
  const FilterSpec spec = design_bandpass(256.0, 0.1, 25.0);
  FilterState filter_state(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_filter(spec, block, filter_state));
  }
  state.SetItemsProcessed(state.iterations() * block.samples() * kNumChannels);
}
BENCHMARK(BM_BandpassFilter)->Arg(64)->Arg(2048);

void BM_ExtractAndAverage(benchmark::State& state) {
  SynthConfig cfg;
  const std::vector<StimulusEvent> events =
      schedule_events(gen_sequence(8, 5), 256);
  const EegBlock block = gen_background(256 + 31 * 64 + 204, cfg);
  for (auto _ : state) {
    const auto epochs = extract_epochs(block, events);
    for (int c = 1; c <= 4; ++c) {
      benchmark::DoNotOptimize(decimate_epoch(average_epochs(epochs, c)));
    }
  }
}
BENCHMARK(BM_ExtractAndAverage);

void BM_TrainSwlda(benchmark::State& state) {
  Rng rng(1);
  TrainingSet set;
  const Eigen::Index m = state.range(0);
  set.features.resize(m, 136);
  set.labels.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    set.labels(i) = (i % 4 == 0) ? 1.0 : -1.0;
    for (Eigen::Index c = 0; c < 136; ++c) set.features(i, c) = rng.gauss();
    set.features(i, 10) += 0.8 * set.labels(i);
    set.features(i, 60) += 0.5 * set.labels(i);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_swlda(set));
  }
}
BENCHMARK(BM_TrainSwlda)->Arg(160)->Arg(320);

void BM_TrainLda(benchmark::State& state) {
  Rng rng(2);
  TrainingSet set;
  set.features.resize(320, 136);
  set.labels.resize(320);
  for (Eigen::Index i = 0; i < 320; ++i) {
    set.labels(i) = (i % 4 == 0) ? 1.0 : -1.0;
    for (Eigen::Index c = 0; c < 136; ++c) set.features(i, c) = rng.gauss();
    set.features(i, 10) += 0.8 * set.labels(i);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_lda(set));
  }
}
BENCHMARK(BM_TrainLda);

void BM_TriggerCodec(benchmark::State& state) {
  const StimulusEvent ev{3, 4096, 1234};
  for (auto _ : state) {
    const TriggerDatagram d = encode_trigger(ev);
    benchmark::DoNotOptimize(
        decode_trigger(std::span<const std::uint8_t>(d.data(), d.size())));
  }
}
BENCHMARK(BM_TriggerCodec);

void BM_CopySpellSelection(benchmark::State& state) {
  SessionConfig cfg;
  cfg.seed = 42;
  cfg.targets = {2};
  const CalibrationResult calib = run_calibration(cfg, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_copy_spelling(cfg, calib.model));
  }
}
BENCHMARK(BM_CopySpellSelection);

}  // namespace

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
