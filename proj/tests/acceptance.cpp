// Acceptance suite: end-to-end checks of the pipeline's published-rate
// reproduction, chance-level and high-SNR behavior, filter conformance,
// wire integrity, stepwise-regression correctness, timing accounting and
// CLI determinism. Prints one PASS/FAIL line per criterion; exits
// nonzero when any fails or overruns its runtime budget. Run with no
// arguments for all criteria or with a list of criterion numbers.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hbci/classify.hpp"
#include "hbci/dsp.hpp"
#include "hbci/rng.hpp"
#include "hbci/session.hpp"
#include "hbci/stim.hpp"
#include "hbci/synth.hpp"
#include "hbci/wire.hpp"
#include "oracles.hpp"

using namespace hbci;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

// --- criterion 1: published BPRR rows from the formula --------------------

Outcome c1_bprr_table() {
  const std::array<std::tuple<double, int, double>, 5> rows = {{
      {1.00, 7, 17.14},
      {0.75, 6, 7.92},
      {0.50, 8, 1.56},
      {0.50, 5, 2.49},
      {0.75, 8, 5.94},
  }};
  double worst = 0.0;
  for (const auto& [accuracy, n_avg, published] : rows) {
    const double rate = bprr(accuracy, 4, selection_time(n_avg));
    worst = std::max(worst, std::abs(rate - published));
  }
  return {worst < 0.01,
          "5 rows, max |computed - published| = " + fmt(worst) + " bit/min"};
}

// --- criterion 2: chance level at zero SNR --------------------------------

Outcome c2_chance_level() {
  SessionConfig cfg;
  cfg.seed = 2025;
  cfg.n_avg = 5;
  cfg.synth.p300_amp = 0.0;
  cfg.targets.clear();
  for (int i = 0; i < 200; ++i) cfg.targets.push_back(i % 4 + 1);
  const CalibrationResult calib = run_calibration(cfg, 4);
  const SessionReport report = run_copy_spelling(cfg, calib.model);
  const bool pass = report.accuracy >= 0.16 && report.accuracy <= 0.34;
  return {pass, "200 zero-SNR selections, accuracy " + fmt(report.accuracy) +
                    " (band 0.16..0.34 around chance 0.25)"};
}

// --- criterion 3: high-SNR accuracy ----------------------------------------

Outcome c3_high_snr() {
  SessionConfig cfg;
  cfg.seed = 1;  // library default; see the measured distribution in the log
  cfg.n_avg = 8;
  cfg.synth.p300_amp = 5.0;
  cfg.synth.noise_rms = 10.0;
  cfg.targets.clear();
  for (int i = 0; i < 50; ++i) cfg.targets.push_back(i % 4 + 1);

  const CalibrationResult calib = run_calibration(cfg, 8);
  const SessionReport noisy = run_copy_spelling(cfg, calib.model);

  SessionConfig clean_cfg = cfg;
  clean_cfg.synth.noise_rms = 0.0;
  const CalibrationResult clean_calib = run_calibration(clean_cfg, 8);
  const SessionReport clean = run_copy_spelling(clean_cfg, clean_calib.model);

  const bool pass = noisy.accuracy >= 0.90 && clean.accuracy == 1.0;
  return {pass, "5 uV / 10 uV accuracy " + fmt(noisy.accuracy) +
                    " (need >= 0.90), noise-free accuracy " +
                    fmt(clean.accuracy) + " (need exactly 1)"};
}

// --- criterion 4: filter conformance ---------------------------------------

Outcome c4_filters() {
  const FilterSpec bandpass = design_bandpass(256.0, 0.1, 25.0);
  const FilterSpec notch = design_notch(256.0, 50.0, 30.0);

  const double notch_50 = oracle::steady_state_amplitude(notch, 50.0);
  const double notch_db = -20.0 * std::log10(notch_50 + 1e-300);
  const double dc_out = oracle::dc_residual(bandpass, 100.0, 10.0);
  const double dc_db = -20.0 * std::log10(dc_out / 100.0 + 1e-300);
  const double pass_10 = oracle::steady_state_amplitude(bandpass, 10.0);
  const double impulse_50_db =
      20.0 * std::log10(oracle::impulse_response_magnitude(notch, 50.0) + 1e-300);

  bool split_exact = true;
  SynthConfig synth_cfg;
  synth_cfg.seed = 44;
  const EegBlock raw = gen_background(2048, synth_cfg);
  FilterState whole_state(bandpass);
  const EegBlock whole = apply_filter(bandpass, raw, whole_state);
  Rng rng(4040);
  for (int trial = 0; trial < 100 && split_exact; ++trial) {
    const std::int64_t cut =
        1 + static_cast<std::int64_t>(rng.bounded(2046));
    FilterState state(bandpass);
    EegBlock first{raw.layout, raw.data.leftCols(cut), 0};
    EegBlock second{raw.layout, raw.data.rightCols(2048 - cut), cut};
    const EegBlock f1 = apply_filter(bandpass, first, state);
    const EegBlock f2 = apply_filter(bandpass, second, state);
    if ((whole.data.leftCols(cut) - f1.data).cwiseAbs().maxCoeff() != 0.0 ||
        (whole.data.rightCols(2048 - cut) - f2.data).cwiseAbs().maxCoeff() !=
            0.0) {
      split_exact = false;
    }
  }

  const bool pass = notch_db >= 30.0 && dc_db >= 40.0 && pass_10 >= 0.70795 &&
                    pass_10 <= 1.0 && impulse_50_db <= -30.0 && split_exact;
  return {pass, "notch@50Hz " + fmt(notch_db, 1) + " dB, DC " + fmt(dc_db, 1) +
                    " dB, 10 Hz gain " + fmt(pass_10) + ", impulse-DFT@50Hz " +
                    fmt(impulse_50_db, 1) + " dB, 100 random splits " +
                    (split_exact ? "bit-exact" : "MISMATCH")};
}

// --- criterion 5: wire integrity -------------------------------------------

Outcome c5_wire() {
  Rng rng(555);
  int roundtrip_failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const StimulusEvent ev{
        static_cast<int>(rng.bounded(4)) + 1,
        static_cast<std::int64_t>(rng.bounded(0x100000000ULL)),
        static_cast<std::uint32_t>(rng.bounded(0x100000000ULL)),
    };
    const TriggerDatagram d = encode_trigger(ev);
    if (!(decode_trigger(std::span<const std::uint8_t>(d.data(), d.size())) ==
          ev)) {
      ++roundtrip_failures;
    }
    const StimCommandFrame cmd{static_cast<std::uint8_t>(rng.bounded(4)),
                               static_cast<std::uint8_t>(rng.bounded(256)),
                               static_cast<std::uint8_t>(rng.bounded(256))};
    const StimFrame f = encode_stim_command(cmd);
    if (!(decode_stim_command(std::span<const std::uint8_t>(f.data(), f.size())) ==
          cmd)) {
      ++roundtrip_failures;
    }
  }

  int undetected = 0;
  const TriggerDatagram good = encode_trigger({2, 4096, 77});
  for (std::size_t pos = 0; pos < kTriggerBytes; ++pos) {
    for (int delta = 1; delta < 256; ++delta) {
      TriggerDatagram bad = good;
      bad[pos] = static_cast<std::uint8_t>(bad[pos] + delta);
      try {
        (void)decode_trigger(std::span<const std::uint8_t>(bad.data(), bad.size()));
        ++undetected;
      } catch (const WireError&) {
      }
    }
  }
  const StimFrame good_frame = encode_stim_command({1, 10, 3});
  for (std::size_t pos = 0; pos < kStimFrameBytes; ++pos) {
    for (int delta = 1; delta < 256; ++delta) {
      StimFrame bad = good_frame;
      bad[pos] = static_cast<std::uint8_t>(bad[pos] + delta);
      try {
        (void)decode_stim_command(
            std::span<const std::uint8_t>(bad.data(), bad.size()));
        ++undetected;
      } catch (const WireError&) {
      }
    }
  }

  // End-to-end order with per-channel counts == n_avg.
  const int n_avg = 5;
  bool order_ok = true;
  const std::vector<StimulusEvent> events =
      schedule_events(gen_sequence(n_avg, 99), 0);
  ExciterEmulator exciter;
  for (const auto& ev : events) {
    const TriggerDatagram d = encode_trigger(ev);
    const StimFrame f = encode_stim_command(
        bridge(std::span<const std::uint8_t>(d.data(), d.size())));
    if (exciter.feed_frame(std::span<const std::uint8_t>(f.data(), f.size())) !=
        kAck) {
      order_ok = false;
    }
  }
  std::array<int, 4> counts{};
  if (exciter.log().size() != events.size()) order_ok = false;
  for (std::size_t i = 0; i < exciter.log().size(); ++i) {
    if (exciter.log()[i].channel != events[i].code - 1) order_ok = false;
    counts[static_cast<std::size_t>(exciter.log()[i].channel)]++;
  }
  for (int n : counts) {
    if (n != n_avg) order_ok = false;
  }

  const bool pass = roundtrip_failures == 0 && undetected == 0 && order_ok;
  return {pass, "10^4 round-trips (" + std::to_string(roundtrip_failures) +
                    " failures), byte-corruption scan " +
                    std::to_string((kTriggerBytes + kStimFrameBytes) * 255) +
                    " cases (" + std::to_string(undetected) +
                    " undetected), order " + (order_ok ? "preserved" : "BROKEN")};
}

// --- criterion 6: SWLDA oracle equivalence ---------------------------------

Outcome c6_swlda_oracle() {
  double worst_weight_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const Eigen::Index m = 300;
    TrainingSet set;
    set.features.resize(m, 136);
    set.labels.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      set.labels(i) = (i % 4 == 0) ? 1.0 : -1.0;  // oddball 1:3 ratio
      for (Eigen::Index c = 0; c < 136; ++c) set.features(i, c) = rng.gauss();
      // a couple of informative columns, varying with the seed
      set.features(i, static_cast<Eigen::Index>(seed % 136)) +=
          0.8 * set.labels(i);
      set.features(i, static_cast<Eigen::Index>((seed * 7 + 3) % 136)) +=
          0.5 * set.labels(i);
    }
    const SwldaModel model = train_swlda(set);
    const Eigen::VectorXd beta =
        oracle::least_squares_qr(set.features, set.labels, model.selected);
    worst_weight_gap = std::max(
        worst_weight_gap,
        std::abs(model.intercept - beta(0)) /
            std::max(std::abs(beta(0)), 1e-12));
    for (std::size_t i = 0; i < model.selected.size(); ++i) {
      const double ref = beta(static_cast<Eigen::Index>(i) + 1);
      worst_weight_gap =
          std::max(worst_weight_gap, std::abs(model.weights[i] - ref) /
                                         std::max(std::abs(ref), 1e-12));
    }
  }

  // Stepwise p-values against the brute-force refit oracle on a toy set.
  Rng rng(606);
  TrainingSet toy;
  toy.features.resize(60, 5);
  toy.labels.resize(60);
  for (Eigen::Index i = 0; i < 60; ++i) {
    toy.labels(i) = (i % 2 == 0) ? 1.0 : -1.0;
    for (Eigen::Index c = 0; c < 5; ++c) toy.features(i, c) = rng.gauss();
    toy.features(i, 0) += 0.9 * toy.labels(i);
    toy.features(i, 2) += 0.6 * toy.labels(i);
  }
  StepwiseTrace trace;
  (void)train_swlda(toy, 0.10, 0.15, 5, &trace);
  double worst_p_gap = 0.0;
  int compared = 0;
  for (const StepwiseStep& step : trace) {
    for (const auto& [feature, p_impl] : step.pvalues) {
      double p_ref;
      if (step.forward) {
        p_ref =
            oracle::forward_pvalue_bruteforce(toy, step.selected_before, feature);
      } else {
        int pos = 0;
        while (step.selected_before[static_cast<std::size_t>(pos)] != feature) {
          ++pos;
        }
        p_ref = oracle::backward_pvalue_bruteforce(toy, step.selected_before, pos);
      }
      worst_p_gap = std::max(worst_p_gap, std::abs(p_impl - p_ref) /
                                              std::max(p_ref, 1e-12));
      ++compared;
    }
  }

  const bool pass = worst_weight_gap < 1e-8 && worst_p_gap < 1e-8 && compared > 0;
  return {pass, "20 datasets, max relative weight gap " + fmt(worst_weight_gap, 12) +
                    "; " + std::to_string(compared) +
                    " stepwise p-values, max relative gap " + fmt(worst_p_gap, 12)};
}

// --- criterion 7: timing accounting ----------------------------------------

Outcome c7_timing() {
  SessionConfig cfg;
  cfg.seed = 707;
  cfg.n_avg = 5;
  cfg.targets = {3};
  // A placeholder unit model: timing does not depend on the weights.
  SwldaModel model;
  model.selected = {0};
  model.weights = {1.0};
  model.meta.n_features = 136;
  model.meta.max_features = 136;
  model.meta.n_train = 8;

  const SessionReport report = run_copy_spelling(cfg, model);
  const SelectionRecord& rec = report.selections.at(0);
  const double span_s =
      static_cast<double>(rec.last_onset_sample - rec.first_onset_sample) /
      cfg.fs;
  const bool pass = rec.n_events == 20 && span_s == 4.75 &&
                    report.selection_time_s == 5.0;
  return {pass, "n_avg=5: " + std::to_string(rec.n_events) +
                    " events spanning " + fmt(span_s, 2) +
                    " s on the sample clock, selection_time " +
                    fmt(report.selection_time_s, 2) + " s"};
}

// --- criterion 8: CLI determinism ------------------------------------------

Outcome c8_cli_determinism() {
  const char* cli = std::getenv("HBCI_CLI");
  if (cli == nullptr) {
    return {false, "HBCI_CLI environment variable not set (path to the CLI)"};
  }
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / ("hbci_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path a = dir / "a.json";
  const fs::path b = dir / "b.json";
  const std::string base = std::string("\"") + cli + "\" spell --seed 7 --out ";
  const std::string log = " >/dev/null 2>&1";
  if (std::system((base + a.string() + log).c_str()) != 0 ||
      std::system((base + b.string() + log).c_str()) != 0) {
    return {false, "spell --seed 7 invocation failed"};
  }
  const auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  };
  const std::string ja = slurp(a);
  const std::string jb = slurp(b);
  fs::remove_all(dir);
  const bool pass = !ja.empty() && ja == jb;
  return {pass, "two `spell --seed 7` runs: " + std::to_string(ja.size()) +
                    " bytes, " + (pass ? "byte-identical" : "DIFFERENT")};
}

struct Criterion {
  int number;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "published BPRR rows within 0.01 bit/min", 1.0, c1_bprr_table},
      {2, "zero-SNR accuracy at chance level", 60.0, c2_chance_level},
      {3, "high-SNR accuracy", 60.0, c3_high_snr},
      {4, "filter conformance", 10.0, c4_filters},
      {5, "wire integrity", 10.0, c5_wire},
      {6, "SWLDA oracle equivalence", 30.0, c6_swlda_oracle},
      {7, "timing accounting", 1.0, c7_timing},
      {8, "CLI determinism", 30.0, c8_cli_determinism},
  };

  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), c.number) == wanted.end()) {
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const bool in_budget = elapsed < c.budget_s;
    const bool pass = outcome.pass && in_budget;
    if (!pass) ++failures;
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << c.number
              << ": " << c.name << " - " << outcome.detail << " ["
              << fmt(elapsed, 2) << " s / budget " << fmt(c.budget_s, 0)
              << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
