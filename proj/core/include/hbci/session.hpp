// End-to-end orchestration of calibration and copy-spelling runs
// (stim -> wire -> synth -> dsp -> classify), plus the information-rate
// metrics (bits per selection, bit-per-run-rate) and report serialization.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hbci/classify.hpp"
#include "hbci/synth.hpp"
#include "hbci/types.hpp"

namespace hbci {

enum class ClassifierKind { Swlda, Lda };

std::string to_string(ClassifierKind kind);
ClassifierKind classifier_from_string(const std::string& name);

struct SessionConfig {
  double soa_ms = kSoaMs;      // 250
  double epoch_ms = kEpochMs;  // 800
  double fs = kDefaultSampleRate;
  int n_avg = 5;               // epochs averaged per code, 5..8 nominal
  int n_codes = kNumCodes;     // 4
  std::vector<int> targets = {1, 2, 3, 4};
  ClassifierKind classifier = ClassifierKind::Swlda;
  SynthConfig synth;
  std::uint64_t seed = 1;
  bool no_adjacent_repeat = true;
  int calib_selections = 8;
  bool paced = false;  // sleep to real time while streaming; results unchanged
};

/// Throws std::invalid_argument on hard violations (n_codes != 4, n_avg
/// < 1, bad synth config). Returns human-readable notes for soft ones
/// (n_avg outside the nominal 5..8 range).
std::vector<std::string> validate(const SessionConfig& cfg);

/// Simulated acquisition clock on the sample grid; replaces wall time so
/// runs are deterministic.
class SimClock {
 public:
  std::int64_t sample() const { return current_; }
  double seconds(double fs) const { return static_cast<double>(current_) / fs; }
  /// Monotone: throws std::invalid_argument on an attempt to move back.
  void advance_to(std::int64_t sample);

 private:
  std::int64_t current_ = 0;
};

struct SelectionRecord {
  int index = 0;
  int target = 0;
  int chosen = 0;
  std::array<double, kNumCodes> scores{};
  int n_avg = 0;
  int n_events = 0;                 // exciter log length for the selection
  std::int64_t first_onset_sample = 0;
  std::int64_t last_onset_sample = 0;
};

struct SessionReport {
  std::vector<SelectionRecord> selections;
  double accuracy = 0.0;
  double bits_per_selection = 0.0;
  double selection_time_s = 0.0;
  double bprr_bits_per_min = 0.0;
  SessionConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// Wire-leg accounting failure (NAK, count or order mismatch) aborting a
/// copy-spelling run.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationResult {
  TrainingSet data;
  SwldaModel model;
  // Per selection: the attended code and the labelled epochs, for
  // inspection, export and offline experiments.
  std::vector<int> attended;
  std::vector<std::vector<Epoch>> epochs;
};

/// Runs n_selections calibration selections (attended code cycling 1..4),
/// pools the labelled epochs and trains the configured classifier.
CalibrationResult run_calibration(const SessionConfig& cfg, int n_selections);

/// Copy-spelling over cfg.targets: schedules stimuli, routes every event
/// through the wire chain into the exciter emulator (counts and order are
/// enforced), synthesizes EEG attending the prescribed target, filters
/// with carried state, averages epochs per code and selects. Throws
/// IntegrityError when the wire leg misbehaves.
SessionReport run_copy_spelling(const SessionConfig& cfg,
                                const SwldaModel& model);

/// Bits per selection for accuracy p over n classes:
/// log2(n) + p log2 p + (1-p) log2((1-p)/(n-1)), with p=1 -> log2 n and
/// the p=0 term taken as 0.
double wolpaw_bits(double p, int n);

/// Stimulation time of one selection: n_avg * n_codes * soa. The trailing
/// epoch tail past the last onset is excluded by convention.
double selection_time(int n_avg, const SessionConfig& cfg = SessionConfig{});

/// wolpaw_bits(p, n) * 60 / t_sel, in bits/min.
double bprr(double p, int n, double t_sel);

/// Deterministic report serialization, numerics at 5 decimal places.
/// Identical runs produce byte-identical JSON.
std::string report_to_json(const SessionReport& report);
/// One row per selection: index,target,chosen,score1..score4.
void write_report_csv(const SessionReport& report, std::ostream& os);

/// Flat key=value config file (# comments). Keys mirror SessionConfig
/// fields; nested synth fields use a "synth." prefix. Unknown keys throw.
SessionConfig parse_config(const std::string& text);
SessionConfig load_config_file(const std::filesystem::path& path);

}  // namespace hbci
