#include "hbci/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "hbci/dsp.hpp"
#include "hbci/rng.hpp"
#include "hbci/stim.hpp"
#include "hbci/transport.hpp"
#include "hbci/wire.hpp"

namespace hbci {

namespace {

// Conditioning chain constants: 0.1-25 Hz band-pass plus 50 Hz notch.
constexpr double kHighpassHz = 0.1;
constexpr double kLowpassHz = 25.0;
constexpr double kNotchQ = 30.0;

// Seed streams hanging off the session seed; calibration and test runs
// never share randomness.
constexpr std::uint64_t kCalibStream = 1;
constexpr std::uint64_t kSpellStream = 2;

constexpr int kChunkSamples = 64;  // streaming block size through the filters

// Pre-stimulus lead-in per selection. The 0.1 Hz high-pass needs a few
// seconds to absorb the initial offset of the background process; epochs
// cut before that ride a decaying transient.
constexpr double kLeadInSeconds = 4.0;

struct SelectionSignal {
  std::vector<StimulusEvent> events;
  EegBlock filtered;
};

/// Stream a raw run through band-pass and notch in acquisition-sized
/// chunks with carried state (bit-identical to one-shot filtering).
EegBlock condition_run(const FilterSpec& bandpass, const FilterSpec& notch,
                       const EegBlock& raw, bool paced) {
  FilterState bp_state(bandpass);
  FilterState nt_state(notch);
  EegBlock out = raw;
  const std::int64_t n = raw.samples();
  for (std::int64_t pos = 0; pos < n; pos += kChunkSamples) {
    const std::int64_t len = std::min<std::int64_t>(kChunkSamples, n - pos);
    EegBlock chunk{raw.layout, raw.data.middleCols(pos, len),
                   raw.start_sample + pos};
    chunk = apply_filter(bandpass, chunk, bp_state);
    chunk = apply_filter(notch, chunk, nt_state);
    out.data.middleCols(pos, len) = chunk.data;
    if (paced) {
      std::this_thread::sleep_for(std::chrono::duration<double>(
          static_cast<double>(len) / raw.layout.fs));
    }
  }
  return out;
}

/// Schedule, synthesize and condition one selection attending `attended`.
SelectionSignal make_selection_signal(const SessionConfig& cfg,
                                      const FilterSpec& bandpass,
                                      const FilterSpec& notch,
                                      std::uint64_t seq_seed,
                                      std::uint64_t synth_seed, int attended) {
  const int lead_in = static_cast<int>(kLeadInSeconds * cfg.fs);
  const int soa = soa_samples(cfg.fs);
  const int ep_len = epoch_samples(cfg.fs);

  const std::vector<int> codes =
      gen_sequence(cfg.n_avg, seq_seed, cfg.no_adjacent_repeat);
  const std::vector<StimulusEvent> events =
      schedule_events(codes, lead_in, cfg.fs);
  const std::int64_t n_samples =
      lead_in + static_cast<std::int64_t>(soa) *
                    (static_cast<std::int64_t>(events.size()) - 1) +
      ep_len;

  SynthConfig synth = cfg.synth;
  synth.seed = synth_seed;
  const EegBlock raw = synthesize_run(events, attended, synth, n_samples);
  return SelectionSignal{events, condition_run(bandpass, notch, raw, cfg.paced)};
}

/// Route every event through the trigger chain into the exciter emulator
/// and enforce the delivery accounting.
std::size_t deliver_and_check(const SessionConfig& cfg,
                              const std::vector<StimulusEvent>& events) {
  LoopbackDatagramChannel datagrams;
  for (const auto& ev : events) {
    const TriggerDatagram d = encode_trigger(ev);
    datagrams.send(std::span<const std::uint8_t>(d.data(), d.size()));
  }

  LoopbackByteStream serial;
  while (auto payload = datagrams.recv()) {
    const StimCommandFrame cmd =
        bridge(std::span<const std::uint8_t>(payload->data(), payload->size()));
    const StimFrame f = encode_stim_command(cmd);
    serial.write(std::span<const std::uint8_t>(f.data(), f.size()));
  }

  ExciterEmulator exciter;
  const std::vector<std::uint8_t> bytes = serial.read_available();
  const std::vector<std::uint8_t> acks =
      exciter.feed_bytes(std::span<const std::uint8_t>(bytes.data(), bytes.size()));

  if (acks.size() != events.size() ||
      std::any_of(acks.begin(), acks.end(),
                  [](std::uint8_t a) { return a != kAck; })) {
    throw IntegrityError("wire leg returned NAK or wrong ack count");
  }
  const auto& log = exciter.log();
  if (log.size() != events.size()) {
    throw IntegrityError("exciter log length " + std::to_string(log.size()) +
                         " != event count " + std::to_string(events.size()));
  }
  std::array<int, kNumCodes> per_channel{};
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].channel != events[i].code - 1) {
      throw IntegrityError("exciter log order mismatch at index " +
                           std::to_string(i));
    }
    per_channel[static_cast<std::size_t>(log[i].channel)]++;
  }
  for (int c = 0; c < kNumCodes; ++c) {
    if (per_channel[static_cast<std::size_t>(c)] != cfg.n_avg) {
      throw IntegrityError("channel " + std::to_string(c) + " received " +
                           std::to_string(per_channel[static_cast<std::size_t>(c)]) +
                           " bursts, expected " + std::to_string(cfg.n_avg));
    }
  }
  return log.size();
}

std::string fmt5(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

}  // namespace

std::string to_string(ClassifierKind kind) {
  return kind == ClassifierKind::Swlda ? "swlda" : "lda";
}

ClassifierKind classifier_from_string(const std::string& name) {
  if (name == "swlda") return ClassifierKind::Swlda;
  if (name == "lda") return ClassifierKind::Lda;
  throw std::invalid_argument("unknown classifier '" + name +
                              "' (expected swlda or lda)");
}

std::vector<std::string> validate(const SessionConfig& cfg) {
  if (cfg.fs != kDefaultSampleRate) {
    throw std::invalid_argument("SessionConfig: fs must be 256");
  }
  if (cfg.n_codes != kNumCodes) {
    throw std::invalid_argument("SessionConfig: n_codes must be 4");
  }
  if (cfg.soa_ms != kSoaMs) {
    throw std::invalid_argument("SessionConfig: soa_ms must be 250");
  }
  if (cfg.epoch_ms != kEpochMs) {
    throw std::invalid_argument("SessionConfig: epoch_ms must be 800");
  }
  if (cfg.n_avg < 1) {
    throw std::invalid_argument("SessionConfig: n_avg must be >= 1");
  }
  if (cfg.targets.empty()) {
    throw std::invalid_argument("SessionConfig: targets must be non-empty");
  }
  for (int t : cfg.targets) {
    if (t < 1 || t > kNumCodes) {
      throw std::invalid_argument("SessionConfig: target outside 1..4");
    }
  }
  if (cfg.calib_selections < 2) {
    throw std::invalid_argument("SessionConfig: calib_selections must be >= 2");
  }
  validate(cfg.synth);

  std::vector<std::string> notes;
  if (cfg.n_avg < 5 || cfg.n_avg > 8) {
    notes.push_back("n_avg=" + std::to_string(cfg.n_avg) +
                    " outside the nominal 5..8 range");
  }
  return notes;
}

void SimClock::advance_to(std::int64_t sample) {
  if (sample < current_) {
    throw std::invalid_argument("SimClock: cannot move backwards");
  }
  current_ = sample;
}

CalibrationResult run_calibration(const SessionConfig& cfg, int n_selections) {
  if (n_selections < 2) {
    throw std::invalid_argument("run_calibration: n_selections must be >= 2");
  }
  validate(cfg);
  const FilterSpec bandpass = design_bandpass(cfg.fs, kHighpassHz, kLowpassHz);
  const FilterSpec notch = design_notch(cfg.fs, kLineHz, kNotchQ);
  const std::uint64_t base = derive_seed(cfg.seed, kCalibStream);

  CalibrationResult result;
  std::vector<Epoch> pool;
  for (int i = 0; i < n_selections; ++i) {
    const int attended = i % kNumCodes + 1;
    const SelectionSignal sig = make_selection_signal(
        cfg, bandpass, notch,
        derive_seed(base, 2 * static_cast<std::uint64_t>(i)),
        derive_seed(base, 2 * static_cast<std::uint64_t>(i) + 1), attended);
    std::vector<Epoch> epochs = extract_epochs(sig.filtered, sig.events);
    for (auto& ep : epochs) ep.is_target = (ep.code == attended);
    pool.insert(pool.end(), epochs.begin(), epochs.end());
    result.attended.push_back(attended);
    result.epochs.push_back(std::move(epochs));
  }

  result.data = training_set_from_epochs(pool);
  result.model = cfg.classifier == ClassifierKind::Swlda
                     ? train_swlda(result.data)
                     : train_lda(result.data);
  return result;
}

SessionReport run_copy_spelling(const SessionConfig& cfg,
                                const SwldaModel& model) {
  SessionReport report;
  report.warnings = validate(cfg);
  report.config = cfg;
  report.seed = cfg.seed;

  const int ep_len = epoch_samples(cfg.fs);
  const int expected_dim = kNumChannels * (ep_len / kDecimationFactor);
  if (model.meta.n_features != expected_dim) {
    throw std::invalid_argument(
        "run_copy_spelling: model dimension " +
        std::to_string(model.meta.n_features) + " does not match pipeline (" +
        std::to_string(expected_dim) + ")");
  }

  const FilterSpec bandpass = design_bandpass(cfg.fs, kHighpassHz, kLowpassHz);
  const FilterSpec notch = design_notch(cfg.fs, kLineHz, kNotchQ);
  const std::uint64_t base = derive_seed(cfg.seed, kSpellStream);

  SimClock clock;
  int correct = 0;
  for (std::size_t i = 0; i < cfg.targets.size(); ++i) {
    const int target = cfg.targets[i];
    const SelectionSignal sig = make_selection_signal(
        cfg, bandpass, notch, derive_seed(base, 2 * i),
        derive_seed(base, 2 * i + 1), target);

    const std::size_t delivered = deliver_and_check(cfg, sig.events);

    const std::vector<Epoch> epochs = extract_epochs(sig.filtered, sig.events);
    std::array<FeatureVector, kNumCodes> averaged;
    for (int c = 0; c < kNumCodes; ++c) {
      averaged[static_cast<std::size_t>(c)] =
          decimate_epoch(average_epochs(epochs, c + 1));
    }
    const SelectionResult sel = select(model, averaged);

    // The run advances one selection's worth of signal on the sample clock.
    clock.advance_to(clock.sample() + sig.filtered.samples());

    SelectionRecord rec;
    rec.index = static_cast<int>(i);
    rec.target = target;
    rec.chosen = sel.chosen;
    rec.scores = sel.scores;
    rec.n_avg = cfg.n_avg;
    rec.n_events = static_cast<int>(delivered);
    rec.first_onset_sample = sig.events.front().onset_sample;
    rec.last_onset_sample = sig.events.back().onset_sample;
    report.selections.push_back(rec);
    if (sel.chosen == target) ++correct;
  }

  report.accuracy = static_cast<double>(correct) /
                    static_cast<double>(report.selections.size());
  report.bits_per_selection = wolpaw_bits(report.accuracy, cfg.n_codes);
  report.selection_time_s = selection_time(cfg.n_avg, cfg);
  report.bprr_bits_per_min =
      bprr(report.accuracy, cfg.n_codes, report.selection_time_s);
  return report;
}

double wolpaw_bits(double p, int n) {
  if (n < 2) throw std::invalid_argument("wolpaw_bits: n must be >= 2");
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("wolpaw_bits: p must be in [0,1]");
  }
  double bits = std::log2(static_cast<double>(n));
  if (p >= 1.0) return bits;
  if (p > 0.0) bits += p * std::log2(p);
  bits += (1.0 - p) * std::log2((1.0 - p) / (n - 1));
  return bits;
}

double selection_time(int n_avg, const SessionConfig& cfg) {
  if (n_avg < 1) throw std::invalid_argument("selection_time: n_avg must be >= 1");
  return n_avg * cfg.n_codes * cfg.soa_ms / 1000.0;
}

double bprr(double p, int n, double t_sel) {
  if (t_sel <= 0.0) throw std::invalid_argument("bprr: t_sel must be > 0");
  return wolpaw_bits(p, n) * 60.0 / t_sel;
}

std::string report_to_json(const SessionReport& report) {
  const SessionConfig& cfg = report.config;
  std::ostringstream os;
  os << "{\n";
  os << "  \"seed\": " << report.seed << ",\n";
  os << "  \"config\": {\n";
  os << "    \"soa_ms\": " << fmt5(cfg.soa_ms) << ",\n";
  os << "    \"epoch_ms\": " << fmt5(cfg.epoch_ms) << ",\n";
  os << "    \"fs\": " << fmt5(cfg.fs) << ",\n";
  os << "    \"n_avg\": " << cfg.n_avg << ",\n";
  os << "    \"n_codes\": " << cfg.n_codes << ",\n";
  os << "    \"targets\": [";
  for (std::size_t i = 0; i < cfg.targets.size(); ++i) {
    if (i) os << ',';
    os << cfg.targets[i];
  }
  os << "],\n";
  os << "    \"classifier\": \"" << to_string(cfg.classifier) << "\",\n";
  os << "    \"no_adjacent_repeat\": "
     << (cfg.no_adjacent_repeat ? "true" : "false") << ",\n";
  os << "    \"calib_selections\": " << cfg.calib_selections << ",\n";
  os << "    \"synth\": {\n";
  os << "      \"noise_rms\": " << fmt5(cfg.synth.noise_rms) << ",\n";
  os << "      \"ar_coeff\": " << fmt5(cfg.synth.ar_coeff) << ",\n";
  os << "      \"line_amp\": " << fmt5(cfg.synth.line_amp) << ",\n";
  os << "      \"p300_amp\": " << fmt5(cfg.synth.p300_amp) << ",\n";
  os << "      \"p300_latency_ms\": " << fmt5(cfg.synth.p300_latency_ms) << ",\n";
  os << "      \"p300_width_ms\": " << fmt5(cfg.synth.p300_width_ms) << ",\n";
  os << "      \"topography\": [";
  for (int c = 0; c < kNumChannels; ++c) {
    if (c) os << ',';
    os << fmt5(cfg.synth.topography[static_cast<std::size_t>(c)]);
  }
  os << "],\n";
  os << "      \"seed\": " << cfg.synth.seed << "\n";
  os << "    }\n";
  os << "  },\n";
  os << "  \"warnings\": [";
  for (std::size_t i = 0; i < report.warnings.size(); ++i) {
    if (i) os << ',';
    os << '"' << json_escape(report.warnings[i]) << '"';
  }
  os << "],\n";
  os << "  \"selections\": [\n";
  for (std::size_t i = 0; i < report.selections.size(); ++i) {
    const SelectionRecord& r = report.selections[i];
    os << "    {\"index\": " << r.index << ", \"target\": " << r.target
       << ", \"chosen\": " << r.chosen << ", \"scores\": [";
    for (int c = 0; c < kNumCodes; ++c) {
      if (c) os << ',';
      os << fmt5(r.scores[static_cast<std::size_t>(c)]);
    }
    os << "], \"n_avg\": " << r.n_avg << ", \"n_events\": " << r.n_events
       << ", \"first_onset_sample\": " << r.first_onset_sample
       << ", \"last_onset_sample\": " << r.last_onset_sample << "}";
    os << (i + 1 < report.selections.size() ? ",\n" : "\n");
  }
  os << "  ],\n";
  os << "  \"accuracy\": " << fmt5(report.accuracy) << ",\n";
  os << "  \"bits_per_selection\": " << fmt5(report.bits_per_selection) << ",\n";
  os << "  \"selection_time_s\": " << fmt5(report.selection_time_s) << ",\n";
  os << "  \"bprr_bits_per_min\": " << fmt5(report.bprr_bits_per_min) << "\n";
  os << "}\n";
  return os.str();
}

void write_report_csv(const SessionReport& report, std::ostream& os) {
  os << "index,target,chosen,score1,score2,score3,score4\n";
  for (const SelectionRecord& r : report.selections) {
    os << r.index << ',' << r.target << ',' << r.chosen;
    for (int c = 0; c < kNumCodes; ++c) {
      os << ',' << fmt5(r.scores[static_cast<std::size_t>(c)]);
    }
    os << '\n';
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<double> parse_double_list(const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
  return out;
}

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("expected boolean, got '" + value + "'");
}

}  // namespace

SessionConfig parse_config(const std::string& text) {
  SessionConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "soa_ms") {
        cfg.soa_ms = std::stod(value);
      } else if (key == "epoch_ms") {
        cfg.epoch_ms = std::stod(value);
      } else if (key == "fs") {
        cfg.fs = std::stod(value);
      } else if (key == "n_avg") {
        cfg.n_avg = std::stoi(value);
      } else if (key == "n_codes") {
        cfg.n_codes = std::stoi(value);
      } else if (key == "targets") {
        cfg.targets.clear();
        for (double v : parse_double_list(value)) {
          cfg.targets.push_back(static_cast<int>(v));
        }
      } else if (key == "classifier") {
        cfg.classifier = classifier_from_string(value);
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "no_adjacent_repeat") {
        cfg.no_adjacent_repeat = parse_bool(value);
      } else if (key == "calib_selections") {
        cfg.calib_selections = std::stoi(value);
      } else if (key == "paced") {
        cfg.paced = parse_bool(value);
      } else if (key == "synth.noise_rms") {
        cfg.synth.noise_rms = std::stod(value);
      } else if (key == "synth.ar_coeff") {
        cfg.synth.ar_coeff = std::stod(value);
      } else if (key == "synth.line_amp") {
        cfg.synth.line_amp = std::stod(value);
      } else if (key == "synth.p300_amp") {
        cfg.synth.p300_amp = std::stod(value);
      } else if (key == "synth.p300_latency_ms") {
        cfg.synth.p300_latency_ms = std::stod(value);
      } else if (key == "synth.p300_width_ms") {
        cfg.synth.p300_width_ms = std::stod(value);
      } else if (key == "synth.topography") {
        const auto values = parse_double_list(value);
        if (values.size() != kNumChannels) {
          throw std::invalid_argument("topography needs 8 values");
        }
        std::copy(values.begin(), values.end(), cfg.synth.topography.begin());
      } else if (key == "synth.seed") {
        cfg.synth.seed = std::stoull(value);
      } else {
        throw std::invalid_argument("unknown key");
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " (" + key + "): " + e.what());
    }
  }
  return cfg;
}

SessionConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("load_config_file: cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

}  // namespace hbci
