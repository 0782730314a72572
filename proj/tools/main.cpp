// Command-line front end: calibration, copy-spelling, parameter sweeps,
// the published-rate table and a wire-protocol self test.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hbci/classify.hpp"
#include "hbci/dsp.hpp"
#include "hbci/rng.hpp"
#include "hbci/session.hpp"
#include "hbci/stim.hpp"
#include "hbci/wire.hpp"

namespace {

using namespace hbci;

struct CommonOpts {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> classifier;
  std::optional<int> n_avg;
  std::optional<double> snr;
};

void add_common_options(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config,
                  "key=value config file (see README for keys)");
  cmd->add_option("--seed", opts.seed, "session seed (drives all randomness)");
  cmd->add_option("--classifier", opts.classifier, "swlda or lda")
      ->check(CLI::IsMember({"swlda", "lda"}));
  cmd->add_option("--n-avg", opts.n_avg, "epochs averaged per code (5..8)");
  cmd->add_option("--snr", opts.snr,
                  "set synth.p300_amp = snr * synth.noise_rms");
}

SessionConfig make_config(const CommonOpts& opts) {
  SessionConfig cfg;
  if (opts.config) cfg = load_config_file(*opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.classifier) cfg.classifier = classifier_from_string(*opts.classifier);
  if (opts.n_avg) cfg.n_avg = *opts.n_avg;
  if (opts.snr) cfg.synth.p300_amp = *opts.snr * cfg.synth.noise_rms;
  return cfg;
}

std::string fmt5(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << text;
}

int cmd_calibrate(const CommonOpts& opts, const std::string& out,
                  int selections, const std::optional<std::string>& dump_epochs,
                  const std::optional<std::string>& from_epochs) {
  const SessionConfig cfg = make_config(opts);
  SwldaModel model;
  if (from_epochs) {
    // Offline training from previously exported labelled epochs.
    std::ifstream is(*from_epochs);
    if (!is) throw std::runtime_error("cannot open " + *from_epochs);
    const TrainingSet data = training_set_from_epochs(read_epochs_jsonl(is));
    model = cfg.classifier == ClassifierKind::Swlda ? train_swlda(data)
                                                    : train_lda(data);
  } else {
    const CalibrationResult result = run_calibration(cfg, selections);
    model = result.model;
    if (dump_epochs) {
      std::ofstream os(*dump_epochs);
      if (!os) throw std::runtime_error("cannot open " + *dump_epochs);
      for (const auto& selection : result.epochs) {
        write_epochs_jsonl(selection, os);
      }
    }
  }
  save_model(model, out);
  std::cout << "trained " << model.meta.method << " on " << model.meta.n_train
            << " epochs, selected " << model.selected.size() << " of "
            << model.meta.n_features << " features; model: " << out << "\n";
  for (const auto& w : model.meta.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  return 0;
}

int cmd_spell(const CommonOpts& opts, const std::optional<std::string>& model_path,
              const std::string& out, std::optional<std::string> csv_path,
              const std::vector<int>& targets, bool paced) {
  SessionConfig cfg = make_config(opts);
  if (!targets.empty()) cfg.targets = targets;
  cfg.paced = paced;

  const SwldaModel model = model_path
                               ? load_model(*model_path)
                               : run_calibration(cfg, cfg.calib_selections).model;
  const SessionReport report = run_copy_spelling(cfg, model);

  write_text_file(out, report_to_json(report));
  if (!csv_path) {
    csv_path = std::filesystem::path(out).replace_extension(".csv").string();
  }
  std::ofstream csv(*csv_path);
  if (!csv) throw std::runtime_error("cannot open " + *csv_path);
  write_report_csv(report, csv);

  std::cout << "selections " << report.selections.size() << ", accuracy "
            << fmt5(report.accuracy) << ", bits/selection "
            << fmt5(report.bits_per_selection) << ", selection time "
            << fmt5(report.selection_time_s) << " s, BPRR "
            << fmt5(report.bprr_bits_per_min) << " bit/min\n"
            << "report: " << out << ", csv: " << *csv_path << "\n";
  return 0;
}

int cmd_simulate(const CommonOpts& opts, std::vector<double> amps,
                 std::vector<int> n_avgs, int n_targets, int selections,
                 const std::optional<std::string>& out) {
  const SessionConfig base = make_config(opts);
  std::string table = "p300_amp,n_avg,accuracy,bits_per_selection,bprr_bits_per_min\n";
  for (double amp : amps) {
    for (int n_avg : n_avgs) {
      SessionConfig cfg = base;
      cfg.synth.p300_amp = amp;
      cfg.n_avg = n_avg;
      cfg.targets.clear();
      for (int i = 0; i < n_targets; ++i) cfg.targets.push_back(i % 4 + 1);
      const CalibrationResult calib = run_calibration(cfg, selections);
      const SessionReport report = run_copy_spelling(cfg, calib.model);
      table += fmt5(amp) + "," + std::to_string(n_avg) + "," +
               fmt5(report.accuracy) + "," + fmt5(report.bits_per_selection) +
               "," + fmt5(report.bprr_bits_per_min) + "\n";
    }
  }
  if (out) {
    write_text_file(*out, table);
    std::cout << "wrote " << *out << "\n";
  } else {
    std::cout << table;
  }
  return 0;
}

int cmd_table1() {
  // Published peak accuracies with the averaging depths that reproduce
  // the per-subject rates.
  const std::array<std::pair<double, int>, 5> rows = {{
      {1.00, 7}, {0.75, 6}, {0.50, 8}, {0.50, 5}, {0.75, 8},
  }};
  std::cout << "subject,accuracy,n_avg,selection_time_s,bits_per_selection,"
               "bprr_bits_per_min\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto [accuracy, n_avg] = rows[i];
    const double t_sel = selection_time(n_avg);
    std::cout << (i + 1) << ',' << fmt5(accuracy) << ',' << n_avg << ','
              << fmt5(t_sel) << ',' << fmt5(wolpaw_bits(accuracy, 4)) << ','
              << fmt5(bprr(accuracy, 4, t_sel)) << "\n";
  }
  return 0;
}

int cmd_wire_selftest(int n_events) {
  Rng rng(20120715);
  int trigger_ok = 0, frame_ok = 0;
  for (int i = 0; i < n_events; ++i) {
    const StimulusEvent ev{
        static_cast<int>(rng.bounded(4)) + 1,
        static_cast<std::int64_t>(rng.bounded(0x100000000ULL)),
        static_cast<std::uint32_t>(rng.bounded(0x100000000ULL)),
    };
    const TriggerDatagram d = encode_trigger(ev);
    if (decode_trigger(std::span<const std::uint8_t>(d.data(), d.size())) == ev) {
      ++trigger_ok;
    }
    const StimCommandFrame cmd{static_cast<std::uint8_t>(rng.bounded(4)),
                               static_cast<std::uint8_t>(rng.bounded(256)),
                               static_cast<std::uint8_t>(rng.bounded(256))};
    const StimFrame f = encode_stim_command(cmd);
    if (decode_stim_command(std::span<const std::uint8_t>(f.data(), f.size())) ==
        cmd) {
      ++frame_ok;
    }
  }

  int undetected = 0;
  const TriggerDatagram good = encode_trigger({3, 1216, 19});
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
  const StimFrame good_frame = encode_stim_command({2, 10, 9});
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

  // End-to-end ordering through the bridge and emulator.
  const std::vector<int> codes = gen_sequence(5, 7);
  const std::vector<StimulusEvent> events = schedule_events(codes, 0);
  ExciterEmulator exciter;
  bool order_ok = true;
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
  for (std::size_t i = 0; i < exciter.log().size(); ++i) {
    if (exciter.log()[i].channel != events[i].code - 1) order_ok = false;
    counts[static_cast<std::size_t>(exciter.log()[i].channel)]++;
  }
  for (int n : counts) {
    if (n != 5) order_ok = false;
  }

  std::cout << "trigger round-trips: " << trigger_ok << "/" << n_events << "\n"
            << "stim-frame round-trips: " << frame_ok << "/" << n_events << "\n"
            << "corruption scan: "
            << (kTriggerBytes + kStimFrameBytes) * 255 << " corrupt frames, "
            << undetected << " undetected\n"
            << "end-to-end order: "
            << (order_ok ? "preserved, per-channel counts ok" : "FAILED")
            << "\n";

  const bool clean = trigger_ok == n_events && frame_ok == n_events &&
                     undetected == 0 && order_ok;
  return clean ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tactile P300 speller pipeline (synthetic-subject closed loop)"};
  app.require_subcommand(1);

  CommonOpts calibrate_opts;
  std::string calibrate_out = "model.json";
  int calibrate_selections = 8;
  std::optional<std::string> dump_epochs;
  std::optional<std::string> from_epochs;
  CLI::App* calibrate = app.add_subcommand("calibrate", "train a classifier model");
  add_common_options(calibrate, calibrate_opts);
  calibrate->add_option("--out", calibrate_out, "model JSON path");
  calibrate->add_option("--selections", calibrate_selections,
                        "number of calibration selections");
  calibrate->add_option("--dump-epochs", dump_epochs,
                        "write labelled epochs as JSONL");
  calibrate->add_option("--from-epochs", from_epochs,
                        "train offline from an epoch JSONL export");

  CommonOpts spell_opts;
  std::optional<std::string> spell_model;
  std::string spell_out = "report.json";
  std::optional<std::string> spell_csv;
  std::vector<int> spell_targets;
  bool spell_paced = false;
  CLI::App* spell = app.add_subcommand("spell", "run copy-spelling and report");
  add_common_options(spell, spell_opts);
  spell->add_option("--model", spell_model,
                    "model JSON (default: calibrate in-session first)");
  spell->add_option("--out", spell_out, "report JSON path");
  spell->add_option("--csv", spell_csv, "per-selection CSV path");
  spell->add_option("--targets", spell_targets, "target codes to spell")
      ->delimiter(',');
  spell->add_flag("--paced", spell_paced, "sleep to real time while streaming");

  CommonOpts sim_opts;
  std::vector<double> sim_amps = {0.0, 2.0, 5.0, 10.0};
  std::vector<int> sim_n_avgs = {5, 6, 7, 8};
  int sim_targets = 20;
  int sim_selections = 8;
  std::optional<std::string> sim_out;
  CLI::App* simulate =
      app.add_subcommand("simulate", "sweep p300_amp x n_avg, tabulate accuracy/BPRR");
  add_common_options(simulate, sim_opts);
  simulate->add_option("--amps", sim_amps, "template amplitudes to sweep")
      ->delimiter(',');
  simulate->add_option("--n-avgs", sim_n_avgs, "averaging depths to sweep")
      ->delimiter(',');
  simulate->add_option("--n-targets", sim_targets, "selections per cell");
  simulate->add_option("--selections", sim_selections,
                       "calibration selections per cell");
  simulate->add_option("--out", sim_out, "write the CSV table here");

  CLI::App* table1 = app.add_subcommand(
      "table1", "recompute the published per-subject BPRR rows");

  int selftest_events = 10000;
  CLI::App* selftest =
      app.add_subcommand("wire-selftest", "protocol round-trip and corruption scan");
  selftest->add_option("--events", selftest_events, "number of random events");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage error
  }

  try {
    if (calibrate->parsed()) {
      return cmd_calibrate(calibrate_opts, calibrate_out, calibrate_selections,
                           dump_epochs, from_epochs);
    }
    if (spell->parsed()) {
      return cmd_spell(spell_opts, spell_model, spell_out, spell_csv,
                       spell_targets, spell_paced);
    }
    if (simulate->parsed()) {
      return cmd_simulate(sim_opts, sim_amps, sim_n_avgs, sim_targets,
                          sim_selections, sim_out);
    }
    if (table1->parsed()) return cmd_table1();
    if (selftest->parsed()) return cmd_wire_selftest(selftest_events);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
