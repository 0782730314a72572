#include <doctest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hbci/dsp.hpp"
#include "hbci/session.hpp"

using namespace hbci;

namespace {

SessionConfig fast_config(std::uint64_t seed) {
  SessionConfig cfg;
  cfg.seed = seed;
  cfg.n_avg = 5;
  return cfg;
}

/// Accuracy of one calibrate+spell session, n targets cycling 1..4.
double session_accuracy(std::uint64_t seed, double p300_amp, int n_targets,
                        int calib_selections = 4) {
  SessionConfig cfg = fast_config(seed);
  cfg.synth.p300_amp = p300_amp;
  cfg.targets.clear();
  for (int i = 0; i < n_targets; ++i) cfg.targets.push_back(i % 4 + 1);
  const CalibrationResult calib = run_calibration(cfg, calib_selections);
  return run_copy_spelling(cfg, calib.model).accuracy;
}

}  // namespace

TEST_SUITE("session") {

TEST_CASE("wolpaw_bits closed form") {
  CHECK(wolpaw_bits(1.0, 4) == doctest::Approx(2.0));
  CHECK(wolpaw_bits(0.25, 4) == 0.0);  // chance carries no information
  CHECK(wolpaw_bits(0.75, 4) == doctest::Approx(0.79248125).epsilon(1e-7));
  CHECK_THROWS_AS(wolpaw_bits(-0.1, 4), std::invalid_argument);
  CHECK_THROWS_AS(wolpaw_bits(1.1, 4), std::invalid_argument);
  CHECK_THROWS_AS(wolpaw_bits(0.5, 1), std::invalid_argument);
}

TEST_CASE("selection_time is n_avg * 4 * 250 ms") {
  CHECK(selection_time(5) == doctest::Approx(5.0));
  CHECK(selection_time(7) == doctest::Approx(7.0));
  CHECK(selection_time(8) == doctest::Approx(8.0));
  CHECK_THROWS_AS(selection_time(0), std::invalid_argument);
}

TEST_CASE("bprr reproduces the published per-subject rates") {
  // (accuracy, n_avg) -> bit/min, five subjects, each within 0.01 bit/min
  CHECK(std::abs(bprr(1.00, 4, selection_time(7)) - 17.14) < 0.01);
  CHECK(std::abs(bprr(0.75, 4, selection_time(6)) - 7.92) < 0.01);
  CHECK(std::abs(bprr(0.50, 4, selection_time(8)) - 1.56) < 0.01);
  CHECK(std::abs(bprr(0.50, 4, selection_time(5)) - 2.49) < 0.01);
  CHECK(std::abs(bprr(0.75, 4, selection_time(8)) - 5.94) < 0.01);
  CHECK(bprr(0.25, 4, 5.0) == 0.0);
  CHECK_THROWS_AS(bprr(0.5, 4, 0.0), std::invalid_argument);
}

TEST_CASE("SimClock is monotone") {
  SimClock clock;
  clock.advance_to(100);
  CHECK(clock.sample() == 100);
  CHECK(clock.seconds(256.0) == doctest::Approx(100.0 / 256.0));
  CHECK_THROWS_AS(clock.advance_to(99), std::invalid_argument);
}

TEST_CASE("calibration pools epochs with a 1:3 target ratio at zero SNR") {
  SessionConfig cfg = fast_config(33);
  cfg.synth.p300_amp = 0.0;
  const CalibrationResult calib = run_calibration(cfg, 4);
  const auto m = calib.data.labels.size();
  CHECK(m == 4 * 4 * cfg.n_avg);
  int targets = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (calib.data.labels(i) > 0) ++targets;
  }
  CHECK(targets * 3 == m - targets);
}

TEST_CASE("calibration is deterministic in the session seed") {
  SessionConfig cfg = fast_config(99);
  const CalibrationResult a = run_calibration(cfg, 2);
  const CalibrationResult b = run_calibration(cfg, 2);
  CHECK((a.data.features - b.data.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.model.selected == b.model.selected);
  CHECK(a.model.weights == b.model.weights);
}

TEST_CASE("high-SNR calibration classifies its own training selections") {
  SessionConfig cfg = fast_config(7);
  cfg.synth.p300_amp = 5.0;
  cfg.synth.noise_rms = 10.0;
  const CalibrationResult calib = run_calibration(cfg, 8);
  int correct = 0;
  for (std::size_t s = 0; s < calib.epochs.size(); ++s) {
    std::array<FeatureVector, kNumCodes> averaged;
    for (int c = 0; c < kNumCodes; ++c) {
      averaged[static_cast<std::size_t>(c)] =
          decimate_epoch(average_epochs(calib.epochs[s], c + 1));
    }
    if (select(calib.model, averaged).chosen == calib.attended[s]) ++correct;
  }
  CHECK(correct == 8);
}

TEST_CASE("noise-free spelling is perfect") {
  SessionConfig cfg = fast_config(11);
  cfg.synth.noise_rms = 0.0;
  cfg.targets = {1, 2, 3, 4};
  const CalibrationResult calib = run_calibration(cfg, cfg.calib_selections);
  const SessionReport report = run_copy_spelling(cfg, calib.model);
  CHECK(report.accuracy == 1.0);
  for (const auto& rec : report.selections) CHECK(rec.chosen == rec.target);
}

TEST_CASE("event accounting: 20 events spanning 4.75 s at n_avg = 5") {
  SessionConfig cfg = fast_config(13);
  cfg.targets = {2};
  const CalibrationResult calib = run_calibration(cfg, 2);
  const SessionReport report = run_copy_spelling(cfg, calib.model);
  REQUIRE(report.selections.size() == 1);
  const SelectionRecord& rec = report.selections[0];
  CHECK(rec.n_events == 20);
  CHECK(rec.last_onset_sample - rec.first_onset_sample == 1216);  // 4.75 s
  CHECK(report.selection_time_s == doctest::Approx(5.0));
}

TEST_CASE("report summary is self-consistent with its records") {
  SessionConfig cfg = fast_config(17);
  cfg.synth.p300_amp = 3.0;
  cfg.targets = {1, 2, 3, 4, 1, 3};
  const CalibrationResult calib = run_calibration(cfg, 4);
  const SessionReport report = run_copy_spelling(cfg, calib.model);

  int correct = 0;
  for (const auto& rec : report.selections) {
    if (rec.chosen == rec.target) ++correct;
  }
  const double accuracy =
      static_cast<double>(correct) / static_cast<double>(report.selections.size());
  CHECK(report.accuracy == accuracy);
  CHECK(report.bits_per_selection == wolpaw_bits(accuracy, 4));
  CHECK(report.selection_time_s == selection_time(cfg.n_avg, cfg));
  CHECK(report.bprr_bits_per_min ==
        bprr(accuracy, 4, report.selection_time_s));
}

TEST_CASE("identical sessions serialize to identical bytes") {
  SessionConfig cfg = fast_config(23);
  cfg.targets = {4, 2};
  const CalibrationResult c1 = run_calibration(cfg, 2);
  const CalibrationResult c2 = run_calibration(cfg, 2);
  const std::string j1 = report_to_json(run_copy_spelling(cfg, c1.model));
  const std::string j2 = report_to_json(run_copy_spelling(cfg, c2.model));
  CHECK(j1 == j2);
}

TEST_CASE("report JSON is valid and matches the in-memory report") {
  SessionConfig cfg = fast_config(37);
  cfg.targets = {3, 1};
  const CalibrationResult calib = run_calibration(cfg, 2);
  const SessionReport report = run_copy_spelling(cfg, calib.model);
  const nlohmann::json j = nlohmann::json::parse(report_to_json(report));

  CHECK(j.at("seed").get<std::uint64_t>() == cfg.seed);
  CHECK(j.at("config").at("n_avg").get<int>() == cfg.n_avg);
  CHECK(j.at("config").at("classifier").get<std::string>() == "swlda");
  CHECK(j.at("config").at("synth").at("noise_rms").get<double>() ==
        doctest::Approx(cfg.synth.noise_rms));
  REQUIRE(j.at("selections").size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& rec = j.at("selections").at(i);
    CHECK(rec.at("target").get<int>() == report.selections[i].target);
    CHECK(rec.at("chosen").get<int>() == report.selections[i].chosen);
    CHECK(rec.at("scores").size() == 4);
  }
  CHECK(j.at("accuracy").get<double>() ==
        doctest::Approx(report.accuracy).epsilon(1e-5));
  CHECK(j.at("bprr_bits_per_min").get<double>() ==
        doctest::Approx(report.bprr_bits_per_min).epsilon(1e-4));
}

TEST_CASE("report CSV has one row per selection") {
  SessionConfig cfg = fast_config(29);
  cfg.targets = {1, 4};
  const CalibrationResult calib = run_calibration(cfg, 2);
  const SessionReport report = run_copy_spelling(cfg, calib.model);
  std::ostringstream os;
  write_report_csv(report, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "index,target,chosen,score1,score2,score3,score4");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("mean accuracy is non-decreasing in template amplitude") {
  const std::vector<double> amps = {0.0, 2.0, 5.0, 10.0};
  std::vector<double> mean_acc;
  for (double amp : amps) {
    double acc = 0.0;
    const int n_seeds = 50;
    for (int s = 0; s < n_seeds; ++s) {
      acc += session_accuracy(1000 + static_cast<std::uint64_t>(s), amp, 4);
    }
    mean_acc.push_back(acc / n_seeds);
  }
  INFO("mean accuracies: ", mean_acc[0], " ", mean_acc[1], " ", mean_acc[2],
       " ", mean_acc[3]);
  int inversions = 0;
  for (std::size_t i = 1; i < mean_acc.size(); ++i) {
    if (mean_acc[i] < mean_acc[i - 1] - 0.03) ++inversions;
  }
  CHECK(inversions == 0);
  CHECK(mean_acc.back() > mean_acc.front());
}

TEST_CASE("model dimension mismatch is rejected") {
  SessionConfig cfg = fast_config(31);
  SwldaModel model;
  model.selected = {0};
  model.weights = {1.0};
  model.meta.n_features = 10;
  model.meta.max_features = 10;
  CHECK_THROWS_AS(run_copy_spelling(cfg, model), std::invalid_argument);
}

TEST_CASE("config validation catches hard errors and flags soft ones") {
  SessionConfig cfg;
  CHECK(validate(cfg).empty());

  cfg.n_avg = 9;  // allowed but flagged
  CHECK(validate(cfg).size() == 1);

  cfg = SessionConfig{};
  cfg.n_codes = 3;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = SessionConfig{};
  cfg.fs = 512.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = SessionConfig{};
  cfg.targets = {5};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("config files parse into SessionConfig") {
  const std::string text =
      "# session setup\n"
      "seed = 42\n"
      "n_avg = 7\n"
      "classifier = lda\n"
      "targets = 1,2,3,4,2\n"
      "no_adjacent_repeat = false\n"
      "synth.noise_rms = 8.5\n"
      "synth.p300_amp = 4.0\n"
      "synth.topography = 1,1,1,1,0,0,0,0\n";
  const SessionConfig cfg = parse_config(text);
  CHECK(cfg.seed == 42);
  CHECK(cfg.n_avg == 7);
  CHECK(cfg.classifier == ClassifierKind::Lda);
  CHECK(cfg.targets == std::vector<int>{1, 2, 3, 4, 2});
  CHECK(cfg.no_adjacent_repeat == false);
  CHECK(cfg.synth.noise_rms == 8.5);
  CHECK(cfg.synth.p300_amp == 4.0);
  CHECK(cfg.synth.topography[3] == 1.0);
  CHECK(cfg.synth.topography[4] == 0.0);

  CHECK_THROWS_AS(parse_config("bogus_key = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n_avg\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("synth.topography = 1,2\n"),
                  std::invalid_argument);
}

TEST_CASE("classifier names round-trip") {
  CHECK(to_string(ClassifierKind::Swlda) == "swlda");
  CHECK(classifier_from_string("lda") == ClassifierKind::Lda);
  CHECK_THROWS_AS(classifier_from_string("svm"), std::invalid_argument);
}

}  // TEST_SUITE
