#include "hbci/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hbci/rng.hpp"

namespace hbci {

void validate(const SynthConfig& cfg) {
  if (cfg.noise_rms < 0.0) {
    throw std::invalid_argument("SynthConfig: noise_rms must be >= 0");
  }
  if (cfg.p300_amp < 0.0) {
    throw std::invalid_argument("SynthConfig: p300_amp must be >= 0");
  }
  if (cfg.ar_coeff < 0.0 || cfg.ar_coeff >= 1.0) {
    throw std::invalid_argument("SynthConfig: ar_coeff must be in [0,1)");
  }
  if (cfg.p300_width_ms <= 0.0) {
    throw std::invalid_argument("SynthConfig: p300_width_ms must be > 0");
  }
  if (cfg.p300_latency_ms + 3.0 * cfg.p300_width_ms > kEpochMs) {
    throw std::invalid_argument(
        "SynthConfig: p300 template does not fit inside one epoch "
        "(latency + 3*width must be <= 800 ms)");
  }
  for (double g : cfg.topography) {
    if (g < 0.0 || g > 1.0) {
      throw std::invalid_argument("SynthConfig: topography gains must be in [0,1]");
    }
  }
}

EegBlock gen_background(std::int64_t n_samples, const SynthConfig& cfg) {
  if (n_samples < 0) {
    throw std::invalid_argument("gen_background: n_samples must be >= 0");
  }
  validate(cfg);

  EegBlock block;
  block.layout = default_layout();
  block.start_sample = 0;
  block.data = Eigen::MatrixXd::Zero(kNumChannels, n_samples);

  const double fs = block.layout.fs;
  // Innovation scale that gives a stationary RMS of noise_rms.
  const double sigma_e =
      cfg.noise_rms * std::sqrt(1.0 - cfg.ar_coeff * cfg.ar_coeff);

  for (int c = 0; c < kNumChannels; ++c) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));
    double prev = cfg.noise_rms * rng.gauss();  // stationary start
    for (std::int64_t n = 0; n < n_samples; ++n) {
      prev = cfg.ar_coeff * prev + sigma_e * rng.gauss();
      block.data(c, n) = prev;
    }
  }

  if (cfg.line_amp != 0.0) {
    const double w = 2.0 * std::numbers::pi * kLineHz / fs;
    for (std::int64_t n = 0; n < n_samples; ++n) {
      const double line = cfg.line_amp * std::sin(w * static_cast<double>(n));
      for (int c = 0; c < kNumChannels; ++c) block.data(c, n) += line;
    }
  }
  return block;
}

std::vector<double> p300_template(double fs, double amp, double latency_ms,
                                  double width_ms) {
  if (width_ms <= 0.0) {
    throw std::invalid_argument("p300_template: width must be > 0");
  }
  if (amp < 0.0) {
    throw std::invalid_argument("p300_template: amp must be >= 0");
  }
  const int length = epoch_samples(fs);
  std::vector<double> wave(static_cast<std::size_t>(length), 0.0);
  for (int n = 0; n < length; ++n) {
    const double t_ms = static_cast<double>(n) / fs * 1000.0;
    const double d = (t_ms - latency_ms) / width_ms;
    wave[static_cast<std::size_t>(n)] = amp * std::exp(-0.5 * d * d);
  }
  return wave;
}

EegBlock synthesize_run(const std::vector<StimulusEvent>& events, int attended,
                        const SynthConfig& cfg, std::int64_t n_samples) {
  if (attended < 1 || attended > kNumCodes) {
    throw std::invalid_argument("synthesize_run: attended code outside 1..4");
  }
  const int length = epoch_samples(kDefaultSampleRate);
  for (const auto& ev : events) {
    if (ev.onset_sample < 0 || ev.onset_sample + length > n_samples) {
      throw std::out_of_range(
          "synthesize_run: event seq " + std::to_string(ev.seq) +
          " at onset " + std::to_string(ev.onset_sample) +
          " overruns the block end");
    }
  }

  EegBlock block = gen_background(n_samples, cfg);
  const std::vector<double> bump = p300_template(
      block.layout.fs, cfg.p300_amp, cfg.p300_latency_ms, cfg.p300_width_ms);
  for (const auto& ev : events) {
    if (ev.code != attended) continue;
    for (int c = 0; c < kNumChannels; ++c) {
      const double gain = cfg.topography[static_cast<std::size_t>(c)];
      if (gain == 0.0) continue;
      for (std::size_t k = 0; k < bump.size(); ++k) {
        block.data(c, ev.onset_sample + static_cast<std::int64_t>(k)) +=
            gain * bump[k];
      }
    }
  }
  return block;
}

}  // namespace hbci
