// Deterministic synthetic EEG in place of subject and amplifier: AR(1)
// background noise, optional 50 Hz line interference, and a gaussian
// P300 bump injected after attended-stimulus onsets.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hbci/types.hpp"

namespace hbci {

struct SynthConfig {
  double noise_rms = 10.0;       // uV, long-run RMS of the background
  double ar_coeff = 0.95;        // AR(1) coefficient, in [0,1)
  double line_amp = 2.0;         // uV, 50 Hz interference on all channels
  double p300_amp = 5.0;         // uV, template peak
  double p300_latency_ms = 300.0;
  double p300_width_ms = 50.0;
  // Per-channel template gain; 1.0 on Cz/CPz/Pz, 0.5 elsewhere.
  std::array<double, kNumChannels> topography = {1.0, 1.0, 0.5, 1.0,
                                                 0.5, 0.5, 0.5, 0.5};
  std::uint64_t seed = 1;
};

/// Throws std::invalid_argument when amplitudes are negative, ar_coeff is
/// outside [0,1), or the template does not fit inside one epoch
/// (latency + 3*width must stay within 800 ms).
void validate(const SynthConfig& cfg);

/// AR(1) background rescaled to noise_rms, plus the 50 Hz line component.
/// Per-channel substreams are derived from (seed, channel), so the same
/// config always produces bit-identical output.
EegBlock gen_background(std::int64_t n_samples, const SynthConfig& cfg);

/// Gaussian bump amp*exp(-(t-latency)^2 / (2 width^2)) sampled over one
/// epoch; peak lands on the sample nearest the latency.
std::vector<double> p300_template(double fs, double amp, double latency_ms,
                                  double width_ms);

/// Background plus, for each event whose code matches `attended`, the
/// P300 template added at the event onset and scaled by the per-channel
/// topography. Events with other codes contribute nothing.
EegBlock synthesize_run(const std::vector<StimulusEvent>& events, int attended,
                        const SynthConfig& cfg, std::int64_t n_samples);

}  // namespace hbci
