// Causal signal conditioning and feature extraction: Butterworth band-pass
// and 50 Hz notch as biquad cascades, streaming application with carried
// state, epoch slicing, per-code averaging and decimation into classifier
// features.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hbci/types.hpp"

namespace hbci {

/// One second-order recursive section, a0 normalized to 1.
struct BiquadSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Poles strictly inside the unit circle (stability triangle on a1/a2).
bool is_stable(const BiquadSection& s);

enum class FilterKind { Bandpass, Notch };

struct FilterSpec {
  std::vector<BiquadSection> sections;
  FilterKind kind = FilterKind::Bandpass;
  double fs = kDefaultSampleRate;
  double f_lo = 0.0;  // high-pass corner (bandpass) or center (notch)
  double f_hi = 0.0;  // low-pass corner (bandpass) or Q (notch)
};

/// |H(e^{i 2 pi f / fs})| from the cascade coefficients.
double magnitude_response(const FilterSpec& spec, double f);

/// 2nd-order Butterworth high-pass at f_hp cascaded with a 4th-order
/// Butterworth low-pass at f_lp. Requires 0 < f_hp < f_lp < fs/2.
FilterSpec design_bandpass(double fs, double f_hp, double f_lp);

/// Single biquad notch with its zero pair on the unit circle at f0.
/// Default q = 30 gives about 1.7 Hz of -3 dB width at 50 Hz.
FilterSpec design_notch(double fs, double f0, double q = 30.0);

/// Direct-form II transposed registers, one pair per section per channel.
/// Single-owner: one stream per instance.
class FilterState {
 public:
  FilterState() = default;
  FilterState(const FilterSpec& spec, int n_channels = kNumChannels);

  int sections() const { return n_sections_; }
  int channels() const { return n_channels_; }
  void reset();

  double& z1(int section, int channel);
  double& z2(int section, int channel);

 private:
  int n_sections_ = 0;
  int n_channels_ = 0;
  std::vector<double> z_;  // [section][channel][2]
};

/// Causal per-channel filtering with carried state. Splitting a signal
/// into sub-blocks and carrying the state gives bit-identical output to
/// filtering it in one piece. Throws std::invalid_argument when the state
/// dimensions do not match the spec/block.
EegBlock apply_filter(const FilterSpec& spec, const EegBlock& block,
                      FilterState& state);

/// Single-channel convenience with a fresh zero state.
std::vector<double> filter_signal(const FilterSpec& spec,
                                  const std::vector<double>& x);

/// One epoch per event, sliced [onset, onset+epoch_samples) from the
/// block. Throws std::out_of_range naming the offending event when a
/// slice overruns the block.
std::vector<Epoch> extract_epochs(const EegBlock& block,
                                  const std::vector<StimulusEvent>& events);

/// Element-wise mean over the epochs whose code matches. Throws
/// std::invalid_argument when none matches.
Epoch average_epochs(const std::vector<Epoch>& epochs, int code);

inline constexpr int kDecimationFactor = 12;

/// Non-overlapping window means of `factor` samples per channel,
/// concatenated channel-major: 8 x 17 = 136 raw-uV features at factor 12.
/// A trailing remainder of less than `factor` samples is dropped.
FeatureVector decimate_epoch(const Epoch& epoch, int factor = kDecimationFactor);

/// One JSON record per line: {"code":..,"onset_sample":..,"is_target":..,
/// "data":[8][L]}. Consumed by the classifier for offline training.
void write_epochs_jsonl(const std::vector<Epoch>& epochs, std::ostream& os);
std::vector<Epoch> read_epochs_jsonl(std::istream& is);

}  // namespace hbci
