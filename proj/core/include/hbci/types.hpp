// Shared domain types for the tactile P300 pipeline: channel layout, raw
// signal blocks, stimulus events, epochs and classifier feature vectors.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hbci {

inline constexpr int kNumChannels = 8;
inline constexpr int kNumCodes = 4;
inline constexpr double kDefaultSampleRate = 256.0;
inline constexpr double kEpochMs = 800.0;
inline constexpr double kSoaMs = 250.0;
inline constexpr double kLineHz = 50.0;

/// Electrode montage plus sampling rate. The default layout is the fixed
/// 8-channel centro-parietal montage this pipeline is built around.
struct ChannelLayout {
  std::array<std::string, kNumChannels> names;
  double fs = kDefaultSampleRate;
};

ChannelLayout default_layout();

/// Samples per epoch at rate fs, rounded down so the epoch never exceeds
/// the nominal 800 ms window (204 at 256 Hz).
int epoch_samples(double fs);

/// Stimulus onset asynchrony in samples. Throws std::invalid_argument if
/// 250 ms is not an integral number of samples at fs (64 at 256 Hz).
int soa_samples(double fs);

/// One tactile burst command: finger code 1-4, onset on the EEG sample
/// clock, and a monotone sequence counter starting at 0.
struct StimulusEvent {
  int code = 1;
  std::int64_t onset_sample = 0;
  std::uint32_t seq = 0;

  bool operator==(const StimulusEvent&) const = default;
};

/// A contiguous slab of multichannel signal, one row per channel, in
/// microvolts. start_sample anchors it on the acquisition sample clock.
struct EegBlock {
  ChannelLayout layout;
  Eigen::MatrixXd data;  // kNumChannels x N
  std::int64_t start_sample = 0;

  std::int64_t samples() const { return data.cols(); }
};

/// One 800 ms post-stimulus slice. is_target is only set during
/// calibration, where the attended code is known.
struct Epoch {
  int code = 1;
  Eigen::MatrixXd data;  // kNumChannels x epoch_samples(fs)
  std::int64_t onset_sample = 0;
  std::optional<bool> is_target;
};

/// Flat classifier input, channel-major: 8 channels x 17 decimated
/// samples = 136 values at the default decimation factor of 12.
using FeatureVector = std::vector<double>;

/// CSV export of a block: header row of channel names, then one row per
/// sample with 8 columns.
void write_block_csv(const EegBlock& block, std::ostream& os);

}  // namespace hbci
