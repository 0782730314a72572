#include "hbci/types.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hbci {

ChannelLayout default_layout() {
  return ChannelLayout{
      {"Cz", "CPz", "POz", "Pz", "P1", "P2", "C3", "C4"},
      kDefaultSampleRate,
  };
}

int epoch_samples(double fs) {
  if (fs <= 0.0) throw std::invalid_argument("epoch_samples: fs must be > 0");
  return static_cast<int>(std::floor(kEpochMs / 1000.0 * fs));
}

int soa_samples(double fs) {
  if (fs <= 0.0) throw std::invalid_argument("soa_samples: fs must be > 0");
  const double exact = kSoaMs / 1000.0 * fs;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9) {
    throw std::invalid_argument("soa_samples: 250 ms is not integral at fs=" +
                                std::to_string(fs));
  }
  return static_cast<int>(rounded);
}

void write_block_csv(const EegBlock& block, std::ostream& os) {
  for (int c = 0; c < kNumChannels; ++c) {
    os << block.layout.names[c] << (c + 1 < kNumChannels ? ',' : '\n');
  }
  for (std::int64_t n = 0; n < block.samples(); ++n) {
    for (int c = 0; c < kNumChannels; ++c) {
      os << block.data(c, n) << (c + 1 < kNumChannels ? ',' : '\n');
    }
  }
}

}  // namespace hbci
