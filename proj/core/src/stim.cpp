#include "hbci/stim.hpp"

#include <ostream>
#include <stdexcept>
#include <utility>

#include "hbci/rng.hpp"

namespace hbci {

namespace {

void shuffle_block(std::array<int, kNumCodes>& block, Rng& rng) {
  // Fisher-Yates with unbiased bounded draws.
  for (int i = kNumCodes - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i) + 1));
    std::swap(block[i], block[j]);
  }
}

}  // namespace

std::vector<int> gen_sequence(int n_blocks, std::uint64_t seed,
                              bool no_adjacent_repeat) {
  if (n_blocks < 1) {
    throw std::invalid_argument("gen_sequence: n_blocks must be >= 1");
  }
  Rng rng(seed);
  std::vector<int> codes;
  codes.reserve(static_cast<std::size_t>(n_blocks) * kNumCodes);
  std::array<int, kNumCodes> block = {1, 2, 3, 4};
  for (int b = 0; b < n_blocks; ++b) {
    shuffle_block(block, rng);
    if (no_adjacent_repeat && !codes.empty()) {
      // Only the block boundary can repeat; redraw until it does not.
      while (block.front() == codes.back()) shuffle_block(block, rng);
    }
    codes.insert(codes.end(), block.begin(), block.end());
  }
  return codes;
}

std::vector<StimulusEvent> schedule_events(const std::vector<int>& codes,
                                           std::int64_t start_sample,
                                           double fs) {
  if (codes.empty()) {
    throw std::invalid_argument("schedule_events: codes must be non-empty");
  }
  const int soa = soa_samples(fs);
  std::vector<StimulusEvent> events;
  events.reserve(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] < 1 || codes[i] > kNumCodes) {
      throw std::invalid_argument("schedule_events: code outside 1..4");
    }
    events.push_back(StimulusEvent{
        codes[i],
        start_sample + static_cast<std::int64_t>(i) * soa,
        static_cast<std::uint32_t>(i),
    });
  }
  return events;
}

BurstWaveform burst_waveform(int out_fs) {
  if (out_fs < 2000 || out_fs % 2000 != 0) {
    throw std::invalid_argument(
        "burst_waveform: out_fs must be >= 2000 and divisible by 2000");
  }
  const int half_cycle = out_fs / 2000;  // samples per 0.5 ms half cycle
  constexpr int kCycles = 10;            // 10 ms of 1000 Hz
  BurstWaveform burst;
  burst.out_fs = out_fs;
  burst.samples.reserve(static_cast<std::size_t>(2 * half_cycle * kCycles));
  for (int cycle = 0; cycle < kCycles; ++cycle) {
    burst.samples.insert(burst.samples.end(), half_cycle, +1);
    burst.samples.insert(burst.samples.end(), half_cycle, -1);
  }
  return burst;
}

void write_burst_csv(const BurstWaveform& burst, std::ostream& os) {
  os << "sample,value\n";
  for (std::size_t i = 0; i < burst.samples.size(); ++i) {
    os << i << ',' << burst.samples[i] << '\n';
  }
}

std::string sequence_to_json(const std::vector<int>& codes) {
  std::string out = "[";
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(codes[i]);
  }
  out += ']';
  return out;
}

}  // namespace hbci
