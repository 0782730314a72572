// Oddball stimulus sequencing and tactile burst waveform generation:
// block-randomized equal-count code sequences at 250 ms SOA, and the
// 10 ms / 1000 Hz square-wave burst fed to the exciters.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hbci/types.hpp"

namespace hbci {

/// Random code sequence of length 4*n_blocks in which every code 1-4
/// appears exactly n_blocks times and each consecutive group of 4 is a
/// permutation of {1,2,3,4}. With no_adjacent_repeat the block boundary
/// never repeats a code (offending blocks are reshuffled from the same
/// deterministic stream).
std::vector<int> gen_sequence(int n_blocks, std::uint64_t seed,
                              bool no_adjacent_repeat = true);

/// Fixed-cadence scheduling: event i gets onset start_sample + i*soa and
/// seq = i. soa is exactly 64 samples at the default 256 Hz clock.
std::vector<StimulusEvent> schedule_events(const std::vector<int>& codes,
                                           std::int64_t start_sample,
                                           double fs = kDefaultSampleRate);

/// 10 ms burst of a 1000 Hz square wave rendered at out_fs: ten cycles of
/// +1/-1 with out_fs/2000 samples per half cycle.
struct BurstWaveform {
  int out_fs = 0;
  std::vector<int> samples;  // values in {+1, -1, 0}
};

BurstWaveform burst_waveform(int out_fs);

/// CSV rows of (sample index, value) for driving external audio tooling.
void write_burst_csv(const BurstWaveform& burst, std::ostream& os);

/// JSON array of the code sequence, e.g. [2,4,1,3,...].
std::string sequence_to_json(const std::vector<int>& codes);

}  // namespace hbci
