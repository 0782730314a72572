#include "hbci/wire.hpp"

#include <algorithm>

namespace hbci {

namespace {

std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes) {
  std::uint8_t sum = 0;
  for (std::uint8_t b : bytes) sum ^= b;
  return sum;
}

bool stim_frame_valid(std::span<const std::uint8_t> frame) {
  return frame.size() == kStimFrameBytes && frame[0] == kStimFrameStart &&
         frame[1] <= 3 && xor_checksum(frame.first(4)) == frame[4];
}

}  // namespace

TriggerDatagram encode_trigger(const StimulusEvent& ev) {
  if (ev.code < 1 || ev.code > kNumCodes) {
    throw std::invalid_argument("encode_trigger: code outside 1..4");
  }
  if (ev.onset_sample < 0 || ev.onset_sample > 0xFFFFFFFFLL) {
    throw std::invalid_argument("encode_trigger: onset_sample outside u32");
  }
  TriggerDatagram d{};
  d[0] = kTriggerMagic0;
  d[1] = kTriggerMagic1;
  d[2] = kTriggerVersion;
  d[3] = static_cast<std::uint8_t>(ev.code);
  const std::uint32_t seq = ev.seq;
  const std::uint32_t onset = static_cast<std::uint32_t>(ev.onset_sample);
  for (int i = 0; i < 4; ++i) {
    d[4 + i] = static_cast<std::uint8_t>(seq >> (8 * i));
    d[8 + i] = static_cast<std::uint8_t>(onset >> (8 * i));
  }
  // d[12..15) reserved zeros
  d[15] = xor_checksum(std::span<const std::uint8_t>(d.data(), 15));
  return d;
}

StimulusEvent decode_trigger(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kTriggerBytes) {
    throw WireError(WireError::Kind::Length,
                    "decode_trigger: expected 16 bytes, got " +
                        std::to_string(bytes.size()));
  }
  if (bytes[0] != kTriggerMagic0 || bytes[1] != kTriggerMagic1 ||
      bytes[2] != kTriggerVersion) {
    throw WireError(WireError::Kind::Protocol,
                    "decode_trigger: bad magic or version");
  }
  if (xor_checksum(bytes.first(15)) != bytes[15]) {
    throw WireError(WireError::Kind::Checksum,
                    "decode_trigger: checksum mismatch");
  }
  if (bytes[12] != 0 || bytes[13] != 0 || bytes[14] != 0) {
    throw WireError(WireError::Kind::Protocol,
                    "decode_trigger: reserved bytes not zero");
  }
  if (bytes[3] < 1 || bytes[3] > kNumCodes) {
    throw WireError(WireError::Kind::Range,
                    "decode_trigger: code outside 1..4");
  }
  std::uint32_t seq = 0, onset = 0;
  for (int i = 3; i >= 0; --i) {
    seq = (seq << 8) | bytes[static_cast<std::size_t>(4 + i)];
    onset = (onset << 8) | bytes[static_cast<std::size_t>(8 + i)];
  }
  return StimulusEvent{static_cast<int>(bytes[3]),
                       static_cast<std::int64_t>(onset), seq};
}

StimFrame encode_stim_command(const StimCommandFrame& cmd) {
  if (cmd.channel > 3) {
    throw std::invalid_argument("encode_stim_command: channel outside 0..3");
  }
  StimFrame f{};
  f[0] = kStimFrameStart;
  f[1] = cmd.channel;
  f[2] = cmd.duration_ms;
  f[3] = cmd.seq;
  f[4] = xor_checksum(std::span<const std::uint8_t>(f.data(), 4));
  return f;
}

StimCommandFrame decode_stim_command(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kStimFrameBytes) {
    throw WireError(WireError::Kind::Length,
                    "decode_stim_command: expected 5 bytes, got " +
                        std::to_string(bytes.size()));
  }
  if (bytes[0] != kStimFrameStart) {
    throw WireError(WireError::Kind::Protocol,
                    "decode_stim_command: bad start byte");
  }
  if (xor_checksum(bytes.first(4)) != bytes[4]) {
    throw WireError(WireError::Kind::Checksum,
                    "decode_stim_command: checksum mismatch");
  }
  if (bytes[1] > 3) {
    throw WireError(WireError::Kind::Range,
                    "decode_stim_command: channel outside 0..3");
  }
  return StimCommandFrame{bytes[1], bytes[2], bytes[3]};
}

StimCommandFrame bridge(std::span<const std::uint8_t> datagram) {
  const StimulusEvent ev = decode_trigger(datagram);
  return StimCommandFrame{
      static_cast<std::uint8_t>(ev.code - 1),
      10,
      static_cast<std::uint8_t>(ev.seq & 0xFF),
  };
}

std::uint8_t ExciterEmulator::feed_frame(std::span<const std::uint8_t> frame) {
  if (!stim_frame_valid(frame)) return kNak;
  log_.push_back(ExciterLogEntry{
      static_cast<int>(frame[1]),
      static_cast<std::uint64_t>(log_.size()),
      static_cast<int>(frame[2]),
  });
  return kAck;
}

std::vector<std::uint8_t> ExciterEmulator::feed_bytes(
    std::span<const std::uint8_t> data) {
  std::vector<std::uint8_t> acks;
  buffer_.insert(buffer_.end(), data.begin(), data.end());
  std::size_t pos = 0;
  while (buffer_.size() - pos >= kStimFrameBytes) {
    const std::span<const std::uint8_t> candidate(buffer_.data() + pos,
                                                  kStimFrameBytes);
    if (stim_frame_valid(candidate)) {
      feed_frame(candidate);
      acks.push_back(kAck);
      pos += kStimFrameBytes;
      continue;
    }
    acks.push_back(kNak);
    // Resynchronize on the next frame start past the current byte.
    const auto next = std::find(buffer_.begin() + pos + 1, buffer_.end(),
                                kStimFrameStart);
    pos = static_cast<std::size_t>(next - buffer_.begin());
  }
  buffer_.erase(buffer_.begin(), buffer_.begin() + pos);
  return acks;
}

void ExciterEmulator::clear() {
  log_.clear();
  buffer_.clear();
}

}  // namespace hbci
