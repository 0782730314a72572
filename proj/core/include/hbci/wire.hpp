// Trigger delivery chain: 16-byte event datagrams (acquisition -> stimulus
// application), the bridge onto 5-byte serial stimulus commands
// (application -> microcontroller), and a tactile exciter emulator that
// acknowledges and logs bursts. Both frame layouts are fixed-length with
// an XOR checksum, so any single-byte corruption is detectable.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hbci/types.hpp"

namespace hbci {

inline constexpr std::uint8_t kAck = 0x06;
inline constexpr std::uint8_t kNak = 0x15;

inline constexpr std::size_t kTriggerBytes = 16;
inline constexpr std::uint8_t kTriggerMagic0 = 0x48;
inline constexpr std::uint8_t kTriggerMagic1 = 0x42;
inline constexpr std::uint8_t kTriggerVersion = 0x01;

inline constexpr std::size_t kStimFrameBytes = 5;
inline constexpr std::uint8_t kStimFrameStart = 0x53;  // 'S'

using TriggerDatagram = std::array<std::uint8_t, kTriggerBytes>;
using StimFrame = std::array<std::uint8_t, kStimFrameBytes>;

/// Decode failure with a distinguishable kind per error class.
class WireError : public std::runtime_error {
 public:
  enum class Kind {
    Length,    // wrong buffer size
    Protocol,  // bad magic / version / reserved bytes / frame start
    Checksum,  // XOR checksum mismatch
    Range,     // field outside its domain (code, channel)
  };

  WireError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Datagram layout (16 bytes):
//   [0..2)  magic 0x48 0x42      [2]     version 0x01
//   [3]     code 1..4            [4..8)  seq, u32 little-endian
//   [8..12) onset_sample, u32 LE [12..15) reserved zeros
//   [15]    checksum = XOR of bytes [0..15)
TriggerDatagram encode_trigger(const StimulusEvent& ev);
StimulusEvent decode_trigger(std::span<const std::uint8_t> bytes);

/// Serial stimulus command (5 bytes):
///   [0] 0x53  [1] channel 0..3  [2] duration_ms  [3] seq low byte
///   [4] checksum = XOR of bytes [0..4)
struct StimCommandFrame {
  std::uint8_t channel = 0;
  std::uint8_t duration_ms = 10;
  std::uint8_t seq = 0;

  bool operator==(const StimCommandFrame&) const = default;
};

StimFrame encode_stim_command(const StimCommandFrame& cmd);
StimCommandFrame decode_stim_command(std::span<const std::uint8_t> bytes);

/// Decodes a trigger datagram and maps it onto the serial leg:
/// channel = code - 1, duration 10 ms, seq truncated to 8 bits.
/// Decode errors propagate; no frame is emitted for corrupt input.
StimCommandFrame bridge(std::span<const std::uint8_t> datagram);

struct ExciterLogEntry {
  int channel = 0;
  std::uint64_t order = 0;  // strictly increasing receive index
  int duration_ms = 0;
};

/// Emulated 4-channel exciter box. Valid frames are logged in arrival
/// order and acknowledged with ACK (0x06); invalid ones get NAK (0x15)
/// and leave the log untouched.
class ExciterEmulator {
 public:
  /// Process one frame-sized buffer.
  std::uint8_t feed_frame(std::span<const std::uint8_t> frame);

  /// Serial mode: consume a raw byte stream with frames back-to-back.
  /// After a bad frame the parser resynchronizes on the next 0x53.
  /// Returns the ACK/NAK bytes emitted, in order.
  std::vector<std::uint8_t> feed_bytes(std::span<const std::uint8_t> data);

  const std::vector<ExciterLogEntry>& log() const { return log_; }
  void clear();

 private:
  std::vector<ExciterLogEntry> log_;
  std::vector<std::uint8_t> buffer_;
};

}  // namespace hbci
