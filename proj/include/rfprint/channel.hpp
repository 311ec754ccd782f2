#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rfprint/baseband.hpp"
#include "rfprint/frame.hpp"
#include "rfprint/waveform.hpp"

namespace rfprint {

/// snr_db at or above this value disables the noise source entirely.
inline constexpr double kNoiselessSnrDb = 300.0;

struct ChannelConfig {
    /// Per-sample complex SNR at the internal rate.
    double snr_db = 20.0;
    std::uint64_t seed = 0;
};

/// Adds circular complex Gaussian noise with variance P / 10^(snr/10),
/// P being the measured mean power of w.
Waveform add_awgn(const Waveform& w, const ChannelConfig& cfg);

enum class CaptureMode { InBandOnly, WithOOB };

std::string to_string(CaptureMode mode);
/// Accepts "in-band" / "with-oob" (and the enum spellings).
CaptureMode parse_capture_mode(const std::string& text);

/// Receiver bandwidth in message bandwidths: 1 for in-band, 8 with OOB.
double capture_bandwidth(CaptureMode mode, double message_bw = kMessageBandwidth);

/// Linear-phase Kaiser-windowed sinc low-pass with unit DC gain, odd
/// length, 6 dB point at cutoff. Frequencies are relative to rate_hz.
std::vector<double> design_lowpass(double cutoff_hz, double transition_hz, double stopband_db,
                                   double rate_hz);

/// Anti-alias filter used by capture(): cutoff bw/2, pass edge 0.4 bw,
/// stop edge 0.6 bw, 70 dB stopband.
std::vector<double> capture_filter(double input_rate_hz, double capture_bw_hz);

/// Low-pass filter then decimate to the capture bandwidth. Output sample m
/// is aligned with input sample m * decimation (group delay removed) so
/// both capture modes stay time-aligned.
Waveform capture(const Waveform& w, CaptureMode mode, double message_bw = kMessageBandwidth);

/// Consecutive non-overlapping frames of frame_len complex samples. With
/// `normalize`, each frame is scaled to unit RMS over its 2 * frame_len
/// reals. Labels are left at 0.
std::vector<Frame> frame_slice(const Waveform& w, std::size_t frame_len = kFrameLength,
                               bool normalize = true);

}  // namespace rfprint
