#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rfprint/seed.hpp"
#include "rfprint/waveform.hpp"

namespace rfprint {

/// Internal simulation rate in normalized units where the message
/// bandwidth is 1.0.
inline constexpr double kMessageBandwidth = 1.0;
inline constexpr double kInternalRate = 16.0 * kMessageBandwidth;
/// Samples per symbol at the internal rate; symbol rate 0.8 gives an RRC
/// occupied bandwidth of 0.8 * 1.35 = 1.08 message bandwidths.
inline constexpr int kInternalSps = 20;

enum class Modulation { BPSK, BFSK, PSK8, QAM16 };

struct ModulationScheme {
    Modulation kind = Modulation::QAM16;
    /// BFSK only: distance between the two tones in Hz. Zero selects the
    /// symbol rate.
    double bfsk_tone_separation_hz = 0.0;
};

int bits_per_symbol(Modulation m);

enum class PulseKind { RootRaisedCosine, RectangularHold };

struct PulseShapeConfig {
    PulseKind kind = PulseKind::RootRaisedCosine;
    double rolloff = 0.35;
    int span_symbols = 10;
    int samples_per_symbol = kInternalSps;
    double sample_rate_hz = kInternalRate;

    double symbol_rate_hz() const { return sample_rate_hz / samples_per_symbol; }
};

using Bits = std::vector<std::uint8_t>;

/// Uniform random bits (each 0 or 1).
Bits random_bits(std::size_t n, Rng& rng);

/// Gray-coded mapping onto a unit-average-power constellation. BFSK maps
/// to the antipodal frequency signs -1/+1.
std::vector<ComplexSample> map_symbols(std::span<const std::uint8_t> bits,
                                       const ModulationScheme& scheme);

/// Root-raised-cosine taps, span*sps + 1 long, normalized to unit energy.
std::vector<double> rrc_taps(double rolloff, int span_symbols, int sps);

/// Upsample by samples_per_symbol and filter. The output covers the full
/// support of every pulse: (n_symbols - 1) * sps + taps.size() samples,
/// with symbol k's pulse starting at k * sps.
Waveform pulse_shape(std::span<const ComplexSample> symbols, const PulseShapeConfig& cfg);

/// Delay in samples from a symbol's start to its pulse peak.
std::size_t pulse_delay(const PulseShapeConfig& cfg);

/// Continuous-phase BFSK: each bit holds a tone at +-separation/2 for one
/// symbol period. Constant envelope.
Waveform modulate_bfsk(std::span<const std::uint8_t> bits, double tone_separation_hz,
                       const PulseShapeConfig& cfg);

/// map_symbols + pulse_shape, or modulate_bfsk for BFSK.
Waveform modulate(std::span<const std::uint8_t> bits, const ModulationScheme& scheme,
                  const PulseShapeConfig& cfg);

/// samples[k] = exp(j 2 pi freq k / rate).
Waveform generate_tone(double freq_hz, double rate_hz, std::size_t n);

}  // namespace rfprint
