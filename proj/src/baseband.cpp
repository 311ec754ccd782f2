#include "rfprint/baseband.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rfprint/error.hpp"

namespace rfprint {

namespace {

constexpr double kPi = std::numbers::pi;

unsigned gray_to_binary(unsigned g) {
    unsigned b = g;
    for (unsigned s = g >> 1; s != 0; s >>= 1) b ^= s;
    return b;
}

// Gray-coded 4-level axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
double qam16_level(unsigned two_bits) {
    static constexpr double kLevels[4] = {-3.0, -1.0, 3.0, 1.0};
    return kLevels[two_bits & 3u];
}

}  // namespace

int bits_per_symbol(Modulation m) {
    switch (m) {
        case Modulation::BPSK:
        case Modulation::BFSK: return 1;
        case Modulation::PSK8: return 3;
        case Modulation::QAM16: return 4;
    }
    return 1;
}

Bits random_bits(std::size_t n, Rng& rng) {
    Bits bits(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) word = rng();
        bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
    }
    return bits;
}

std::vector<ComplexSample> map_symbols(std::span<const std::uint8_t> bits,
                                       const ModulationScheme& scheme) {
    const auto k = static_cast<std::size_t>(bits_per_symbol(scheme.kind));
    if (bits.size() % k != 0)
        throw InvalidArgument("map_symbols: bit count " + std::to_string(bits.size()) +
                              " is not a multiple of " + std::to_string(k));
    std::vector<ComplexSample> out;
    out.reserve(bits.size() / k);
    for (std::size_t i = 0; i < bits.size(); i += k) {
        unsigned v = 0;
        for (std::size_t b = 0; b < k; ++b) v = (v << 1) | (bits[i + b] & 1u);
        switch (scheme.kind) {
            case Modulation::BPSK:
            case Modulation::BFSK: out.emplace_back(v ? 1.0 : -1.0, 0.0); break;
            case Modulation::PSK8: {
                const double phase = 2.0 * kPi * gray_to_binary(v) / 8.0;
                out.push_back(std::polar(1.0, phase));
                break;
            }
            case Modulation::QAM16: {
                static const double kScale = 1.0 / std::sqrt(10.0);
                out.emplace_back(kScale * qam16_level(v >> 2), kScale * qam16_level(v));
                break;
            }
        }
    }
    return out;
}

std::vector<double> rrc_taps(double rolloff, int span_symbols, int sps) {
    if (rolloff < 0.0 || rolloff > 1.0) throw InvalidArgument("rrc_taps: rolloff outside [0, 1]");
    if (span_symbols < 1 || sps < 1) throw InvalidArgument("rrc_taps: span and sps must be positive");
    const int n = span_symbols * sps + 1;
    const double b = rolloff;
    std::vector<double> h(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i - n / 2) / sps;
        double v;
        if (std::abs(t) < 1e-12) {
            v = 1.0 - b + 4.0 * b / kPi;
        } else if (b > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
            v = b / std::sqrt(2.0) *
                ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
                 (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
        } else {
            v = (std::sin(kPi * t * (1.0 - b)) + 4.0 * b * t * std::cos(kPi * t * (1.0 + b))) /
                (kPi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t)));
        }
        h[static_cast<std::size_t>(i)] = v;
    }
    double energy = 0.0;
    for (double v : h) energy += v * v;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : h) v *= scale;
    return h;
}

namespace {

std::vector<double> shaping_taps(const PulseShapeConfig& cfg) {
    if (cfg.samples_per_symbol < 2) throw InvalidArgument("pulse_shape: samples_per_symbol must be >= 2");
    if (!(cfg.sample_rate_hz > 0.0)) throw InvalidArgument("pulse_shape: sample rate must be positive");
    if (cfg.kind == PulseKind::RectangularHold)
        return std::vector<double>(static_cast<std::size_t>(cfg.samples_per_symbol), 1.0);
    return rrc_taps(cfg.rolloff, cfg.span_symbols, cfg.samples_per_symbol);
}

}  // namespace

std::size_t pulse_delay(const PulseShapeConfig& cfg) {
    if (cfg.kind == PulseKind::RectangularHold) return 0;
    return static_cast<std::size_t>(cfg.span_symbols * cfg.samples_per_symbol / 2);
}

Waveform pulse_shape(std::span<const ComplexSample> symbols, const PulseShapeConfig& cfg) {
    if (symbols.empty()) throw InvalidArgument("pulse_shape: no symbols");
    const auto taps = shaping_taps(cfg);
    const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol);
    const std::size_t n = (symbols.size() - 1) * sps + taps.size();
    std::vector<ComplexSample> out(n);
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        const ComplexSample s = symbols[k];
        ComplexSample* dst = out.data() + k * sps;
        for (std::size_t t = 0; t < taps.size(); ++t) dst[t] += s * taps[t];
    }
    return {std::move(out), cfg.sample_rate_hz};
}

Waveform modulate_bfsk(std::span<const std::uint8_t> bits, double tone_separation_hz,
                       const PulseShapeConfig& cfg) {
    if (bits.empty()) throw InvalidArgument("modulate_bfsk: no bits");
    if (cfg.samples_per_symbol < 2) throw InvalidArgument("modulate_bfsk: samples_per_symbol must be >= 2");
    const double sep = tone_separation_hz > 0.0 ? tone_separation_hz : cfg.symbol_rate_hz();
    if (sep / 2.0 >= cfg.sample_rate_hz / 2.0) throw InvalidArgument("modulate_bfsk: tones alias");
    const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol);
    std::vector<ComplexSample> out(bits.size() * sps);
    const double step = 2.0 * kPi * (sep / 2.0) / cfg.sample_rate_hz;
    double phase = 0.0;
    for (std::size_t k = 0; k < bits.size(); ++k) {
        const double dphi = bits[k] ? step : -step;
        for (std::size_t t = 0; t < sps; ++t) {
            out[k * sps + t] = std::polar(1.0, phase);
            phase = std::remainder(phase + dphi, 2.0 * kPi);
        }
    }
    return {std::move(out), cfg.sample_rate_hz};
}

Waveform modulate(std::span<const std::uint8_t> bits, const ModulationScheme& scheme,
                  const PulseShapeConfig& cfg) {
    if (scheme.kind == Modulation::BFSK) return modulate_bfsk(bits, scheme.bfsk_tone_separation_hz, cfg);
    const auto symbols = map_symbols(bits, scheme);
    return pulse_shape(symbols, cfg);
}

Waveform generate_tone(double freq_hz, double rate_hz, std::size_t n) {
    if (!(rate_hz > 0.0)) throw InvalidArgument("generate_tone: rate must be positive");
    if (std::abs(freq_hz) >= rate_hz / 2.0)
        throw InvalidArgument("generate_tone: frequency aliases (|f| >= rate/2)");
    std::vector<ComplexSample> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        // Reduce the cycle count first so large k keeps full precision.
        const double cycles = std::fmod(freq_hz * static_cast<double>(k) / rate_hz, 1.0);
        out[k] = std::polar(1.0, 2.0 * kPi * cycles);
    }
    return {std::move(out), rate_hz};
}

}  // namespace rfprint
