#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rfprint/waveform.hpp"

namespace rfprint {

/// Floor applied before taking logarithms.
inline constexpr double kFloorDb = -300.0;

enum class Window { Hann, Rectangular };

/// Two-sided PSD in ascending frequency order. power_db is
/// 10 log10(power per Hz); a unit-amplitude complex tone integrates to
/// 0 dB total power.
struct PsdEstimate {
    std::vector<double> freqs_hz;
    std::vector<double> power_db;
    double resolution_hz = 0.0;

    std::size_t size() const { return freqs_hz.size(); }
    /// Lowest / highest frequency covered by the bins (bin edges).
    double span_lo() const { return freqs_hz.front() - resolution_hz / 2.0; }
    double span_hi() const { return freqs_hz.back() + resolution_hz / 2.0; }
};

struct Band {
    double lo_hz;
    double hi_hz;
};

struct WelchConfig {
    std::size_t segment_len = 4096;
    double overlap_frac = 0.5;
    Window window = Window::Hann;
};

/// Averaged modified periodogram.
PsdEstimate welch_psd(const Waveform& w, const WelchConfig& cfg = {});

/// Integrated power over bins whose centres lie in [f_lo, f_hi), in dB.
double band_power(const PsdEstimate& psd, double f_lo, double f_hi);
/// Same, as a linear power.
double band_power_linear(const PsdEstimate& psd, double f_lo, double f_hi);

/// band_power(adjacent) - band_power(main).
double acpr(const PsdEstimate& psd, Band main, Band adjacent);

/// Power in the DC resolution band (the centre bin and its two
/// neighbours) relative to the power in every other bin, in dB.
double dc_spur_db(const PsdEstimate& psd);

/// For each offset: measured single-sideband level in dBc/Hz at
/// carrier + offset, minus the target level. The carrier is the strongest
/// bin; its power is integrated over +-2 bins.
std::vector<double> mask_deviation(const PsdEstimate& psd, std::span<const double> offsets_hz,
                                   std::span<const double> levels_dbchz);

/// Two-column text export: "# freq_hz power_db" header, one pair per line.
void write_psd(std::ostream& out, const PsdEstimate& psd);
void save_psd(const std::string& path, const PsdEstimate& psd);

}  // namespace rfprint
