#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rfprint/baseband.hpp"
#include "rfprint/device_profile.hpp"
#include "rfprint/spectral.hpp"

namespace rfprint {

// Spectral demonstrations of individual impairments: PA regrowth for
// constant- and variable-envelope signals, LO phase-noise skirts and DC
// spurs. Every trace is noiseless and seeded.

struct ReportConfig {
    std::size_t samples = std::size_t{1} << 18;
    std::uint64_t seed = 1;
    WelchConfig welch{};
};

/// Channel bands used for ACPR: the RRC-occupied band and the equally
/// wide band directly above it.
Band main_channel();
Band adjacent_channel();

struct RegrowthResult {
    PsdEstimate linear;
    PsdEstimate nonlinear;
    double acpr_linear_db = 0.0;
    double acpr_nonlinear_db = 0.0;

    double delta_db() const { return acpr_nonlinear_db - acpr_linear_db; }
};

/// Modulated waveform through a linear PA and through `pa`'s Saleh model.
RegrowthResult pa_regrowth(const ModulationScheme& scheme, const DeviceProfile& pa, const ReportConfig& cfg);

/// Offset standing in for the 1 MHz point of a physical LO: one message
/// bandwidth from the carrier.
inline constexpr double kSkirtOffsetHz = kMessageBandwidth;

struct PhaseNoiseTrace {
    std::string label;
    /// Mask level at kSkirtOffsetHz; NaN for the ideal LO.
    double level_dbchz;
    PsdEstimate psd;
    /// Measured level at kSkirtOffsetHz in dBc/Hz.
    double skirt_dbchz = 0.0;
};

/// Mask with the given level at kSkirtOffsetHz and a -20 dB/decade slope,
/// read against the internal rate.
DeviceProfile phase_noise_device(double level_dbchz);

/// Carrier tone through an ideal LO, a -80 dBc/Hz LO and a -72 dBc/Hz LO.
std::vector<PhaseNoiseTrace> phase_noise_traces(const ReportConfig& cfg);

struct DcTrace {
    double dc;  // applied to both I and Q
    PsdEstimate psd;
    double spur_db = 0.0;
};

/// 16QAM waveform with equal I/Q DC offsets of 0, 0.5 and 0.9.
std::vector<DcTrace> dc_offset_traces(const ReportConfig& cfg, const std::vector<double>& offsets = {0.0, 0.5, 0.9});

struct SpectralReport {
    RegrowthResult bfsk;
    RegrowthResult qam16_dev1;
    RegrowthResult qam16_dev2;
    std::vector<PhaseNoiseTrace> phase_noise;
    std::vector<DcTrace> dc;
};

SpectralReport build_report(const ReportConfig& cfg);

/// Writes one PSD file per trace plus summary.txt into `dir`; returns the
/// written paths.
std::vector<std::string> write_report(const std::string& dir, const SpectralReport& report);

}  // namespace rfprint
