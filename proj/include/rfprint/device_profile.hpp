#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rfprint {

/// DAC non-idealities: vertical quantization with INL, zero-order hold on
/// a coarser generation grid, and periodic clock modulation.
struct DacConfig {
    /// Vertical resolution. kUnquantized disables VQ (and INL).
    int bits = kUnquantized;
    /// Internal samples per generation period T_g.
    int gen_oversample = 1;
    /// INL polynomial T[x] = sum_i inl_coeffs[i] * x^(i+1); the default
    /// model is a single cubic term, i.e. {0, 0, c3}.
    std::vector<double> inl_coeffs;
    /// Peak clock deviation as a fraction of T_g, in [0, 0.5).
    double clock_mod_depth = 0.0;
    /// Frequency of the sinusoidal clock modulation.
    double clock_mod_freq_hz = 0.0;

    static constexpr int kUnquantized = 0;

    bool quantizes() const { return bits != kUnquantized; }
    bool is_passthrough() const {
        return !quantizes() && gen_oversample == 1 && clock_mod_depth == 0.0 && inl_coeffs.empty();
    }
};

struct SalehParams {
    double alpha = 1.0;
    double beta = 0.0;
};

/// All impairment parameters of one simulated transmitter.
struct DeviceProfile {
    std::string name = "device";

    double iq_amp_db = 0.0;
    double iq_phase_deg = 0.0;

    double dc_i = 0.0;
    double dc_q = 0.0;

    /// Saleh PA. When absent the PA is linear with unit gain.
    std::optional<SalehParams> saleh_amam;
    std::optional<SalehParams> saleh_ampm;

    /// Phase-noise mask; an empty mask means an ideal LO.
    std::vector<double> pn_levels_dbchz;
    std::vector<double> pn_offsets_hz;
    /// Clock against which the mask offsets are read: one internal sample
    /// is 1 / pn_sample_rate_hz seconds of LO time.
    double pn_sample_rate_hz = 1024.0;

    std::optional<DacConfig> dac;

    double mixer_alpha1 = 1.0;
    double mixer_alpha2 = 0.0;

    double cfo_hz = 0.0;

    std::uint64_t seed = 0;

    bool has_phase_noise() const { return !pn_levels_dbchz.empty(); }
    bool has_saleh() const { return saleh_amam.has_value(); }

    /// Throws InvalidArgument when an invariant is violated.
    void validate() const;
};

/// The all-neutral profile: every stage is the identity.
DeviceProfile identity_profile();

/// The five transmitters of the reference experiment.
std::vector<DeviceProfile> reference_profiles();

/// Key-value profile files. Each profile starts with a `[name]` section
/// header; vectors are comma-separated; `#` starts a comment.
std::vector<DeviceProfile> parse_profiles(std::istream& in);
std::vector<DeviceProfile> load_profiles(const std::string& path);
void write_profiles(std::ostream& out, const std::vector<DeviceProfile>& profiles);
void save_profiles(const std::string& path, const std::vector<DeviceProfile>& profiles);

}  // namespace rfprint
