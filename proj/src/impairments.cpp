#include "rfprint/impairments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rfprint/error.hpp"
#include "rfprint/fft.hpp"
#include "rfprint/seed.hpp"

namespace rfprint {

namespace {

constexpr double kPi = std::numbers::pi;

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

double dac_quantize(double x, int bits) {
    if (bits == DacConfig::kUnquantized) return x;
    const double steps = std::ldexp(1.0, bits) - 1.0;
    const double clamped = std::clamp(x, -1.0, 1.0);
    const double k = std::round((clamped + 1.0) * 0.5 * steps);
    return -1.0 + 2.0 * k / steps;
}

Waveform apply_dac(const Waveform& w, const DacConfig& cfg, std::size_t* clip_count) {
    if (cfg.bits < 0) throw InvalidArgument("apply_dac: bits must be >= 1");
    if (cfg.gen_oversample < 1) throw InvalidArgument("apply_dac: gen_oversample must be >= 1");
    if (cfg.clock_mod_depth < 0.0 || cfg.clock_mod_depth >= 0.5)
        throw InvalidArgument("apply_dac: clock_mod_depth must be in [0, 0.5)");
    if (clip_count) *clip_count = 0;
    if (cfg.is_passthrough() || w.empty()) return w;

    std::size_t clipped = 0;
    for (const auto& s : w.samples) {
        clipped += std::abs(s.real()) > 1.0;
        clipped += std::abs(s.imag()) > 1.0;
    }
    auto level = [&](double x) {
        double q = dac_quantize(x, cfg.bits);
        double inl = 0.0;
        double p = q;
        for (double c : cfg.inl_coeffs) {
            inl += c * p;
            p *= q;
        }
        return q + inl;
    };

    const std::size_t n = w.size();
    const auto g = static_cast<std::size_t>(cfg.gen_oversample);
    const std::size_t periods = n / g + 2;

    // Held values, one per generation period, sampled at the nominal instant.
    std::vector<ComplexSample> held(periods);
    for (std::size_t p = 0; p < periods; ++p) {
        const auto& s = w[std::min(p * g, n - 1)];
        held[p] = {level(s.real()), level(s.imag())};
    }
    // Generation instants in units of internal samples.
    const double gd = static_cast<double>(g);
    const double mod_step = 2.0 * kPi * cfg.clock_mod_freq_hz * gd / w.sample_rate_hz;
    auto instant = [&](std::size_t p) {
        const double dp = static_cast<double>(p);
        if (cfg.clock_mod_depth == 0.0) return dp * gd;
        return dp * gd + cfg.clock_mod_depth * gd * std::sin(mod_step * dp);
    };

    std::vector<ComplexSample> out(n);
    std::size_t p = 0;
    for (std::size_t m = 0; m < n; ++m) {
        const double lo = static_cast<double>(m);
        const double hi = lo + 1.0;
        while (p + 1 < periods && instant(p + 1) <= lo) ++p;
        ComplexSample acc{};
        for (std::size_t k = p; k < periods; ++k) {
            const double a = std::max(lo, instant(k));
            if (a >= hi) break;
            const double b = k + 1 < periods ? std::min(hi, instant(k + 1)) : hi;
            if (b > a) acc += held[k] * (b - a);
        }
        out[m] = acc;
    }
    if (clip_count) *clip_count = clipped;
    return {std::move(out), w.sample_rate_hz};
}

Waveform apply_iq_imbalance(const Waveform& w, double iq_amp_db, double iq_phase_deg) {
    const double g = std::pow(10.0, -iq_amp_db / 20.0);
    const double th = iq_phase_deg * kPi / 180.0;
    const double s = std::sin(th);
    const double c = std::cos(th);
    Waveform out = w;
    for (auto& v : out.samples) v = {g * v.real() - v.imag() * s, v.imag() * c};
    return out;
}

Waveform apply_dc_offset(const Waveform& w, double dc_i, double dc_q) {
    Waveform out = w;
    const ComplexSample dc{dc_i, dc_q};
    for (auto& v : out.samples) v += dc;
    return out;
}

Waveform apply_mixer_second_order(const Waveform& w, double alpha1, double alpha2) {
    Waveform out = w;
    if (alpha1 == 1.0 && alpha2 == 0.0) return out;
    for (auto& v : out.samples) v = alpha1 * v + 0.5 * alpha2 * std::norm(v);
    return out;
}

double phase_noise_mask_db(double f_hz, std::span<const double> levels_dbchz,
                           std::span<const double> offsets_hz) {
    const double f = std::abs(f_hz);
    if (levels_dbchz.empty()) throw InvalidArgument("phase_noise_mask_db: empty mask");
    if (f <= offsets_hz.front()) return levels_dbchz.front();
    if (f >= offsets_hz.back()) return levels_dbchz.back();
    const auto it = std::upper_bound(offsets_hz.begin(), offsets_hz.end(), f);
    const auto i = static_cast<std::size_t>(it - offsets_hz.begin());
    const double x0 = std::log10(offsets_hz[i - 1]);
    const double x1 = std::log10(offsets_hz[i]);
    const double t = (std::log10(f) - x0) / (x1 - x0);
    return levels_dbchz[i - 1] + t * (levels_dbchz[i] - levels_dbchz[i - 1]);
}

std::vector<double> synthesize_phase_noise(std::size_t n, double rate_hz,
                                           std::span<const double> levels_dbchz,
                                           std::span<const double> offsets_hz,
                                           std::uint64_t seed) {
    if (levels_dbchz.size() != offsets_hz.size())
        throw InvalidArgument("synthesize_phase_noise: levels and offsets differ in length");
    if (!(rate_hz > 0.0)) throw InvalidArgument("synthesize_phase_noise: rate must be positive");
    for (std::size_t i = 0; i < offsets_hz.size(); ++i) {
        if (!(offsets_hz[i] > 0.0) || (i > 0 && !(offsets_hz[i] > offsets_hz[i - 1])))
            throw InvalidArgument("synthesize_phase_noise: offsets must be positive and strictly increasing");
    }
    if (!offsets_hz.empty() && offsets_hz.back() >= rate_hz / 2.0)
        throw InvalidArgument("synthesize_phase_noise: mask offset at or above Nyquist");
    std::vector<double> theta(n, 0.0);
    if (n < 2 || levels_dbchz.empty()) return theta;

    Rng rng = make_rng(seed, Stream::PhaseNoise);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::vector<std::complex<double>> spec(n);
    const double df = rate_hz / static_cast<double>(n);
    const double nd = static_cast<double>(n);
    // Bin 0 stays empty so every realization has exactly zero mean.
    for (std::size_t k = 1; k < n; ++k) {
        const double f = (k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - nd) * df;
        const double psd = std::pow(10.0, phase_noise_mask_db(f, levels_dbchz, offsets_hz) / 10.0);
        const double amp = std::sqrt(psd * rate_hz * nd);
        const double re = gauss(rng);
        const double im = gauss(rng);
        spec[k] = {amp * re, amp * im};
    }
    ifft_inplace(spec);
    // The real part carries half of the complex process power.
    for (std::size_t k = 0; k < n; ++k) theta[k] = std::sqrt(2.0) * spec[k].real();
    return theta;
}

Waveform apply_phase_noise(const Waveform& w, std::span<const double> theta) {
    if (theta.size() != w.size())
        throw ShapeMismatch("apply_phase_noise: theta length " + std::to_string(theta.size()) +
                            " != waveform length " + std::to_string(w.size()));
    Waveform out = w;
    for (std::size_t k = 0; k < out.size(); ++k)
        if (theta[k] != 0.0) out[k] *= std::polar(1.0, theta[k]);
    return out;
}

Waveform apply_pa_saleh(const Waveform& w, double alpha_a, double beta_a, double alpha_p,
                        double beta_p) {
    if (!(beta_a > 0.0) || !(beta_p > 0.0)) throw InvalidArgument("apply_pa_saleh: beta must be > 0");
    Waveform out = w;
    for (auto& v : out.samples) {
        const double r2 = std::norm(v);
        // A(r)/r applied to s keeps the input phase without an atan2.
        const double gain = alpha_a / (1.0 + beta_a * r2);
        const double phi = alpha_p * r2 / (1.0 + beta_p * r2);
        v *= std::polar(gain, phi);
    }
    return out;
}

Waveform apply_pa_polynomial(const Waveform& w, std::span<const std::complex<double>> coeffs) {
    if (coeffs.empty()) throw InvalidArgument("apply_pa_polynomial: need at least the linear coefficient");
    std::vector<std::complex<double>> scaled(coeffs.size());
    for (std::size_t n = 0; n < coeffs.size(); ++n) {
        const int ni = static_cast<int>(n);
        scaled[n] = coeffs[n] * binomial(2 * ni + 1, ni + 1) / std::ldexp(1.0, 2 * ni);
    }
    Waveform out = w;
    for (auto& v : out.samples) {
        const double r2 = std::norm(v);
        std::complex<double> g{};
        double p = 1.0;
        for (const auto& c : scaled) {
            g += c * p;
            p *= r2;
        }
        v *= g;
    }
    return out;
}

Waveform apply_cfo(const Waveform& w, double cfo_hz) {
    if (std::abs(cfo_hz) >= w.sample_rate_hz / 2.0) throw InvalidArgument("apply_cfo: |cfo| >= rate/2");
    Waveform out = w;
    if (cfo_hz == 0.0) return out;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double cycles = std::fmod(cfo_hz * static_cast<double>(k) / w.sample_rate_hz, 1.0);
        out[k] *= std::polar(1.0, 2.0 * kPi * cycles);
    }
    return out;
}

Waveform apply_chain(const Waveform& w, const DeviceProfile& profile, std::uint64_t counter) {
    profile.validate();
    Waveform s = profile.dac ? apply_dac(w, *profile.dac) : w;
    if (profile.iq_amp_db != 0.0 || profile.iq_phase_deg != 0.0)
        s = apply_iq_imbalance(s, profile.iq_amp_db, profile.iq_phase_deg);
    if (profile.dc_i != 0.0 || profile.dc_q != 0.0) s = apply_dc_offset(s, profile.dc_i, profile.dc_q);
    s = apply_mixer_second_order(s, profile.mixer_alpha1, profile.mixer_alpha2);
    if (profile.has_phase_noise()) {
        const auto theta = synthesize_phase_noise(s.size(), profile.pn_sample_rate_hz, profile.pn_levels_dbchz,
                                                  profile.pn_offsets_hz, derive_seed({profile.seed, counter}));
        s = apply_phase_noise(s, theta);
    }
    if (profile.has_saleh())
        s = apply_pa_saleh(s, profile.saleh_amam->alpha, profile.saleh_amam->beta, profile.saleh_ampm->alpha,
                           profile.saleh_ampm->beta);
    if (profile.cfo_hz != 0.0) s = apply_cfo(s, profile.cfo_hz);
    return s;
}

}  // namespace rfprint
