#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rfprint/device_profile.hpp"
#include "rfprint/waveform.hpp"

namespace rfprint {

/// DAC model applied independently to the I and Q paths at the waveform's
/// rate: saturation at +-1, rounding to 2^bits uniform levels spanning
/// [-1, 1], INL distortion of the rounded level, then zero-order hold on a
/// generation grid of gen_oversample samples whose instants wander by the
/// sinusoidal clock modulation. Each output sample is the exact average of
/// the held staircase over its sample interval.
/// `clip_count`, when given, receives the number of saturated components.
Waveform apply_dac(const Waveform& w, const DacConfig& cfg, std::size_t* clip_count = nullptr);

/// Scalar vertical quantizer used by apply_dac (no saturation counting).
double dac_quantize(double x, int bits);

/// I' = g I - Q sin(dtheta), Q' = Q cos(dtheta), g = 10^(-amp_db/20).
Waveform apply_iq_imbalance(const Waveform& w, double iq_amp_db, double iq_phase_deg);

/// Shifts every sample by dc_i + j dc_q.
Waveform apply_dc_offset(const Waveform& w, double dc_i, double dc_q);

/// Baseband second-order mixer term: alpha1 s + (alpha2 / 2) |s|^2.
Waveform apply_mixer_second_order(const Waveform& w, double alpha1, double alpha2);

/// Real, zero-mean phase process whose two-sided PSD follows the
/// single-sideband mask L(f) in dBc/Hz. The mask is linear in
/// (log10 f, dB) between points and flat outside them. Shaping happens in
/// the frequency domain with an n-point transform, so the result is a
/// pure function of (n, rate, mask, seed).
std::vector<double> synthesize_phase_noise(std::size_t n, double rate_hz,
                                           std::span<const double> levels_dbchz,
                                           std::span<const double> offsets_hz,
                                           std::uint64_t seed);

/// Interpolated mask level in dBc/Hz at |f|.
double phase_noise_mask_db(double f_hz, std::span<const double> levels_dbchz,
                           std::span<const double> offsets_hz);

/// out[k] = w[k] exp(j theta[k]).
Waveform apply_phase_noise(const Waveform& w, std::span<const double> theta);

/// Saleh AM-AM / AM-PM: A(r) = aa r / (1 + ba r^2), Phi(r) = ap r^2 / (1 + bp r^2).
Waveform apply_pa_saleh(const Waveform& w, double alpha_a, double beta_a, double alpha_p,
                        double beta_p);

/// Odd-order complex power series; coeffs[n] multiplies the order 2n+1
/// term: out = sum_n coeffs[n] / 4^n * C(2n+1, n+1) |s|^(2n) s.
Waveform apply_pa_polynomial(const Waveform& w, std::span<const std::complex<double>> coeffs);

/// out[k] = w[k] exp(j 2 pi cfo k / rate).
Waveform apply_cfo(const Waveform& w, double cfo_hz);

/// Full transmitter chain in hardware order:
/// DAC -> IQ imbalance -> DC offset -> mixer -> phase noise -> PA -> CFO.
/// The phase-noise realization is seeded from (profile.seed, counter).
Waveform apply_chain(const Waveform& w, const DeviceProfile& profile, std::uint64_t counter);

}  // namespace rfprint
