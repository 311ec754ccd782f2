#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rfprint/baseband.hpp"
#include "rfprint/channel.hpp"
#include "rfprint/error.hpp"
#include "rfprint/impairments.hpp"
#include "rfprint/report.hpp"
#include "rfprint/spectral.hpp"

using namespace rfprint;

namespace {

Waveform noise(std::size_t n, double power, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, std::sqrt(power / 2.0));
    std::vector<ComplexSample> s(n);
    for (auto& v : s) v = {g(rng), g(rng)};
    return {std::move(s), 16.0};
}

double from_db(double x) { return std::pow(10.0, x / 10.0); }

}  // namespace

TEST_CASE("Welch PSD of a unit tone") {
    const auto psd = welch_psd(generate_tone(2.0, 16.0, 1 << 16));
    CHECK(psd.size() == 4096);
    CHECK(psd.resolution_hz == doctest::Approx(16.0 / 4096));
    CHECK(psd.freqs_hz[2048] == 0.0);
    const auto peak = std::max_element(psd.power_db.begin(), psd.power_db.end()) - psd.power_db.begin();
    CHECK(std::abs(psd.freqs_hz[static_cast<std::size_t>(peak)] - 2.0) <= psd.resolution_hz / 2);
    CHECK(std::abs(band_power(psd, 1.9, 2.1)) <= 0.1);
    CHECK(std::abs(band_power(psd, psd.span_lo(), psd.span_hi())) <= 0.1);
    CHECK(band_power(psd, -4.0, 1.0) <= -50.0);
}

TEST_CASE("Welch PSD of white noise is flat") {
    const double p = 0.5;
    const auto psd = welch_psd(noise(1 << 20, p, 3));
    const double want = 10.0 * std::log10(p / 16.0);
    for (double v : psd.power_db) CHECK(std::abs(v - want) <= 1.0);
}

TEST_CASE("Welch PSD matches Parseval") {
    const auto w = noise(1 << 16, 2.0, 4);
    for (auto win : {Window::Hann, Window::Rectangular}) {
        WelchConfig cfg;
        cfg.window = win;
        const auto psd = welch_psd(w, cfg);
        const double total = band_power_linear(psd, psd.span_lo(), psd.span_hi());
        CHECK(std::abs(total / mean_power(w) - 1.0) < 0.01);
    }
}

TEST_CASE("Welch PSD of silence sits at the floor") {
    const Waveform zero{std::vector<ComplexSample>(8192), 16.0};
    const auto psd = welch_psd(zero);
    for (double v : psd.power_db) CHECK(v == kFloorDb);
}

TEST_CASE("Welch PSD is deterministic") {
    const auto w = noise(1 << 14, 1.0, 5);
    const auto a = welch_psd(w), b = welch_psd(w);
    CHECK(a.power_db == b.power_db);
}

TEST_CASE("Welch argument checks") {
    const Waveform w{std::vector<ComplexSample>(100), 16.0};
    CHECK_THROWS_AS(welch_psd(w), InvalidArgument);
    WelchConfig cfg;
    cfg.segment_len = 64;
    cfg.overlap_frac = 1.0;
    CHECK_THROWS_AS(welch_psd(w, cfg), InvalidArgument);
}

TEST_CASE("band power additivity and span checks") {
    const auto psd = welch_psd(noise(1 << 15, 1.0, 6));
    const double a = band_power_linear(psd, -3.0, 0.5);
    const double b = band_power_linear(psd, 0.5, 4.0);
    const double u = band_power_linear(psd, -3.0, 4.0);
    CHECK(std::abs(a + b - u) <= 1e-9 * u);
    CHECK_THROWS_AS(band_power(psd, -20.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(band_power(psd, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("ACPR") {
    // Noise shaped by a 90 dB low-pass whose stop edge sits inside the main band.
    const auto raw = noise(1 << 17, 1.0, 7);
    const auto taps = design_lowpass(0.45, 0.08, 90.0, 16.0);
    std::vector<ComplexSample> shaped(raw.size() - taps.size());
    for (std::size_t i = 0; i < shaped.size(); ++i)
        for (std::size_t k = 0; k < taps.size(); ++k) shaped[i] += taps[k] * raw[i + k];
    const auto psd = welch_psd(Waveform{std::move(shaped), 16.0});
    CHECK(acpr(psd, main_channel(), adjacent_channel()) <= -50.0);
    CHECK_THROWS_AS(acpr(psd, {-1.0, 1.0}, {0.5, 2.0}), InvalidArgument);
}

TEST_CASE("DC spur") {
    auto tones = generate_tone(2.0, 16.0, 1 << 16);
    const auto other = generate_tone(-3.0, 16.0, 1 << 16);
    for (std::size_t i = 0; i < tones.size(); ++i) tones[i] += other[i];
    CHECK(dc_spur_db(welch_psd(tones)) <= -50.0);

    const auto w = noise(1 << 16, 1.0, 8);

    double prev = -1e9;
    std::vector<double> spur;
    for (double dc : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        spur.push_back(dc_spur_db(welch_psd(apply_dc_offset(w, dc, dc))));
        CHECK(spur.back() > prev);
        prev = spur.back();
    }
    CHECK(std::abs((spur[4] - spur[2]) - 5.105450102066121) <= 0.5);
}

TEST_CASE("phase-noise mask deviation") {
    const std::size_t n = 1 << 18;
    const Waveform tone{std::vector<ComplexSample>(n, ComplexSample(1.0, 0.0)), 1024.0};
    const std::vector<double> offsets{20, 200}, levels{-60, -80};

    const auto ideal = mask_deviation(welch_psd(tone), offsets, levels);
    for (std::size_t i = 0; i < ideal.size(); ++i) CHECK(ideal[i] <= -(levels[i] + 50.0));

    const auto theta = synthesize_phase_noise(n, 1024.0, levels, offsets, 11);
    const auto dev = mask_deviation(welch_psd(apply_phase_noise(tone, theta)), offsets, levels);
    CHECK(std::abs(dev[1]) <= 3.0);

    // Doubling the noise power shifts every deviation by 3.01 dB; the
    // small-angle regime makes the skirt power proportional to var(theta).
    auto doubled = theta;
    for (double& t : doubled) t *= std::sqrt(2.0);
    const auto dev2 = mask_deviation(welch_psd(apply_phase_noise(tone, doubled)), offsets, levels);
    for (std::size_t i = 0; i < dev.size(); ++i) CHECK(std::abs(dev2[i] - dev[i] - 3.0103) <= 0.05);

    CHECK_THROWS_AS(mask_deviation(welch_psd(tone), std::vector<double>{900.0}, std::vector<double>{-80.0}),
                    InvalidArgument);
}

TEST_CASE("DAC hold creates replicas at multiples of the generation rate") {
    Rng rng(12);
    const auto bits = random_bits(4 * 4096, rng);
    const auto w = modulate(bits, {Modulation::QAM16}, PulseShapeConfig{});
    DacConfig cfg;
    cfg.gen_oversample = 4;
    const auto held = apply_dac(w, cfg);
    const auto clean = welch_psd(w);
    const auto stair = welch_psd(held);
    // Generation rate 16 / 4 = 4; the first replica sits around +-4.
    const double replica = band_power(stair, 3.5, 4.5);
    CHECK(replica - band_power(clean, 3.5, 4.5) > 30.0);
    CHECK(replica > band_power(stair, 1.5, 2.5) + 10.0);
}

TEST_CASE("PSD text export") {
    PsdEstimate psd;
    psd.freqs_hz = {-0.5, 0.0, 0.5};
    psd.power_db = {-10.0, 0.125, -3.0};
    psd.resolution_hz = 0.5;
    std::ostringstream out;
    write_psd(out, psd);
    CHECK(out.str() == "# freq_hz power_db\n-0.5 -10\n0 0.125\n0.5 -3\n");
}
