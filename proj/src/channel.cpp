#include "rfprint/channel.hpp"

#include <cmath>
#include <numbers>

#include "rfprint/error.hpp"
#include "rfprint/seed.hpp"

namespace rfprint {

namespace {
constexpr double kPi = std::numbers::pi;
}

Waveform add_awgn(const Waveform& w, const ChannelConfig& cfg) {
    if (!std::isfinite(cfg.snr_db)) throw InvalidArgument("add_awgn: snr_db must be finite");
    Waveform out = w;
    if (cfg.snr_db >= kNoiselessSnrDb) return out;
    const double variance = mean_power(w) / std::pow(10.0, cfg.snr_db / 10.0);
    Rng rng = make_rng(cfg.seed, Stream::Noise);
    std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
    for (auto& v : out.samples) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += ComplexSample{re, im};
    }
    return out;
}

std::string to_string(CaptureMode mode) {
    return mode == CaptureMode::InBandOnly ? "in-band" : "with-oob";
}

CaptureMode parse_capture_mode(const std::string& text) {
    if (text == "in-band" || text == "InBandOnly" || text == "inband") return CaptureMode::InBandOnly;
    if (text == "with-oob" || text == "WithOOB" || text == "oob") return CaptureMode::WithOOB;
    throw InvalidArgument("unknown capture mode '" + text + "' (expected in-band or with-oob)");
}

double capture_bandwidth(CaptureMode mode, double message_bw) {
    return mode == CaptureMode::InBandOnly ? message_bw : 8.0 * message_bw;
}

std::vector<double> design_lowpass(double cutoff_hz, double transition_hz, double stopband_db,
                                   double rate_hz) {
    if (!(cutoff_hz > 0.0) || cutoff_hz >= rate_hz / 2.0 + 1e-12 || !(transition_hz > 0.0))
        throw InvalidArgument("design_lowpass: bad cutoff or transition");
    const double dw = 2.0 * kPi * transition_hz / rate_hz;
    auto taps = static_cast<std::size_t>(std::ceil((stopband_db - 8.0) / (2.285 * dw))) + 1;
    if (taps % 2 == 0) ++taps;
    double beta = 0.0;
    if (stopband_db > 50.0) beta = 0.1102 * (stopband_db - 8.7);
    else if (stopband_db >= 21.0)
        beta = 0.5842 * std::pow(stopband_db - 21.0, 0.4) + 0.07886 * (stopband_db - 21.0);

    const double fc = cutoff_hz / rate_hz;
    const double mid = static_cast<double>(taps - 1) / 2.0;
    const double i0_beta = std::cyl_bessel_i(0.0, beta);
    std::vector<double> h(taps);
    double sum = 0.0;
    for (std::size_t i = 0; i < taps; ++i) {
        const double t = static_cast<double>(i) - mid;
        const double sinc = t == 0.0 ? 2.0 * fc : std::sin(2.0 * kPi * fc * t) / (kPi * t);
        const double r = t / mid;
        const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
        h[i] = sinc * win;
        sum += h[i];
    }
    for (double& v : h) v /= sum;
    return h;
}

std::vector<double> capture_filter(double input_rate_hz, double capture_bw_hz) {
    return design_lowpass(capture_bw_hz / 2.0, 0.2 * capture_bw_hz, 70.0, input_rate_hz);
}

Waveform capture(const Waveform& w, CaptureMode mode, double message_bw) {
    const double bw = capture_bandwidth(mode, message_bw);
    const double ratio = w.sample_rate_hz / bw;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
        throw InvalidArgument("capture: input rate " + std::to_string(w.sample_rate_hz) +
                              " is not an integer multiple of the capture rate " + std::to_string(bw));
    const auto decim = static_cast<std::size_t>(rounded);
    if (decim == 1) return w;

    const auto h = capture_filter(w.sample_rate_hz, bw);
    const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(h.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(w.size());
    const std::size_t out_len = (w.size() + decim - 1) / decim;
    std::vector<ComplexSample> out(out_len);
    for (std::size_t m = 0; m < out_len; ++m) {
        // y[m] = sum_k h[k] x[m*D + center - k]
        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(m * decim) + center;
        const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, base - (n - 1));
        const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h.size()) - 1, base);
        double re = 0.0;
        double im = 0.0;
        for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) {
            const auto& x = w.samples[static_cast<std::size_t>(base - k)];
            re += h[static_cast<std::size_t>(k)] * x.real();
            im += h[static_cast<std::size_t>(k)] * x.imag();
        }
        out[m] = {re, im};
    }
    return {std::move(out), bw};
}

std::vector<Frame> frame_slice(const Waveform& w, std::size_t frame_len, bool normalize) {
    if (frame_len == 0) throw InvalidArgument("frame_slice: zero frame length");
    if (w.size() < frame_len)
        throw InvalidArgument("frame_slice: waveform of " + std::to_string(w.size()) +
                              " samples is shorter than one frame");
    const std::size_t count = w.size() / frame_len;
    std::vector<Frame> frames(count);
    for (std::size_t f = 0; f < count; ++f) {
        const ComplexSample* src = w.samples.data() + f * frame_len;
        double scale = 1.0;
        if (normalize) {
            double energy = 0.0;
            for (std::size_t k = 0; k < frame_len; ++k) energy += std::norm(src[k]);
            const double rms = std::sqrt(energy / (2.0 * static_cast<double>(frame_len)));
            if (rms > 0.0) scale = 1.0 / rms;
        }
        auto& data = frames[f].data;
        data.resize(2 * frame_len);
        for (std::size_t k = 0; k < frame_len; ++k) {
            data[k] = static_cast<float>(src[k].real() * scale);
            data[frame_len + k] = static_cast<float>(src[k].imag() * scale);
        }
    }
    return frames;
}

}  // namespace rfprint
