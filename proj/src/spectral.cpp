#include "rfprint/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include "rfprint/error.hpp"
#include "rfprint/fft.hpp"

namespace rfprint {

namespace {

double to_db(double linear) {
    return linear > 0.0 ? std::max(kFloorDb, 10.0 * std::log10(linear)) : kFloorDb;
}

double from_db(double db) { return db <= kFloorDb ? 0.0 : std::pow(10.0, db / 10.0); }

std::vector<double> make_window(Window kind, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (kind == Window::Hann) {
        // Periodic Hann: bin-centred tones leak into exactly one neighbour
        // on each side.
        for (std::size_t i = 0; i < n; ++i)
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

}  // namespace

PsdEstimate welch_psd(const Waveform& w, const WelchConfig& cfg) {
    const std::size_t seg = cfg.segment_len;
    if (seg < 2) throw InvalidArgument("welch_psd: segment length must be >= 2");
    if (w.size() < seg)
        throw InvalidArgument("welch_psd: waveform of " + std::to_string(w.size()) +
                              " samples is shorter than the segment length " + std::to_string(seg));
    if (cfg.overlap_frac < 0.0 || cfg.overlap_frac >= 1.0)
        throw InvalidArgument("welch_psd: overlap must be in [0, 1)");

    const auto win = make_window(cfg.window, seg);
    double win_energy = 0.0;
    for (double v : win) win_energy += v * v;
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(seg * (1.0 - cfg.overlap_frac))));
    const std::size_t segments = (w.size() - seg) / hop + 1;

    std::vector<double> acc(seg, 0.0);
    std::vector<std::complex<double>> buf(seg);
    for (std::size_t s = 0; s < segments; ++s) {
        const ComplexSample* src = w.samples.data() + s * hop;
        for (std::size_t i = 0; i < seg; ++i) buf[i] = src[i] * win[i];
        fft_inplace(buf);
        for (std::size_t i = 0; i < seg; ++i) acc[i] += std::norm(buf[i]);
    }

    const double fs = w.sample_rate_hz;
    const double scale = 1.0 / (fs * win_energy * static_cast<double>(segments));
    PsdEstimate psd;
    psd.resolution_hz = fs / static_cast<double>(seg);
    psd.freqs_hz.resize(seg);
    psd.power_db.resize(seg);
    // fftshift: bin seg/2 of the output holds 0 Hz.
    const std::size_t half = seg / 2;
    for (std::size_t i = 0; i < seg; ++i) {
        const std::size_t k = (i + seg - half) % seg;
        const double bin = static_cast<double>(i) - static_cast<double>(half);
        psd.freqs_hz[i] = bin * psd.resolution_hz;
        psd.power_db[i] = to_db(acc[k] * scale);
    }
    return psd;
}

double band_power_linear(const PsdEstimate& psd, double f_lo, double f_hi) {
    if (psd.size() == 0) throw InvalidArgument("band_power: empty PSD");
    if (!(f_lo < f_hi)) throw InvalidArgument("band_power: f_lo must be below f_hi");
    const double tol = 1e-9 * psd.resolution_hz;
    if (f_lo < psd.span_lo() - tol || f_hi > psd.span_hi() + tol)
        throw InvalidArgument("band_power: band [" + std::to_string(f_lo) + ", " + std::to_string(f_hi) +
                              ") outside the PSD span");
    const auto first = std::lower_bound(psd.freqs_hz.begin(), psd.freqs_hz.end(), f_lo);
    const auto last = std::lower_bound(psd.freqs_hz.begin(), psd.freqs_hz.end(), f_hi);
    double total = 0.0;
    for (auto it = first; it != last; ++it)
        total += from_db(psd.power_db[static_cast<std::size_t>(it - psd.freqs_hz.begin())]);
    return total * psd.resolution_hz;
}

double band_power(const PsdEstimate& psd, double f_lo, double f_hi) {
    return to_db(band_power_linear(psd, f_lo, f_hi));
}

double acpr(const PsdEstimate& psd, Band main, Band adjacent) {
    if (main.lo_hz < adjacent.hi_hz && adjacent.lo_hz < main.hi_hz)
        throw InvalidArgument("acpr: main and adjacent bands overlap");
    return band_power(psd, adjacent.lo_hz, adjacent.hi_hz) - band_power(psd, main.lo_hz, main.hi_hz);
}

double dc_spur_db(const PsdEstimate& psd) {
    if (psd.size() < 4) throw InvalidArgument("dc_spur_db: PSD too short");
    const double half_band = 1.5 * psd.resolution_hz;
    const double spur = band_power_linear(psd, -half_band, half_band);
    const double total = band_power_linear(psd, psd.span_lo(), psd.span_hi());
    return to_db(spur) - to_db(std::max(total - spur, 0.0));
}

std::vector<double> mask_deviation(const PsdEstimate& psd, std::span<const double> offsets_hz,
                                   std::span<const double> levels_dbchz) {
    if (offsets_hz.size() != levels_dbchz.size())
        throw InvalidArgument("mask_deviation: offsets and levels differ in length");
    if (psd.size() < 5) throw InvalidArgument("mask_deviation: PSD too short");
    const auto peak = static_cast<std::size_t>(
        std::max_element(psd.power_db.begin(), psd.power_db.end()) - psd.power_db.begin());
    const double carrier_f = psd.freqs_hz[peak];
    const double carrier = band_power_linear(psd, std::max(psd.span_lo(), carrier_f - 2.5 * psd.resolution_hz),
                                             std::min(psd.span_hi(), carrier_f + 2.5 * psd.resolution_hz));
    std::vector<double> out;
    out.reserve(offsets_hz.size());
    for (std::size_t i = 0; i < offsets_hz.size(); ++i) {
        const double f = carrier_f + offsets_hz[i];
        if (f < psd.span_lo() || f >= psd.span_hi())
            throw InvalidArgument("mask_deviation: offset " + std::to_string(offsets_hz[i]) + " outside the PSD span");
        const auto bin = static_cast<std::size_t>(std::clamp<double>(
            std::round((f - psd.freqs_hz.front()) / psd.resolution_hz), 0.0, static_cast<double>(psd.size() - 1)));
        const double measured = psd.power_db[bin] - to_db(carrier);
        out.push_back(measured - levels_dbchz[i]);
    }
    return out;
}

void write_psd(std::ostream& out, const PsdEstimate& psd) {
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    out << "# freq_hz power_db\n";
    for (std::size_t i = 0; i < psd.size(); ++i) out << psd.freqs_hz[i] << ' ' << psd.power_db[i] << '\n';
    out.precision(old_precision);
}

void save_psd(const std::string& path, const PsdEstimate& psd) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write PSD file '" + path + "'");
    write_psd(out, psd);
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace rfprint
