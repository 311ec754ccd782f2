#include "rfprint/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "rfprint/error.hpp"
#include "rfprint/impairments.hpp"

namespace rfprint {

namespace {

Waveform modulated(const ModulationScheme& scheme, const ReportConfig& cfg, std::uint64_t tag) {
    const PulseShapeConfig pulse{};
    const auto sps = static_cast<std::size_t>(pulse.samples_per_symbol);
    Rng rng = make_rng(derive_seed({cfg.seed, tag}), Stream::Bits);
    const std::size_t symbols = cfg.samples / sps + 1;
    auto bits = random_bits(symbols * static_cast<std::size_t>(bits_per_symbol(scheme.kind)), rng);
    Waveform w = modulate(bits, scheme, pulse);
    w.samples.resize(std::min(w.size(), cfg.samples));
    return w;
}

double occupied_half_width() {
    const PulseShapeConfig pulse{};
    return 0.5 * pulse.symbol_rate_hz() * (1.0 + pulse.rolloff);
}

}  // namespace

Band main_channel() {
    const double h = occupied_half_width();
    return {-h, h};
}

Band adjacent_channel() {
    const double h = occupied_half_width();
    return {h, 3.0 * h};
}

RegrowthResult pa_regrowth(const ModulationScheme& scheme, const DeviceProfile& pa, const ReportConfig& cfg) {
    if (!pa.has_saleh()) throw InvalidArgument("pa_regrowth: profile '" + pa.name + "' has no Saleh PA");
    const Waveform w = modulated(scheme, cfg, static_cast<std::uint64_t>(scheme.kind));
    const Waveform out = apply_pa_saleh(w, pa.saleh_amam->alpha, pa.saleh_amam->beta, pa.saleh_ampm->alpha,
                                        pa.saleh_ampm->beta);
    RegrowthResult r;
    r.linear = welch_psd(w, cfg.welch);
    r.nonlinear = welch_psd(out, cfg.welch);
    r.acpr_linear_db = acpr(r.linear, main_channel(), adjacent_channel());
    r.acpr_nonlinear_db = acpr(r.nonlinear, main_channel(), adjacent_channel());
    return r;
}

DeviceProfile phase_noise_device(double level_dbchz) {
    DeviceProfile p;
    p.name = "pn" + std::to_string(static_cast<int>(std::lround(level_dbchz)));
    p.pn_offsets_hz = {0.1 * kSkirtOffsetHz, kSkirtOffsetHz, 4.0 * kSkirtOffsetHz};
    p.pn_levels_dbchz = {level_dbchz + 20.0, level_dbchz, level_dbchz - 12.0412};
    p.pn_sample_rate_hz = kInternalRate;
    return p;
}

std::vector<PhaseNoiseTrace> phase_noise_traces(const ReportConfig& cfg) {
    const Waveform tone = generate_tone(0.0, kInternalRate, cfg.samples);
    std::vector<PhaseNoiseTrace> out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::uint64_t counter = derive_seed({cfg.seed, static_cast<std::uint64_t>(Stream::PhaseNoise)});
    for (double level : {nan, -80.0, -72.0}) {
        PhaseNoiseTrace t;
        t.level_dbchz = level;
        if (std::isnan(level)) {
            t.label = "ideal";
            t.psd = welch_psd(tone, cfg.welch);
        } else {
            const DeviceProfile dev = phase_noise_device(level);
            t.label = dev.name;
            t.psd = welch_psd(apply_chain(tone, dev, counter), cfg.welch);
        }
        const double offset[] = {kSkirtOffsetHz};
        const double zero[] = {0.0};
        t.skirt_dbchz = mask_deviation(t.psd, offset, zero).front();
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<DcTrace> dc_offset_traces(const ReportConfig& cfg, const std::vector<double>& offsets) {
    const Waveform w = modulated({Modulation::QAM16, 0.0}, cfg, 0xdc);
    std::vector<DcTrace> out;
    for (double dc : offsets) {
        DcTrace t;
        t.dc = dc;
        t.psd = welch_psd(apply_dc_offset(w, dc, dc), cfg.welch);
        t.spur_db = dc_spur_db(t.psd);
        out.push_back(std::move(t));
    }
    return out;
}

SpectralReport build_report(const ReportConfig& cfg) {
    const auto devices = reference_profiles();
    SpectralReport r;
    r.bfsk = pa_regrowth({Modulation::BFSK, 0.0}, devices.at(0), cfg);
    r.qam16_dev1 = pa_regrowth({Modulation::QAM16, 0.0}, devices.at(0), cfg);
    r.qam16_dev2 = pa_regrowth({Modulation::QAM16, 0.0}, devices.at(1), cfg);
    r.phase_noise = phase_noise_traces(cfg);
    r.dc = dc_offset_traces(cfg);
    return r;
}

std::vector<std::string> write_report(const std::string& dir, const SpectralReport& report) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const PsdEstimate& psd) {
        const auto path = (std::filesystem::path(dir) / name).string();
        save_psd(path, psd);
        written.push_back(path);
    };
    emit("pa_bfsk_linear.psd", report.bfsk.linear);
    emit("pa_bfsk_saleh_dev1.psd", report.bfsk.nonlinear);
    emit("pa_qam16_linear.psd", report.qam16_dev1.linear);
    emit("pa_qam16_saleh_dev1.psd", report.qam16_dev1.nonlinear);
    emit("pa_qam16_saleh_dev2.psd", report.qam16_dev2.nonlinear);
    for (const auto& t : report.phase_noise) emit("phase_noise_" + t.label + ".psd", t.psd);
    for (const auto& t : report.dc) {
        char name[32];
        std::snprintf(name, sizeof name, "dc_offset_%.1f.psd", t.dc);
        emit(name, t.psd);
    }

    const auto summary = (std::filesystem::path(dir) / "summary.txt").string();
    std::ofstream out(summary);
    if (!out) throw IoError("cannot write '" + summary + "'");
    out.setf(std::ios::fixed);
    out.precision(3);
    const Band m = main_channel(), a = adjacent_channel();
    out << "# ACPR bands: main [" << m.lo_hz << ", " << m.hi_hz << "), adjacent [" << a.lo_hz << ", " << a.hi_hz
        << ")\n";
    auto acpr_line = [&](const char* label, const RegrowthResult& r) {
        out << label << " acpr_linear_db " << r.acpr_linear_db << " acpr_saleh_db " << r.acpr_nonlinear_db
            << " delta_db " << r.delta_db() << '\n';
    };
    acpr_line("bfsk_dev1", report.bfsk);
    acpr_line("qam16_dev1", report.qam16_dev1);
    acpr_line("qam16_dev2", report.qam16_dev2);
    for (const auto& t : report.phase_noise)
        out << "phase_noise_" << t.label << " skirt_dbchz_at_offset_" << kSkirtOffsetHz << ' ' << t.skirt_dbchz << '\n';
    for (const auto& t : report.dc) out << "dc_offset_" << t.dc << " spur_db " << t.spur_db << '\n';
    if (!out) throw IoError("write failed for '" + summary + "'");
    written.push_back(summary);
    return written;
}

}  // namespace rfprint
