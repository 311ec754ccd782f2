// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1 for the shell).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradcheck.hpp"
#include "rfprint/channel.hpp"
#include "rfprint/dataset.hpp"
#include "rfprint/impairments.hpp"
#include "rfprint/nn/train.hpp"
#include "rfprint/report.hpp"
#include "rfprint/spectral.hpp"

using namespace rfprint;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Options {
    std::uint32_t frames = 4000;
    std::size_t epochs = 30;
    double snr_db = 20.0;
    std::uint64_t seed = 1;
};

DatasetManifest manifest_for(CaptureMode mode, std::uint32_t frames, double snr_db, std::uint64_t seed) {
    DatasetManifest m;
    m.profiles = reference_profiles();
    m.frames_per_device = frames;
    m.generator.mode = mode;
    m.generator.snr_db = snr_db;
    m.master_seed = seed;
    return m;
}

double test_accuracy(CaptureMode mode, const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    const Dataset ds = generate_dataset(manifest_for(mode, o.frames, o.snr_db, o.seed));
    std::cerr << "  " << to_string(mode) << ": generated " << ds.size() << " frames (" << elapsed() << " s)\n";
    const auto split = split_dataset(ds, ds.manifest.split_fractions, o.seed);
    nn::Model model(nn::ModelConfig{});
    nn::TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.seed = o.seed;
    model.initialize(cfg.seed);
    nn::train(model, ds, split.train, split.val, cfg, [&](const nn::EpochMetrics& m) {
        std::cerr << fmt("  %s: epoch %2zu  loss %.4f  train %.4f  val %.4f  (%.0f s)\n", to_string(mode).c_str(),
                         m.epoch, m.train_loss, m.train_acc, m.val_acc, elapsed());
    });
    return nn::evaluate(model, ds, split.test).accuracy;
}

Outcome headline(const Options& o) {
    const double inband = test_accuracy(CaptureMode::InBandOnly, o);
    const double oob = test_accuracy(CaptureMode::WithOOB, o);
    const double gap = 100.0 * (oob - inband);
    return {oob >= 0.85 && gap >= 20.0,
            fmt("with-oob %.2f%% (need >= 85%%), in-band %.2f%%, gap %.2f pp (need >= 20 pp)", 100.0 * oob,
                100.0 * inband, gap)};
}

Outcome split_counts() {
    const Dataset ds = generate_dataset(manifest_for(CaptureMode::WithOOB, 1000, 20.0, 3));
    const auto s = split_dataset(ds, {0.8, 0.1, 0.1}, 1);
    bool ok = true;
    for (std::size_t d = 0; d < ds.device_count(); ++d) {
        auto count = [&](const std::vector<std::size_t>& v) {
            return std::count_if(v.begin(), v.end(), [&](std::size_t i) { return ds.frames[i].label == d; });
        };
        ok = ok && count(s.train) == 800 && count(s.val) == 100 && count(s.test) == 100;
    }
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    const bool partition = all.size() == ds.size() && s.train.size() + s.val.size() + s.test.size() == ds.size();
    return {ok && partition, fmt("%zu/%zu/%zu of %zu frames, 800/100/100 per device: %s, disjoint and exhaustive: %s",
                                 s.train.size(), s.val.size(), s.test.size(), ds.size(), ok ? "yes" : "no",
                                 partition ? "yes" : "no")};
}

Outcome gradients() {
    const auto results = gradcheck::all_layer_checks();
    double worst = 0.0;
    std::string worst_name;
    for (const auto& r : results)
        if (!(r.error <= worst)) {
            worst = r.error;
            worst_name = r.name;
        }
    return {worst < 1e-3, fmt("%zu checks, worst relative error %.2e (%s), need < 1e-3", results.size(), worst,
                              worst_name.c_str())};
}

Outcome phase_noise_mask() {
    const std::size_t n = std::size_t{1} << 20;
    double worst = 0.0;
    for (const auto& p : reference_profiles()) {
        const auto theta = synthesize_phase_noise(n, p.pn_sample_rate_hz, p.pn_levels_dbchz, p.pn_offsets_hz, p.seed);
        const Waveform tone{std::vector<ComplexSample>(n, ComplexSample(1.0, 0.0)), p.pn_sample_rate_hz};
        const auto dev = mask_deviation(welch_psd(apply_phase_noise(tone, theta)), p.pn_offsets_hz, p.pn_levels_dbchz);
        for (double d : dev) worst = std::max(worst, std::abs(d));
    }
    return {worst <= 3.0, fmt("5 device masks, 2^20 samples, worst deviation %.2f dB (need <= 3 dB)", worst)};
}

Outcome saleh_points() {
    const auto dev1 = reference_profiles()[0];
    const Waveform one{{ComplexSample(1.0, 0.0)}, kInternalRate};
    const auto out = apply_pa_saleh(one, dev1.saleh_amam->alpha, dev1.saleh_amam->beta, dev1.saleh_ampm->alpha,
                                    dev1.saleh_ampm->beta)[0];
    const double am = std::abs(std::abs(out) - 2.178 / 2.12157);
    const double pm = std::abs(std::arg(out) - 4.0893 / 10.2040);
    return {am <= 1e-9 && pm <= 1e-9, fmt("AM-AM error %.1e, AM-PM error %.1e (need <= 1e-9)", am, pm)};
}

Outcome regrowth() {
    const auto dev1 = reference_profiles()[0];
    double qam_min = 1e9, qam_max = -1e9, bfsk_worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ReportConfig cfg;
        cfg.seed = seed;
        const double q = pa_regrowth({Modulation::QAM16}, dev1, cfg).delta_db();
        const double b = pa_regrowth({Modulation::BFSK}, dev1, cfg).delta_db();
        qam_min = std::min(qam_min, q);
        qam_max = std::max(qam_max, q);
        bfsk_worst = std::max(bfsk_worst, std::abs(b));
    }
    return {qam_min > 0.0 && bfsk_worst <= 1.0,
            fmt("16QAM ACPR rise %.2f..%.2f dB over 5 seeds (need > 0), BFSK |change| <= %.3f dB (need <= 1 dB)",
                qam_min, qam_max, bfsk_worst)};
}

Outcome dc_spurs() {
    const auto t = dc_offset_traces(ReportConfig{});
    const double gap = t[2].spur_db - t[1].spur_db;
    const bool ordered = t[0].spur_db < t[1].spur_db && t[1].spur_db < t[2].spur_db;
    return {ordered && std::abs(gap - 5.11) <= 0.5,
            fmt("spurs %.2f < %.2f < %.2f dB, gap %.3f dB (need 5.11 +- 0.5)", t[0].spur_db, t[1].spur_db,
                t[2].spur_db, gap)};
}

double tone_power(const Waveform& w, double freq) {
    const std::size_t skip = w.size() / 8;
    ComplexSample acc = 0.0;
    for (std::size_t k = skip; k < w.size() - skip; ++k)
        acc += w[k] * std::polar(1.0, -2.0 * std::numbers::pi * freq * static_cast<double>(k) / w.sample_rate_hz);
    return std::norm(acc / static_cast<double>(w.size() - 2 * skip));
}

Outcome capture_selectivity() {
    const double f = 2.5 * kMessageBandwidth;
    const auto tone = generate_tone(f, kInternalRate, std::size_t{1} << 16);
    const double p_in = tone_power(tone, f);
    const auto narrow = capture(tone, CaptureMode::InBandOnly);
    // The tone aliases after decimation, so measure the total residual power.
    double residual = 0.0;
    const std::size_t skip = narrow.size() / 8;
    for (std::size_t k = skip; k < narrow.size() - skip; ++k) residual += std::norm(narrow[k]);
    residual /= static_cast<double>(narrow.size() - 2 * skip);
    const double atten = -10.0 * std::log10(std::max(residual, 1e-300) / p_in);
    const double kept = 10.0 * std::log10(tone_power(capture(tone, CaptureMode::WithOOB), f) / p_in);
    return {atten >= 60.0 && std::abs(kept) <= 0.1,
            fmt("2.5 B tone: in-band attenuation %.1f dB (need >= 60), with-oob change %.4f dB (need <= 0.1)", atten,
                kept)};
}

Outcome determinism() {
    auto m = manifest_for(CaptureMode::WithOOB, 60, 20.0, 11);
    const Dataset ds = generate_dataset(m);
    std::stringstream manifest_text;
    write_manifest(manifest_text, m);
    const Dataset again = generate_dataset(parse_manifest(manifest_text));
    std::ostringstream a, b;
    write_dataset_payload(a, ds);
    write_dataset_payload(b, again);
    const bool bytes_equal = a.str() == b.str();

    auto run = [&] {
        const auto split = split_dataset(ds, ds.manifest.split_fractions, 1);
        nn::Model model(nn::ModelConfig{});
        nn::TrainConfig cfg;
        cfg.epochs = 2;
        cfg.batch_size = 64;
        model.initialize(cfg.seed);
        std::ostringstream log;
        nn::write_metrics_csv(log, nn::train(model, ds, split.train, split.val, cfg));
        return log.str();
    };
    const auto log1 = run(), log2 = run();
    return {bytes_equal && log1 == log2, fmt("regenerated payload identical: %s (%zu bytes), metrics logs identical: %s",
                                             bytes_equal ? "yes" : "no", a.str().size(), log1 == log2 ? "yes" : "no")};
}

Outcome identity_chain() {
    double worst_wave = 0.0, worst_frame = 0.0;
    for (auto mode : {CaptureMode::InBandOnly, CaptureMode::WithOOB}) {
        GeneratorConfig cfg;
        cfg.mode = mode;
        cfg.snr_db = kNoiselessSnrDb;
        cfg.normalize = false;
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const Waveform ideal = transmit_segment(seed, cfg);
            const Waveform through = add_awgn(apply_chain(ideal, identity_profile(), seed), {cfg.snr_db, seed});
            const auto a = capture(ideal, mode), b = capture(through, mode);
            for (std::size_t i = 0; i < a.size(); ++i) worst_wave = std::max(worst_wave, std::abs(a[i] - b[i]));
            const Frame fa = receive_frame(ideal, cfg);
            const Frame fb = synthesize_frame(identity_profile(), seed, cfg);
            for (std::size_t i = 0; i < fa.data.size(); ++i)
                worst_frame = std::max(worst_frame, static_cast<double>(std::abs(fa.data[i] - fb.data[i])));
        }
    }
    return {worst_wave < 1e-9 && worst_frame < 1e-9,
            fmt("max deviation %.1e (captured waveform), %.1e (frame), need < 1e-9", worst_wave, worst_frame)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks for the rfprint pipeline"};
    std::vector<int> only;
    std::vector<int> skip;
    Options o;
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--skip", skip, "Skip these criteria")->delimiter(',');
    app.add_option("--frames", o.frames, "Frames per device for criterion 1")->capture_default_str();
    app.add_option("--epochs", o.epochs, "Epochs for criterion 1")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"headline accuracy with vs without OOB", [&] { return headline(o); }},
        {"dataset split 80/10/10", split_counts},
        {"gradient correctness", gradients},
        {"phase-noise mask fidelity", phase_noise_mask},
        {"Saleh point checks", saleh_points},
        {"spectral regrowth dichotomy", regrowth},
        {"DC spur ordering and spacing", dc_spurs},
        {"capture selectivity", capture_selectivity},
        {"determinism", determinism},
        {"identity chain", identity_chain},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        if (std::find(skip.begin(), skip.end(), id) != skip.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[i].first << ": " << r.detail
                  << fmt("  [%.1f s]", secs) << std::endl;
        failed += r.pass ? 0 : 1;
    }
    return failed ? 1 : 0;
}
