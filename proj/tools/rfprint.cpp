// Command-line front end: generate / train / evaluate / psd / reproduce.

#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "rfprint/dataset.hpp"
#include "rfprint/error.hpp"
#include "rfprint/nn/checkpoint.hpp"
#include "rfprint/nn/train.hpp"
#include "rfprint/report.hpp"

namespace fs = std::filesystem;
using namespace rfprint;

namespace {

struct GenerateOptions {
    std::string profiles;
    std::string mode = "with-oob";
    std::uint32_t frames = 4000;
    std::uint64_t seed = 1;
    double snr_db = 20.0;
    bool raw = false;
    std::string out;
};

struct TrainOptions {
    std::string dataset;
    nn::TrainConfig train;
    std::uint64_t split_seed = 1;
    int threads = 1;
    std::string checkpoint;
    std::string metrics;
};

struct EvaluateOptions {
    std::string dataset;
    std::string checkpoint;
    std::string split = "test";
    std::uint64_t split_seed = 1;
    std::string confusion;
};

struct PsdOptions {
    ReportConfig report;
    std::string out;
};

std::string out_dir_path(const std::string& out_dir, const std::string& explicit_path, const std::string& name) {
    if (!explicit_path.empty()) return explicit_path;
    fs::create_directories(out_dir);
    return (fs::path(out_dir) / name).string();
}

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::string dataset_name(CaptureMode mode) { return to_string(mode) + ".rfiq"; }

std::vector<DeviceProfile> profiles_from(const std::string& path) {
    return path.empty() ? reference_profiles() : load_profiles(path);
}

std::string run_generate(const GenerateOptions& o, const std::string& out_dir) {
    DatasetManifest m;
    m.profiles = profiles_from(o.profiles);
    m.frames_per_device = o.frames;
    m.master_seed = o.seed;
    m.generator.mode = parse_capture_mode(o.mode);
    m.generator.snr_db = o.snr_db;
    m.generator.normalize = !o.raw;
    const auto path = out_dir_path(out_dir, o.out, dataset_name(m.generator.mode));
    ensure_parent(path);
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = generate_dataset(m);
    save_dataset(path, ds);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "wrote " << path << " (" << ds.size() << " frames, " << to_string(m.generator.mode) << ", "
              << secs << " s)\n";
    std::vector<std::size_t> counts(ds.device_count(), 0);
    for (const auto& f : ds.frames) ++counts[f.label];
    for (std::size_t d = 0; d < counts.size(); ++d)
        std::cout << "  " << ds.manifest.profiles[d].name << ": " << counts[d] << " frames\n";
    return path;
}

DatasetSplits splits_for(const Dataset& ds, std::uint64_t split_seed) {
    return split_dataset(ds, ds.manifest.split_fractions, split_seed);
}

double run_train(const TrainOptions& o, const std::string& out_dir) {
    omp_set_num_threads(o.threads);
    const Dataset ds = load_dataset(o.dataset);
    const auto splits = splits_for(ds, o.split_seed);
    nn::ModelConfig mc;
    mc.classes = ds.device_count();
    mc.input_width = ds.manifest.generator.frame_len;
    nn::Model model(mc);
    model.initialize(o.train.seed);
    std::cout << "training on " << splits.train.size() << " frames, validating on " << splits.val.size() << '\n';
    const auto t0 = std::chrono::steady_clock::now();
    const auto history = nn::train(model, ds, splits.train, splits.val, o.train, [&](const nn::EpochMetrics& m) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("epoch %3zu  lr %.2e  loss %.4f  train %.4f  val %.4f  (%.0f s)\n", m.epoch, m.lr, m.train_loss,
                    m.train_acc, m.val_acc, secs);
        std::fflush(stdout);
    });
    const auto ckpt = out_dir_path(out_dir, o.checkpoint, "model.rfck");
    const auto metrics = out_dir_path(out_dir, o.metrics, "metrics.csv");
    ensure_parent(ckpt);
    ensure_parent(metrics);
    nn::save_checkpoint(ckpt, model);
    nn::save_metrics_csv(metrics, history);
    std::cout << "wrote " << ckpt << " and " << metrics << '\n';
    return history.empty() ? 0.0 : history.back().val_acc;
}

double run_evaluate(const EvaluateOptions& o, const std::string& out_dir) {
    const Dataset ds = load_dataset(o.dataset);
    nn::Model model = nn::load_checkpoint(o.checkpoint);
    if (model.config().classes != ds.device_count())
        throw InvalidArgument("checkpoint has " + std::to_string(model.config().classes) +
                              " output classes but the dataset has " + std::to_string(ds.device_count()) + " devices");
    if (model.config().input_width != ds.manifest.generator.frame_len)
        throw InvalidArgument("checkpoint expects frames of length " + std::to_string(model.config().input_width));
    const auto splits = splits_for(ds, o.split_seed);
    const std::vector<std::size_t>* split = &splits.test;
    if (o.split == "val") split = &splits.val;
    else if (o.split == "train") split = &splits.train;
    const auto ev = nn::evaluate(model, ds, *split);
    const auto path = out_dir_path(out_dir, o.confusion, "confusion.csv");
    ensure_parent(path);
    nn::save_confusion_csv(path, ev);
    std::printf("%s accuracy %.9g over %zu frames\n", o.split.c_str(), ev.accuracy, split->size());
    nn::write_confusion_csv(std::cout, ev);
    std::cout << "wrote " << path << '\n';
    return ev.accuracy;
}

void run_psd(const PsdOptions& o, const std::string& out_dir) {
    const auto dir = o.out.empty() ? (fs::path(out_dir) / "psd").string() : o.out;
    const auto report = build_report(o.report);
    for (const auto& p : write_report(dir, report)) std::cout << "wrote " << p << '\n';
    std::ifstream summary(fs::path(dir) / "summary.txt");
    std::cout << summary.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transmitter fingerprinting: impairment simulation, dataset generation and CNN classification"};
    app.require_subcommand(1);
    std::string out_dir = "out";
    app.add_option("--out-dir", out_dir, "Directory for default output paths")
        ->envname("RFPRINT_OUT_DIR")
        ->capture_default_str();

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Synthesize a labelled dataset and its manifest");
    g->add_option("--profiles", gen.profiles, "Device profile file (default: the five built-in reference devices)")
        ->check(CLI::ExistingFile);
    g->add_option("--mode", gen.mode, "Capture mode")->check(CLI::IsMember({"in-band", "with-oob"}))->capture_default_str();
    g->add_option("--frames", gen.frames, "Frames per device")->check(CLI::Range(10u, 100000000u))->capture_default_str();
    g->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
    g->add_option("--snr", gen.snr_db, "Per-sample SNR in dB (>= 300 disables noise)")->capture_default_str();
    g->add_flag("--raw", gen.raw, "Keep raw IQ amplitudes (no per-frame RMS normalization)");
    g->add_option("--out", gen.out, "Dataset file (default: <out-dir>/<mode>.rfiq)");

    TrainOptions tr;
    auto add_train_flags = [&](CLI::App* sub) {
        sub->add_option("--epochs", tr.train.epochs, "Training epochs")->capture_default_str();
        sub->add_option("--batch", tr.train.batch_size, "Minibatch size")->check(CLI::Range(2u, 1u << 20))->capture_default_str();
        sub->add_option("--lr", tr.train.initial_lr, "Initial learning rate")->capture_default_str();
        sub->add_option("--lr-drop", tr.train.lr_drop_factor, "Learning-rate drop factor")->capture_default_str();
        sub->add_option("--lr-period", tr.train.lr_drop_period, "Epochs between learning-rate drops")->capture_default_str();
        sub->add_option("--momentum", tr.train.momentum, "SGD momentum")->capture_default_str();
        sub->add_option("--train-seed", tr.train.seed, "Seed for initialization, shuffling and dropout")->capture_default_str();
        sub->add_option("--split-seed", tr.split_seed, "Seed of the train/val/test split")->capture_default_str();
        sub->add_option("--threads", tr.threads, "OpenMP threads for the training kernels")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    };
    auto* t = app.add_subcommand("train", "Train the CNN on a dataset's training split");
    t->add_option("--dataset", tr.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    add_train_flags(t);
    t->add_option("--checkpoint", tr.checkpoint, "Checkpoint output (default: <out-dir>/model.rfck)");
    t->add_option("--metrics", tr.metrics, "Per-epoch metrics CSV (default: <out-dir>/metrics.csv)");

    EvaluateOptions ev;
    auto* e = app.add_subcommand("evaluate", "Accuracy and confusion matrix of a checkpoint");
    e->add_option("--dataset", ev.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    e->add_option("--split", ev.split, "Split to evaluate")->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
    e->add_option("--split-seed", ev.split_seed, "Seed of the train/val/test split")->capture_default_str();
    e->add_option("--confusion", ev.confusion, "Confusion CSV (default: <out-dir>/confusion.csv)");

    PsdOptions ps;
    auto* p = app.add_subcommand("psd", "Spectral reports for the PA, phase-noise and DC-offset impairments");
    p->add_option("--samples", ps.report.samples, "Samples per trace")->check(CLI::Range(8192u, 1u << 26))->capture_default_str();
    p->add_option("--seed", ps.report.seed, "Seed")->capture_default_str();
    p->add_option("--segment", ps.report.welch.segment_len, "Welch segment length")->capture_default_str();
    p->add_option("--out", ps.out, "Report directory (default: <out-dir>/psd)");

    auto* r = app.add_subcommand("reproduce", "generate, train and evaluate both capture modes and compare");
    r->add_option("--profiles", gen.profiles, "Device profile file (default: built-in reference devices)")
        ->check(CLI::ExistingFile);
    r->add_option("--frames", gen.frames, "Frames per device")->check(CLI::Range(10u, 100000000u))->capture_default_str();
    r->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
    r->add_option("--snr", gen.snr_db, "Per-sample SNR in dB")->capture_default_str();
    r->add_flag("--raw", gen.raw, "Keep raw IQ amplitudes (no per-frame RMS normalization)");
    add_train_flags(r);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        std::cerr << "error: " << ex.what() << "\nRun with --help for more information.\n";
        return ex.get_exit_code() ? ex.get_exit_code() : 1;
    }

    try {
        if (g->parsed()) {
            run_generate(gen, out_dir);
        } else if (t->parsed()) {
            run_train(tr, out_dir);
        } else if (e->parsed()) {
            run_evaluate(ev, out_dir);
        } else if (p->parsed()) {
            run_psd(ps, out_dir);
        } else if (r->parsed()) {
            double acc[2] = {0.0, 0.0};
            const CaptureMode modes[2] = {CaptureMode::InBandOnly, CaptureMode::WithOOB};
            for (int i = 0; i < 2; ++i) {
                const auto dir = (fs::path(out_dir) / to_string(modes[i])).string();
                GenerateOptions go = gen;
                go.mode = to_string(modes[i]);
                go.out.clear();
                TrainOptions to = tr;
                to.dataset = run_generate(go, dir);
                run_train(to, dir);
                EvaluateOptions eo;
                eo.dataset = to.dataset;
                eo.checkpoint = (fs::path(dir) / "model.rfck").string();
                eo.split_seed = tr.split_seed;
                acc[i] = run_evaluate(eo, dir);
            }
            std::printf("test accuracy  in-band %.4f  with-oob %.4f  gap %+.1f pp\n", acc[0], acc[1],
                        100.0 * (acc[1] - acc[0]));
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
