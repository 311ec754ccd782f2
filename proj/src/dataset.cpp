#include "rfprint/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "rfprint/binary_io.hpp"
#include "rfprint/error.hpp"
#include "rfprint/impairments.hpp"
#include "rfprint/seed.hpp"

namespace rfprint {

namespace {

struct SegmentLayout {
    std::size_t decimation;
    std::size_t guard_out;  // captured samples dropped on each side
    std::size_t length;     // internal samples
};

SegmentLayout layout_for(const GeneratorConfig& cfg) {
    const double bw = capture_bandwidth(cfg.mode);
    const double ratio = cfg.pulse.sample_rate_hz / bw;
    const auto decim = static_cast<std::size_t>(std::llround(ratio));
    if (decim < 1 || std::abs(ratio - static_cast<double>(decim)) > 1e-9 * ratio)
        throw InvalidArgument("generator: internal rate is not an integer multiple of the capture rate");
    std::size_t half_filter = 0;
    if (decim > 1) half_filter = capture_filter(cfg.pulse.sample_rate_hz, bw).size() / 2;
    const std::size_t guard_out = (half_filter + decim) / decim + 2;
    return {decim, guard_out, (cfg.frame_len + 2 * guard_out) * decim};
}

const char* modulation_name(Modulation m) {
    switch (m) {
        case Modulation::BPSK: return "bpsk";
        case Modulation::BFSK: return "bfsk";
        case Modulation::PSK8: return "psk8";
        case Modulation::QAM16: return "qam16";
    }
    return "qam16";
}

Modulation parse_modulation(const std::string& s) {
    if (s == "bpsk") return Modulation::BPSK;
    if (s == "bfsk") return Modulation::BFSK;
    if (s == "psk8") return Modulation::PSK8;
    if (s == "qam16") return Modulation::QAM16;
    throw IoError("unknown modulation '" + s + "'");
}

}  // namespace

std::uint64_t frame_seed(std::uint64_t master_seed, std::size_t device, std::size_t index) {
    return derive_seed({master_seed, device, index});
}

Waveform transmit_segment(std::uint64_t frame_seed, const GeneratorConfig& cfg) {
    const auto lay = layout_for(cfg);
    const auto sps = static_cast<std::size_t>(cfg.pulse.samples_per_symbol);
    const bool shaped = cfg.scheme.kind != Modulation::BFSK && cfg.pulse.kind == PulseKind::RootRaisedCosine;
    // Skip the ramp-up so every kept sample sees the full overlap of pulses.
    const std::size_t offset = shaped ? static_cast<std::size_t>(cfg.pulse.span_symbols) * sps : 0;
    const std::size_t symbols = (lay.length + sps - 1) / sps + 1;
    Rng rng = make_rng(frame_seed, Stream::Bits);
    const auto bits = random_bits(symbols * static_cast<std::size_t>(bits_per_symbol(cfg.scheme.kind)), rng);
    const Waveform full = modulate(bits, cfg.scheme, cfg.pulse);
    std::vector<ComplexSample> seg(full.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                                   full.samples.begin() + static_cast<std::ptrdiff_t>(offset + lay.length));
    return {std::move(seg), full.sample_rate_hz};
}

Frame receive_frame(const Waveform& segment, const GeneratorConfig& cfg) {
    const auto lay = layout_for(cfg);
    if (segment.size() != lay.length) throw ShapeMismatch("receive_frame: segment length does not match the layout");
    const Waveform captured = capture(segment, cfg.mode);
    std::vector<ComplexSample> kept(captured.samples.begin() + static_cast<std::ptrdiff_t>(lay.guard_out),
                                    captured.samples.begin() + static_cast<std::ptrdiff_t>(lay.guard_out + cfg.frame_len));
    auto frames = frame_slice(Waveform(std::move(kept), captured.sample_rate_hz), cfg.frame_len, cfg.normalize);
    return std::move(frames.front());
}

Frame synthesize_frame(const DeviceProfile& profile, std::uint64_t seed, const GeneratorConfig& cfg) {
    const Waveform ideal = transmit_segment(seed, cfg);
    const Waveform impaired = apply_chain(ideal, profile, seed);
    const Waveform noisy = add_awgn(impaired, ChannelConfig{cfg.snr_db, seed});
    return receive_frame(noisy, cfg);
}

void DatasetManifest::validate() const {
    if (profiles.size() < 2) throw InvalidArgument("dataset: need at least two device profiles");
    if (profiles.size() > 255) throw InvalidArgument("dataset: labels are stored as u8; at most 255 devices");
    if (frames_per_device < 10) throw InvalidArgument("dataset: frames_per_device must be >= 10");
    double sum = 0.0;
    for (double f : split_fractions) {
        if (f < 0.0) throw InvalidArgument("dataset: negative split fraction");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("dataset: split fractions must sum to 1");
    for (const auto& p : profiles) p.validate();
}

void write_manifest(std::ostream& out, const DatasetManifest& m) {
    const auto& g = m.generator;
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    out << "# rfprint dataset manifest\n";
    out << "format_version = " << m.format_version << '\n';
    out << "device_count = " << m.device_count() << '\n';
    out << "frames_per_device = " << m.frames_per_device << '\n';
    out << "frame_length = " << g.frame_len << '\n';
    out << "capture_mode = " << to_string(g.mode) << '\n';
    out << "snr_db = " << g.snr_db << '\n';
    out << "master_seed = " << m.master_seed << '\n';
    out << "split_fractions = " << m.split_fractions[0] << ", " << m.split_fractions[1] << ", "
        << m.split_fractions[2] << '\n';
    out << "normalize = " << (g.normalize ? "true" : "false") << '\n';
    out << "modulation = " << modulation_name(g.scheme.kind) << '\n';
    out << "bfsk_tone_separation_hz = " << g.scheme.bfsk_tone_separation_hz << '\n';
    out << "pulse = " << (g.pulse.kind == PulseKind::RootRaisedCosine ? "rrc" : "rect") << '\n';
    out << "rolloff = " << g.pulse.rolloff << '\n';
    out << "span_symbols = " << g.pulse.span_symbols << '\n';
    out << "samples_per_symbol = " << g.pulse.samples_per_symbol << '\n';
    out << "sample_rate_hz = " << g.pulse.sample_rate_hz << '\n';
    out << '\n';
    out.precision(old_precision);
    write_profiles(out, m.profiles);
}

DatasetManifest parse_manifest(std::istream& in) {
    DatasetManifest m;
    std::string line;
    std::stringstream rest;
    bool in_profiles = false;
    std::size_t declared_devices = 0;
    while (std::getline(in, line)) {
        if (in_profiles) {
            rest << line << '\n';
            continue;
        }
        auto text = line.substr(0, line.find('#'));
        text.erase(0, text.find_first_not_of(" \t\r"));
        text.erase(text.find_last_not_of(" \t\r") + 1);
        if (text.empty()) continue;
        if (text.front() == '[') {
            in_profiles = true;
            rest << line << '\n';
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw IoError("manifest: expected key = value, got '" + text + "'");
        auto key = text.substr(0, eq);
        auto value = text.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        auto& g = m.generator;
        try {
            if (key == "format_version") m.format_version = static_cast<std::uint16_t>(std::stoul(value));
            else if (key == "device_count") declared_devices = std::stoul(value);
            else if (key == "frames_per_device") m.frames_per_device = static_cast<std::uint32_t>(std::stoul(value));
            else if (key == "frame_length") g.frame_len = std::stoul(value);
            else if (key == "capture_mode") g.mode = parse_capture_mode(value);
            else if (key == "snr_db") g.snr_db = std::stod(value);
            else if (key == "master_seed") m.master_seed = std::stoull(value);
            else if (key == "split_fractions") {
                std::stringstream ss(value);
                std::string item;
                for (double& f : m.split_fractions) {
                    if (!std::getline(ss, item, ',')) throw IoError("manifest: split_fractions needs three values");
                    f = std::stod(item);
                }
            } else if (key == "normalize") g.normalize = value == "true";
            else if (key == "modulation") g.scheme.kind = parse_modulation(value);
            else if (key == "bfsk_tone_separation_hz") g.scheme.bfsk_tone_separation_hz = std::stod(value);
            else if (key == "pulse") g.pulse.kind = value == "rect" ? PulseKind::RectangularHold : PulseKind::RootRaisedCosine;
            else if (key == "rolloff") g.pulse.rolloff = std::stod(value);
            else if (key == "span_symbols") g.pulse.span_symbols = std::stoi(value);
            else if (key == "samples_per_symbol") g.pulse.samples_per_symbol = std::stoi(value);
            else if (key == "sample_rate_hz") g.pulse.sample_rate_hz = std::stod(value);
            else throw IoError("manifest: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw IoError("manifest: bad value '" + value + "' for " + key);
        } catch (const std::out_of_range&) {
            throw IoError("manifest: value out of range for " + key);
        }
    }
    m.profiles = parse_profiles(rest);
    if (declared_devices != 0 && declared_devices != m.profiles.size())
        throw IoError("manifest: device_count disagrees with the embedded profiles");
    return m;
}

Dataset generate_dataset(const DatasetManifest& manifest) {
    manifest.validate();
    Dataset ds;
    ds.manifest = manifest;
    const std::size_t per = manifest.frames_per_device;
    const std::size_t total = per * manifest.device_count();
    ds.frames.resize(total);
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(total); ++j) {
        const auto idx = static_cast<std::size_t>(j);
        const std::size_t device = idx / per;
        const std::size_t index = idx % per;
        try {
            Frame f = synthesize_frame(manifest.profiles[device], frame_seed(manifest.master_seed, device, index),
                                       manifest.generator);
            f.label = static_cast<std::uint8_t>(device);
            ds.frames[idx] = std::move(f);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return ds;
}

void write_dataset_payload(std::ostream& out, const Dataset& ds) {
    const std::size_t devices = ds.device_count();
    const std::size_t per = ds.manifest.frames_per_device;
    const std::size_t len = ds.manifest.generator.frame_len;
    if (ds.frames.size() != devices * per) throw ShapeMismatch("dataset: frame count disagrees with the manifest");
    binio::put_magic(out, "RFIQ");
    binio::put_le<std::uint16_t>(out, ds.manifest.format_version);
    binio::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(devices));
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(per));
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(len));
    std::vector<char> buf(2 * len * 4 + 1);
    for (const auto& f : ds.frames) {
        if (f.data.size() != 2 * len) throw ShapeMismatch("dataset: frame of the wrong length");
        for (std::size_t i = 0; i < 2 * len; ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(f.data[i]);
            for (std::size_t b = 0; b < 4; ++b) buf[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
        }
        buf.back() = static_cast<char>(f.label);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw IoError("dataset: write failed");
}

Dataset read_dataset_payload(std::istream& in) {
    binio::expect_magic(in, "RFIQ", "dataset");
    Dataset ds;
    ds.manifest.format_version = binio::get_le<std::uint16_t>(in);
    if (ds.manifest.format_version != kDatasetFormatVersion)
        throw IoError("dataset: unsupported format version " + std::to_string(ds.manifest.format_version));
    const std::size_t devices = binio::get_le<std::uint16_t>(in);
    ds.manifest.frames_per_device = binio::get_le<std::uint32_t>(in);
    const std::size_t len = binio::get_le<std::uint32_t>(in);
    ds.manifest.generator.frame_len = len;
    ds.manifest.profiles.resize(devices);
    for (std::size_t d = 0; d < devices; ++d) ds.manifest.profiles[d].name = "device" + std::to_string(d);
    const std::size_t total = devices * ds.manifest.frames_per_device;
    ds.frames.resize(total);
    std::vector<unsigned char> buf(2 * len * 4 + 1);
    for (auto& f : ds.frames) {
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
            throw IoError("dataset: truncated payload");
        f.data.resize(2 * len);
        for (std::size_t i = 0; i < 2 * len; ++i) {
            std::uint32_t bits = 0;
            for (std::size_t b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(buf[4 * i + b]) << (8 * b);
            f.data[i] = std::bit_cast<float>(bits);
        }
        f.label = buf.back();
        if (f.label >= devices) throw IoError("dataset: label out of range");
    }
    return ds;
}

std::string manifest_path(const std::string& dataset_path) { return dataset_path + ".manifest"; }

void save_dataset(const std::string& path, const Dataset& ds) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write dataset '" + path + "'");
        write_dataset_payload(out, ds);
    }
    std::ofstream man(manifest_path(path));
    if (!man) throw IoError("cannot write manifest '" + manifest_path(path) + "'");
    write_manifest(man, ds.manifest);
    if (!man) throw IoError("manifest write failed");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + path + "'");
    Dataset ds = read_dataset_payload(in);
    if (std::filesystem::exists(manifest_path(path))) {
        std::ifstream man(manifest_path(path));
        DatasetManifest m = parse_manifest(man);
        if (m.device_count() != ds.device_count() || m.frames_per_device != ds.manifest.frames_per_device ||
            m.generator.frame_len != ds.manifest.generator.frame_len)
            throw IoError("dataset: manifest disagrees with the payload header");
        ds.manifest = std::move(m);
    }
    return ds;
}

std::uint64_t frame_key(const Frame& f) {
    std::uint64_t h = mix64(f.label);
    for (float v : f.data) h = mix64(h ^ std::bit_cast<std::uint32_t>(v));
    return h;
}

DatasetSplits split_dataset(const Dataset& ds, std::array<double, 3> fractions, std::uint64_t seed) {
    double sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw InvalidArgument("split_dataset: negative fraction");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split_dataset: fractions must sum to 1");

    std::vector<std::vector<std::pair<std::uint64_t, std::size_t>>> by_label(ds.device_count());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto label = ds.frames[i].label;
        if (label >= by_label.size()) throw InvalidArgument("split_dataset: label out of range");
        by_label[label].push_back({derive_seed({seed, static_cast<std::uint64_t>(Stream::Split), frame_key(ds.frames[i])}), i});
    }
    DatasetSplits out;
    for (auto& group : by_label) {
        std::sort(group.begin(), group.end());
        const std::size_t n = group.size();
        const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
        const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n))));
        for (std::size_t k = 0; k < n; ++k) {
            auto& dst = k < n_train ? out.train : (k < n_train + n_val ? out.val : out.test);
            dst.push_back(group[k].second);
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> iterate_minibatches(const Dataset& ds, std::span<const std::size_t> split,
                                                          std::size_t batch_size, std::uint64_t shuffle_seed,
                                                          std::size_t epoch, bool shuffle) {
    if (split.empty()) throw InvalidArgument("iterate_minibatches: empty split");
    if (batch_size == 0) throw InvalidArgument("iterate_minibatches: batch size must be >= 1");
    std::vector<std::size_t> order(split.begin(), split.end());
    if (shuffle) {
        std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
        keyed.reserve(order.size());
        const auto epoch_seed = derive_seed({shuffle_seed, static_cast<std::uint64_t>(Stream::Shuffle), epoch});
        for (auto i : order) keyed.push_back({derive_seed({epoch_seed, frame_key(ds.frames.at(i))}), i});
        std::sort(keyed.begin(), keyed.end());
        for (std::size_t k = 0; k < keyed.size(); ++k) order[k] = keyed[k].second;
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

}  // namespace rfprint
