#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rfprint/baseband.hpp"
#include "rfprint/channel.hpp"
#include "rfprint/device_profile.hpp"
#include "rfprint/frame.hpp"

namespace rfprint {

/// Everything that determines how one labelled frame is produced.
struct GeneratorConfig {
    ModulationScheme scheme{};
    PulseShapeConfig pulse{};
    CaptureMode mode = CaptureMode::WithOOB;
    double snr_db = 20.0;
    bool normalize = true;
    std::size_t frame_len = kFrameLength;
};

/// Ideal transmitted waveform for one frame at the internal rate, long
/// enough to cover the frame plus the capture filter's guard on both sides.
Waveform transmit_segment(std::uint64_t frame_seed, const GeneratorConfig& cfg);

/// Capture + framing of an internal-rate segment produced for `cfg`.
Frame receive_frame(const Waveform& segment, const GeneratorConfig& cfg);

/// bits -> modulate -> pulse shape -> impairment chain -> AWGN -> capture
/// -> frame. A pure function of its arguments.
Frame synthesize_frame(const DeviceProfile& profile, std::uint64_t frame_seed, const GeneratorConfig& cfg);

/// Per-frame seed for device `device` and frame `index`.
std::uint64_t frame_seed(std::uint64_t master_seed, std::size_t device, std::size_t index);

inline constexpr std::uint16_t kDatasetFormatVersion = 1;

struct DatasetManifest {
    std::vector<DeviceProfile> profiles;
    std::uint32_t frames_per_device = 0;
    GeneratorConfig generator{};
    std::uint64_t master_seed = 0;
    std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
    std::uint16_t format_version = kDatasetFormatVersion;

    std::size_t device_count() const { return profiles.size(); }
    void validate() const;
};

void write_manifest(std::ostream& out, const DatasetManifest& m);
DatasetManifest parse_manifest(std::istream& in);

struct Dataset {
    DatasetManifest manifest;
    /// Device-major, index-minor.
    std::vector<Frame> frames;

    std::size_t size() const { return frames.size(); }
    std::size_t device_count() const { return manifest.device_count(); }
};

/// Generates frames_per_device frames for every profile. Frames are
/// produced in parallel but stored in (device, index) order, so the result
/// does not depend on the thread count.
Dataset generate_dataset(const DatasetManifest& manifest);

/// Binary payload: "RFIQ", u16 version, u16 device count, u32 frames per
/// device, u32 frame length (all little-endian), then per frame 2 * length
/// little-endian float32 values followed by a u8 label.
void write_dataset_payload(std::ostream& out, const Dataset& ds);
/// Reads a payload; the returned manifest only carries the header counts.
Dataset read_dataset_payload(std::istream& in);

/// Writes `path` and its manifest at manifest_path(path).
void save_dataset(const std::string& path, const Dataset& ds);
/// Loads a payload and, when present, its sibling manifest.
Dataset load_dataset(const std::string& path);
std::string manifest_path(const std::string& dataset_path);

/// 64-bit digest of a frame's samples and label, used to order frames
/// independently of where they sit in storage.
std::uint64_t frame_key(const Frame& f);

struct DatasetSplits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Per-device stratified shuffle, then split by the given fractions. The
/// partitions are disjoint and cover the dataset exactly.
DatasetSplits split_dataset(const Dataset& ds, std::array<double, 3> fractions, std::uint64_t seed);

/// Visit order for one epoch, chunked into batches of batch_size (the last
/// one may be short). With shuffle on, the order is a permutation keyed by
/// (shuffle_seed, epoch, frame content); with shuffle off, it is `split`.
std::vector<std::vector<std::size_t>> iterate_minibatches(const Dataset& ds, std::span<const std::size_t> split,
                                                          std::size_t batch_size, std::uint64_t shuffle_seed,
                                                          std::size_t epoch, bool shuffle = true);

}  // namespace rfprint
