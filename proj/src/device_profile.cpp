#include "rfprint/device_profile.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "rfprint/error.hpp"

namespace rfprint {

void DeviceProfile::validate() const {
    if (pn_levels_dbchz.size() != pn_offsets_hz.size())
        throw InvalidArgument(name + ": phase-noise levels and offsets differ in length");
    for (std::size_t i = 0; i < pn_offsets_hz.size(); ++i) {
        if (!(pn_offsets_hz[i] > 0.0)) throw InvalidArgument(name + ": phase-noise offsets must be positive");
        if (i > 0 && !(pn_offsets_hz[i] > pn_offsets_hz[i - 1]))
            throw InvalidArgument(name + ": phase-noise offsets must be strictly increasing");
    }
    if (!(pn_sample_rate_hz > 0.0)) throw InvalidArgument(name + ": pn_sample_rate_hz must be positive");
    if (saleh_amam.has_value() != saleh_ampm.has_value())
        throw InvalidArgument(name + ": Saleh AM-AM and AM-PM must be given together");
    if (saleh_amam && !(saleh_amam->beta > 0.0)) throw InvalidArgument(name + ": Saleh AM-AM beta must be > 0");
    if (saleh_ampm && !(saleh_ampm->beta > 0.0)) throw InvalidArgument(name + ": Saleh AM-PM beta must be > 0");
    if (dac) {
        if (dac->bits < 0) throw InvalidArgument(name + ": DAC bits must be >= 1");
        if (dac->gen_oversample < 1) throw InvalidArgument(name + ": DAC gen_oversample must be >= 1");
        if (dac->clock_mod_depth < 0.0 || dac->clock_mod_depth >= 0.5)
            throw InvalidArgument(name + ": DAC clock_mod_depth must be in [0, 0.5)");
    }
}

DeviceProfile identity_profile() {
    DeviceProfile p;
    p.name = "identity";
    return p;
}

std::vector<DeviceProfile> reference_profiles() {
    struct Row {
        const char* name;
        double amp, phase, dci, dcq, aa, ba, ap, bp, l0, l1, f0, f1;
    };
    static constexpr Row kRows[] = {
        {"Dev1", 0.08, 0.1, 0.1, 0.15, 2.178, 1.12157, 4.0893, 9.2040, -60, -80, 20, 200},
        {"Dev2", 0.1, 0.09, 0.109, 0.1, 2.197, 1.16157, 4.13, 9.2540, -60, -80, 20, 200},
        {"Dev3", 0.09, 0.09, 0.1, 0.1, 2.16, 1.10157, 4.0933, 9.2840, -59.9, -80, 20, 200.9},
        {"Dev4", 0.109, 0.108, 0.1, 0.1, 2.17, 1.12157, 4.113, 9.2040, -60, -80.1, 20, 200},
        {"Dev5", 0.1, 0.099, 0.099, 0.1, 2.1587, 1.15157, 4.133, 9.2040, -60, -80, 20.1, 200},
    };
    std::vector<DeviceProfile> out;
    std::uint64_t seed = 1;
    for (const auto& r : kRows) {
        DeviceProfile p;
        p.name = r.name;
        p.iq_amp_db = r.amp;
        p.iq_phase_deg = r.phase;
        p.dc_i = r.dci;
        p.dc_q = r.dcq;
        p.saleh_amam = SalehParams{r.aa, r.ba};
        p.saleh_ampm = SalehParams{r.ap, r.bp};
        p.pn_levels_dbchz = {r.l0, r.l1};
        p.pn_offsets_hz = {r.f0, r.f1};
        p.seed = seed++;
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& text, const std::string& key, int line) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw IoError("line " + std::to_string(line) + ": bad number '" + text + "' for " + key);
    return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& key, int line) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(item, key, line));
    }
    return out;
}

SalehParams parse_pair(const std::string& text, const std::string& key, int line) {
    const auto v = parse_list(text, key, line);
    if (v.size() != 2) throw IoError("line " + std::to_string(line) + ": " + key + " needs two values");
    return {v[0], v[1]};
}

DacConfig& dac_of(DeviceProfile& p) {
    if (!p.dac) p.dac = DacConfig{};
    return *p.dac;
}

void assign(DeviceProfile& p, const std::string& key, const std::string& value, int line) {
    auto num = [&] { return parse_double(value, key, line); };
    if (key == "iq_amp_db") p.iq_amp_db = num();
    else if (key == "iq_phase_deg") p.iq_phase_deg = num();
    else if (key == "dc_i") p.dc_i = num();
    else if (key == "dc_q") p.dc_q = num();
    else if (key == "pa") {
        if (value != "linear") throw IoError("line " + std::to_string(line) + ": pa must be 'linear'");
        p.saleh_amam.reset();
        p.saleh_ampm.reset();
    } else if (key == "saleh_amam") p.saleh_amam = parse_pair(value, key, line);
    else if (key == "saleh_ampm") p.saleh_ampm = parse_pair(value, key, line);
    else if (key == "pn_levels_dbchz") p.pn_levels_dbchz = parse_list(value, key, line);
    else if (key == "pn_offsets_hz") p.pn_offsets_hz = parse_list(value, key, line);
    else if (key == "pn_sample_rate_hz") p.pn_sample_rate_hz = num();
    else if (key == "mixer_alpha1") p.mixer_alpha1 = num();
    else if (key == "mixer_alpha2") p.mixer_alpha2 = num();
    else if (key == "cfo_hz") p.cfo_hz = num();
    else if (key == "seed") {
        const auto res = std::from_chars(value.data(), value.data() + value.size(), p.seed);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size())
            throw IoError("line " + std::to_string(line) + ": bad seed '" + value + "'");
    } else if (key == "dac_bits") dac_of(p).bits = static_cast<int>(num());
    else if (key == "dac_gen_oversample") dac_of(p).gen_oversample = static_cast<int>(num());
    else if (key == "dac_inl_coeffs") dac_of(p).inl_coeffs = parse_list(value, key, line);
    else if (key == "dac_clock_mod_depth") dac_of(p).clock_mod_depth = num();
    else if (key == "dac_clock_mod_freq_hz") dac_of(p).clock_mod_freq_hz = num();
    else throw IoError("line " + std::to_string(line) + ": unknown key '" + key + "'");
}

void write_list(std::ostream& out, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
}

}  // namespace

std::vector<DeviceProfile> parse_profiles(std::istream& in) {
    std::vector<DeviceProfile> out;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const auto text = trim(raw);
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') throw IoError("line " + std::to_string(line) + ": unterminated section");
            DeviceProfile p;
            p.name = trim(std::string_view(text).substr(1, text.size() - 2));
            out.push_back(std::move(p));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw IoError("line " + std::to_string(line) + ": expected key = value");
        if (out.empty()) throw IoError("line " + std::to_string(line) + ": key outside a [profile] section");
        assign(out.back(), trim(std::string_view(text).substr(0, eq)),
               trim(std::string_view(text).substr(eq + 1)), line);
    }
    for (const auto& p : out) p.validate();
    return out;
}

std::vector<DeviceProfile> load_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profiles file '" + path + "'");
    auto profiles = parse_profiles(in);
    if (profiles.empty()) throw IoError("no profiles in '" + path + "'");
    return profiles;
}

void write_profiles(std::ostream& out, const std::vector<DeviceProfile>& profiles) {
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& p = profiles[i];
        if (i) out << '\n';
        out << '[' << p.name << "]\n";
        out << "iq_amp_db = " << p.iq_amp_db << '\n';
        out << "iq_phase_deg = " << p.iq_phase_deg << '\n';
        out << "dc_i = " << p.dc_i << '\n';
        out << "dc_q = " << p.dc_q << '\n';
        if (p.saleh_amam && p.saleh_ampm) {
            out << "saleh_amam = " << p.saleh_amam->alpha << ", " << p.saleh_amam->beta << '\n';
            out << "saleh_ampm = " << p.saleh_ampm->alpha << ", " << p.saleh_ampm->beta << '\n';
        } else {
            out << "pa = linear\n";
        }
        out << "pn_levels_dbchz = ";
        write_list(out, p.pn_levels_dbchz);
        out << "\npn_offsets_hz = ";
        write_list(out, p.pn_offsets_hz);
        out << "\npn_sample_rate_hz = " << p.pn_sample_rate_hz << '\n';
        out << "mixer_alpha1 = " << p.mixer_alpha1 << '\n';
        out << "mixer_alpha2 = " << p.mixer_alpha2 << '\n';
        out << "cfo_hz = " << p.cfo_hz << '\n';
        out << "seed = " << p.seed << '\n';
        if (p.dac) {
            out << "dac_bits = " << p.dac->bits << '\n';
            out << "dac_gen_oversample = " << p.dac->gen_oversample << '\n';
            out << "dac_inl_coeffs = ";
            write_list(out, p.dac->inl_coeffs);
            out << "\ndac_clock_mod_depth = " << p.dac->clock_mod_depth << '\n';
            out << "dac_clock_mod_freq_hz = " << p.dac->clock_mod_freq_hz << '\n';
        }
    }
    out.precision(old_precision);
}

void save_profiles(const std::string& path, const std::vector<DeviceProfile>& profiles) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write profiles file '" + path + "'");
    write_profiles(out, profiles);
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace rfprint
