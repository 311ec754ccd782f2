#include "rfprint/waveform.hpp"

#include <cmath>

namespace rfprint {

double mean_power(const Waveform& w) {
    if (w.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : w.samples) acc += std::norm(s);
    return acc / static_cast<double>(w.size());
}

bool all_finite(const Waveform& w) {
    for (const auto& s : w.samples)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
    return true;
}

}  // namespace rfprint
