#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace rfprint {

using ComplexSample = std::complex<double>;

/// Complex-baseband sample sequence tagged with its sample rate.
struct Waveform {
    std::vector<ComplexSample> samples;
    double sample_rate_hz = 1.0;

    Waveform() = default;
    Waveform(std::vector<ComplexSample> s, double rate)
        : samples(std::move(s)), sample_rate_hz(rate) {}

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    ComplexSample& operator[](std::size_t i) { return samples[i]; }
    const ComplexSample& operator[](std::size_t i) const { return samples[i]; }
};

/// Mean of |s|^2 over the waveform; 0 for an empty waveform.
double mean_power(const Waveform& w);

/// True when every component of every sample is finite.
bool all_finite(const Waveform& w);

}  // namespace rfprint
