#include "rfprint/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "rfprint/error.hpp"

namespace rfprint {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// Plans are cached per thread so repeated transforms of one size skip the
// planner lock.
const FftPlan& cached_plan(std::size_t n, FftPlan::Direction dir) {
    thread_local std::map<std::pair<std::size_t, int>, std::unique_ptr<FftPlan>> cache;
    auto& slot = cache[{n, static_cast<int>(dir)}];
    if (!slot) slot = std::make_unique<FftPlan>(n, dir);
    return *slot;
}

}  // namespace

FftPlan::FftPlan(std::size_t n, Direction dir) : n_(n) {
    if (n == 0) throw InvalidArgument("FftPlan: zero length");
    std::vector<std::complex<double>> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf,
                             dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_ == nullptr) throw Error("FftPlan: FFTW planning failed");
}

FftPlan::~FftPlan() {
    if (plan_ != nullptr) {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
}

FftPlan::FftPlan(FftPlan&& other) noexcept : n_(other.n_), plan_(other.plan_) {
    other.plan_ = nullptr;
}

FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
    if (this != &other) {
        std::swap(n_, other.n_);
        std::swap(plan_, other.plan_);
    }
    return *this;
}

void FftPlan::execute(std::span<const std::complex<double>> in,
                      std::span<std::complex<double>> out) const {
    if (in.size() != n_ || out.size() != n_) throw ShapeMismatch("FftPlan::execute: buffer size mismatch");
    // FFTW's new-array interface takes non-const input; it does not write
    // to it for out-of-place transforms.
    auto* src = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.data());
    fftw_execute_dft(static_cast<fftw_plan>(plan_), src, dst);
}

void fft_inplace(std::span<std::complex<double>> data) {
    if (data.empty()) return;
    cached_plan(data.size(), FftPlan::Direction::Forward).execute(data, data);
}

void ifft_inplace(std::span<std::complex<double>> data) {
    if (data.empty()) return;
    cached_plan(data.size(), FftPlan::Direction::Inverse).execute(data, data);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
}

}  // namespace rfprint
