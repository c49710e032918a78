// Thin RAII wrapper over FFTW in-place complex transforms.
//
// Convention: forward() is the unnormalized e^{-i...} sum, backward() the
// unnormalized e^{+i...} sum. A forward/backward round trip multiplies by the
// transform size; callers apply the 1/size factor once.
#pragma once

#include <complex>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace qpkr {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// In-place 1D or 2D (row-major) complex FFT of fixed shape.
///
/// Plans are built with FFTW_ESTIMATE | FFTW_UNALIGNED so the chosen algorithm
/// never depends on timing or buffer alignment; identical inputs give
/// bit-identical outputs. Planning is serialized (FFTW's planner is not
/// thread-safe); execution on distinct objects is.
class Fft {
  public:
    explicit Fft(int n) : Fft(std::vector<int>{n}) {}
    Fft(int rows, int cols) : Fft(std::vector<int>{rows, cols}) {}

    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;
    Fft(Fft&& o) noexcept : size_(o.size_), fwd_(o.fwd_), bwd_(o.bwd_) { o.fwd_ = o.bwd_ = nullptr; }
    Fft& operator=(Fft&&) = delete;

    ~Fft() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        if (fwd_) fftw_destroy_plan(fwd_);
        if (bwd_) fftw_destroy_plan(bwd_);
    }

    std::size_t size() const noexcept { return size_; }

    void forward(std::span<std::complex<double>> data) const { run(fwd_, data); }
    void backward(std::span<std::complex<double>> data) const { run(bwd_, data); }

  private:
    explicit Fft(std::vector<int> dims) {
        size_ = 1;
        for (int d : dims) {
            if (d <= 0) throw std::invalid_argument("FFT dimension must be positive");
            size_ *= static_cast<std::size_t>(d);
        }
        std::vector<std::complex<double>> scratch(size_);
        auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::lock_guard lock(detail::fftw_planner_mutex());
        const int rank = static_cast<int>(dims.size());
        fwd_ = fftw_plan_dft(rank, dims.data(), p, p, FFTW_FORWARD, flags);
        bwd_ = fftw_plan_dft(rank, dims.data(), p, p, FFTW_BACKWARD, flags);
        if (!fwd_ || !bwd_) throw std::runtime_error("FFTW planning failed");
    }

    void run(fftw_plan plan, std::span<std::complex<double>> data) const {
        if (data.size() != size_) throw std::length_error("FFT length mismatch");
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(plan, p, p);
    }

    std::size_t size_ = 0;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

}  // namespace qpkr
