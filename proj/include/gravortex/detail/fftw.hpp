#pragma once

// Thin RAII layer over FFTW3. Plans are created once per grid (under a
// process-wide lock, since FFTW's planner is not reentrant) and executed
// with the new-array interface so that a single plan can serve concurrent
// callers.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <new>
#include <span>

namespace gravortex::detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n) : size_(n) {
    data_ = static_cast<T*>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n)));
    if (data_ == nullptr) throw std::bad_alloc();
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  FftwBuffer(FftwBuffer&& o) noexcept : data_(o.data_), size_(o.size_) {
    o.data_ = nullptr;
    o.size_ = 0;
  }
  ~FftwBuffer() {
    if (data_ != nullptr) fftw_free(data_);
  }

  T* data() { return data_; }
  const T* data() const { return data_; }
  std::size_t size() const { return size_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

 private:
  T* data_ = nullptr;
  std::size_t size_ = 0;
};

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::shared_ptr<fftw_plan_s>;

inline fftw_complex* as_fftw(std::complex<double>* p) {
  return reinterpret_cast<fftw_complex*>(p);
}

/// Forward/backward real transforms of `howmany` contiguous rows, each an
/// n0 x n1 (2-D) or n1 (1-D, n0 == 0) array. Unnormalized.
class RealFft {
 public:
  RealFft() = default;

  static RealFft two_d(int n0, int n1) { return RealFft(n0, n1, 1); }
  static RealFft rows(int n, int howmany) { return RealFft(0, n, howmany); }

  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    FftwBuffer<double> a(real_size_);
    FftwBuffer<std::complex<double>> b(complex_size_);
    for (std::size_t i = 0; i < real_size_; ++i) a[i] = in[i];
    fftw_execute_dft_r2c(forward_.get(), a.data(), as_fftw(b.data()));
    for (std::size_t i = 0; i < complex_size_; ++i) out[i] = b[i];
  }

  void backward(std::span<const std::complex<double>> in, std::span<double> out) const {
    FftwBuffer<std::complex<double>> a(complex_size_);
    FftwBuffer<double> b(real_size_);
    for (std::size_t i = 0; i < complex_size_; ++i) a[i] = in[i];
    fftw_execute_dft_c2r(backward_.get(), as_fftw(a.data()), b.data());
    for (std::size_t i = 0; i < real_size_; ++i) out[i] = b[i];
  }

 private:
  RealFft(int n0, int n1, int howmany) {
    const std::size_t half = static_cast<std::size_t>(n1 / 2 + 1);
    if (n0 > 0) {
      real_size_ = static_cast<std::size_t>(n0) * n1;
      complex_size_ = static_cast<std::size_t>(n0) * half;
    } else {
      real_size_ = static_cast<std::size_t>(howmany) * n1;
      complex_size_ = static_cast<std::size_t>(howmany) * half;
    }
    FftwBuffer<double> a(real_size_);
    FftwBuffer<std::complex<double>> b(complex_size_);
    std::lock_guard lock(fftw_planner_mutex());
    if (n0 > 0) {
      forward_.reset(fftw_plan_dft_r2c_2d(n0, n1, a.data(), as_fftw(b.data()), FFTW_ESTIMATE),
                     PlanDeleter{});
      backward_.reset(fftw_plan_dft_c2r_2d(n0, n1, as_fftw(b.data()), a.data(), FFTW_ESTIMATE),
                      PlanDeleter{});
    } else {
      const int n[] = {n1};
      const int hn = static_cast<int>(half);
      forward_.reset(fftw_plan_many_dft_r2c(1, n, howmany, a.data(), nullptr, 1, n1,
                                            as_fftw(b.data()), nullptr, 1, hn, FFTW_ESTIMATE),
                     PlanDeleter{});
      backward_.reset(fftw_plan_many_dft_c2r(1, n, howmany, as_fftw(b.data()), nullptr, 1, hn,
                                             a.data(), nullptr, 1, n1, FFTW_ESTIMATE),
                      PlanDeleter{});
    }
  }

  Plan forward_;
  Plan backward_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
};

/// Unnormalized complex 2-D transform, used for spectral resampling.
class ComplexFft2d {
 public:
  ComplexFft2d(int n0, int n1) : size_(static_cast<std::size_t>(n0) * n1) {
    FftwBuffer<std::complex<double>> a(size_), b(size_);
    std::lock_guard lock(fftw_planner_mutex());
    forward_.reset(fftw_plan_dft_2d(n0, n1, as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD,
                                    FFTW_ESTIMATE),
                   PlanDeleter{});
    backward_.reset(fftw_plan_dft_2d(n0, n1, as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD,
                                     FFTW_ESTIMATE),
                    PlanDeleter{});
  }

  void forward(std::span<std::complex<double>> data) const { run(forward_, data); }
  void backward(std::span<std::complex<double>> data) const { run(backward_, data); }

 private:
  void run(const Plan& plan, std::span<std::complex<double>> data) const {
    FftwBuffer<std::complex<double>> a(size_), b(size_);
    for (std::size_t i = 0; i < size_; ++i) a[i] = data[i];
    fftw_execute_dft(plan.get(), as_fftw(a.data()), as_fftw(b.data()));
    for (std::size_t i = 0; i < size_; ++i) data[i] = b[i];
  }

  std::size_t size_;
  Plan forward_;
  Plan backward_;
};

}  // namespace gravortex::detail
