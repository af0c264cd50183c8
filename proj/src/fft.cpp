#include "swcs/fft.hpp"

#include <fftw3.h>
#include <mutex>

namespace swcs {

namespace {
// The FFTW planner is not re-entrant.
std::mutex &planner_mutex()
{
  static std::mutex m;
  return m;
}
} // namespace

struct Fft2::Impl
{
  fftw_complex *buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  std::size_t len = 0;
};

Fft2::Fft2(int n)
  : n_(n)
  , impl_(std::make_unique<Impl>())
{
  if (n < 1) { throw ValidationError("Fft2: size must be positive"); }
  impl_->len = static_cast<std::size_t>(n) * n;
  std::lock_guard lock(planner_mutex());
  impl_->buf = fftw_alloc_complex(impl_->len);
  if (!impl_->buf) { throw std::bad_alloc(); }
  impl_->fwd = fftw_plan_dft_2d(n, n, impl_->buf, impl_->buf, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_2d(n, n, impl_->buf, impl_->buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft2::~Fft2()
{
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->fwd);
  fftw_destroy_plan(impl_->inv);
  fftw_free(impl_->buf);
}

std::span<Cx> Fft2::buffer() { return {reinterpret_cast<Cx *>(impl_->buf), impl_->len}; }

void Fft2::forward() { fftw_execute(impl_->fwd); }
void Fft2::inverse() { fftw_execute(impl_->inv); }

} // namespace swcs
