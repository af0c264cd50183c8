#pragma once

#include "core.hpp"

#include <memory>

namespace swcs {

/// Unnormalised n x n complex FFT (row-major, forward sign -1). Plans are created with
/// FFTW_ESTIMATE so results do not depend on timing; one instance per thread.
class Fft2
{
public:
  explicit Fft2(int n);
  ~Fft2();
  Fft2(Fft2 const &) = delete;
  Fft2 &operator=(Fft2 const &) = delete;

  int size() const { return n_; }
  std::span<Cx> buffer();

  void forward();
  void inverse();

private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

} // namespace swcs
