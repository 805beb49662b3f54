#pragma once

#include <complex>
#include <memory>

namespace mixedlattice::detail {

/// Unnormalized length-n FFTW transform, in place:
/// forward X_k = sum_j x_j e^{-2 pi i jk/n}, backward with e^{+2 pi i jk/n}.
class PlainFFT {
 public:
  explicit PlainFFT(int n);
  ~PlainFFT();
  PlainFFT(const PlainFFT&) = delete;
  PlainFFT& operator=(const PlainFFT&) = delete;

  void forward(std::complex<double>* data) const;
  void backward(std::complex<double>* data) const;

 private:
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace mixedlattice::detail
