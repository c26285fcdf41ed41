#pragma once

#include <complex>
#include <cstddef>

namespace catderiv::fft {

using cplx = std::complex<double>;

/// Real-to-complex forward transform of length n; writes n/2+1 bins.
void forward_real(const double* in, cplx* out, std::size_t n);

/// Complex-to-real inverse of length n from n/2+1 bins, unnormalized.
/// The input is left untouched.
void inverse_real(const cplx* in, double* out, std::size_t n);

/// Complex transform of length n; sign -1 forward, +1 inverse, unnormalized.
void transform(const cplx* in, cplx* out, std::size_t n, int sign);

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

}  // namespace catderiv::fft
