#include "catderiv/kernels.hpp"

#include <algorithm>

namespace catderiv {

template <class T>
void correlate_direct(const std::vector<T>& kappa, const T* d, std::size_t n, T* out) {
    const std::size_t K = kappa.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t mmax = std::min(K, n - i);
        T acc{};
        for (std::size_t m = 0; m < mmax; ++m) acc += kappa[m] * d[i + m];
        out[i] = acc;
    }
}

template void correlate_direct<double>(const std::vector<double>&, const double*, std::size_t, double*);
template void correlate_direct<std::complex<double>>(const std::vector<std::complex<double>>&,
                                                     const std::complex<double>*, std::size_t,
                                                     std::complex<double>*);

}  // namespace catderiv
