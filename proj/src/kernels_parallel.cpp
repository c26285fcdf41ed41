#include "catderiv/kernels.hpp"

#include "catderiv/fft.hpp"

#include <algorithm>
#include <numeric>

namespace catderiv {

using cplx = std::complex<double>;

template <class T>
CorrelationBank<T>::CorrelationBank(std::vector<std::vector<T>> kernels, std::size_t n)
    : kernels_(std::move(kernels)), n_(n) {
    std::size_t kmax = 1;
    for (const auto& k : kernels_) kmax = std::max(kmax, k.size());
    padded_ = fft::next_pow2(n_ + kmax);
    const std::size_t P = padded_;

    // Correlation with kappa is convolution with kappa reversed mod P, whose
    // spectrum is the unnormalized backward transform of kappa.
    spectra_.resize(kernels_.size());
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < kernels_.size(); ++k) {
        const auto& kap = kernels_[k];
        if constexpr (std::is_same_v<T, double>) {
            std::vector<double> buf(P, 0.0);
            std::copy(kap.begin(), kap.end(), buf.begin());
            std::vector<cplx> spec(P / 2 + 1);
            fft::forward_real(buf.data(), spec.data(), P);
            for (auto& v : spec) v = std::conj(v);
            spectra_[k] = std::move(spec);
        } else {
            std::vector<cplx> buf(P, cplx{});
            std::copy(kap.begin(), kap.end(), buf.begin());
            std::vector<cplx> spec(P);
            fft::transform(buf.data(), spec.data(), P, +1);
            spectra_[k] = std::move(spec);
        }
    }
}

template <class T>
void CorrelationBank<T>::apply(const std::vector<T>& d, std::vector<T>& out, Backend backend) const {
    std::vector<int> all(kernels_.size());
    std::iota(all.begin(), all.end(), 0);
    apply_subset(d, all, out, backend);
}

template <class T>
void CorrelationBank<T>::apply_subset(const std::vector<T>& d, const std::vector<int>& which, std::vector<T>& out,
                                      Backend backend) const {
    out.resize(kernels_.size() * n_);
    const long nw = static_cast<long>(which.size());
    if (backend == Backend::Serial) {
        for (long w = 0; w < nw; ++w) {
            const auto k = static_cast<std::size_t>(which[static_cast<std::size_t>(w)]);
            correlate_direct(kernels_[k], d.data(), n_, out.data() + k * n_);
        }
        return;
    }

    const std::size_t P = padded_;
    const double inv = 1.0 / static_cast<double>(P);
    if constexpr (std::is_same_v<T, double>) {
        std::vector<double> buf(P, 0.0);
        std::copy(d.begin(), d.begin() + static_cast<long>(n_), buf.begin());
        std::vector<cplx> dspec(P / 2 + 1);
        fft::forward_real(buf.data(), dspec.data(), P);
#pragma omp parallel
        {
            std::vector<cplx> prod(P / 2 + 1);
            std::vector<double> res(P);
#pragma omp for schedule(static)
            for (long w = 0; w < nw; ++w) {
                const auto k = static_cast<std::size_t>(which[static_cast<std::size_t>(w)]);
                const auto& s = spectra_[k];
                for (std::size_t f = 0; f < prod.size(); ++f) prod[f] = dspec[f] * s[f];
                fft::inverse_real(prod.data(), res.data(), P);
                double* o = out.data() + k * n_;
                for (std::size_t i = 0; i < n_; ++i) o[i] = res[i] * inv;
            }
        }
    } else {
        std::vector<cplx> buf(P, cplx{});
        std::copy(d.begin(), d.begin() + static_cast<long>(n_), buf.begin());
        std::vector<cplx> dspec(P);
        fft::transform(buf.data(), dspec.data(), P, -1);
#pragma omp parallel
        {
            std::vector<cplx> prod(P), res(P);
#pragma omp for schedule(static)
            for (long w = 0; w < nw; ++w) {
                const auto k = static_cast<std::size_t>(which[static_cast<std::size_t>(w)]);
                const auto& s = spectra_[k];
                for (std::size_t f = 0; f < P; ++f) prod[f] = dspec[f] * s[f];
                fft::transform(prod.data(), res.data(), P, +1);
                cplx* o = out.data() + k * n_;
                for (std::size_t i = 0; i < n_; ++i) o[i] = res[i] * inv;
            }
        }
    }
}

template class CorrelationBank<double>;
template class CorrelationBank<std::complex<double>>;

}  // namespace catderiv
