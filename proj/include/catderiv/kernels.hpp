#pragma once

#include <complex>
#include <cstddef>
#include <type_traits>
#include <vector>

namespace catderiv {

/// Serial keeps the direct O(n K) sums as a reference; Parallel uses padded
/// transforms with OpenMP across kernels.
enum class Backend { Serial, Parallel };

/// out[i] = sum_m kappa[m] d[i+m] for i < n, d taken as zero past n.
template <class T>
void correlate_direct(const std::vector<T>& kappa, const T* d, std::size_t n, T* out);

/// A fixed family of correlation kernels applied to many signals of length n.
/// Output is laid out kernel-major: out[k * n + i].
template <class T>
class CorrelationBank {
public:
    static_assert(std::is_same_v<T, double> || std::is_same_v<T, std::complex<double>>);

    CorrelationBank() = default;
    CorrelationBank(std::vector<std::vector<T>> kernels, std::size_t n);

    std::size_t size() const noexcept { return kernels_.size(); }
    std::size_t signal_length() const noexcept { return n_; }
    std::size_t padded_length() const noexcept { return padded_; }
    const std::vector<T>& kernel(std::size_t k) const { return kernels_[k]; }

    /// All kernels.
    void apply(const std::vector<T>& d, std::vector<T>& out, Backend backend) const;

    /// Only the kernels listed in `which`; out[k * n + i] is written for those k.
    void apply_subset(const std::vector<T>& d, const std::vector<int>& which, std::vector<T>& out,
                      Backend backend) const;

private:
    std::vector<std::vector<T>> kernels_;
    std::size_t n_ = 0;
    std::size_t padded_ = 0;
    std::vector<std::vector<std::complex<double>>> spectra_;
};

}  // namespace catderiv
