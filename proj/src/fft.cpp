#include "catderiv/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace catderiv::fft {

namespace {

// Plans are created once per (kind, n) with FFTW_ESTIMATE so that the chosen
// algorithm does not depend on timing; FFTW_UNALIGNED lets any buffer be fed
// to the new-array execute functions.
enum class Kind { R2C, C2R, Forward, Backward };

std::mutex g_mutex;
std::map<std::tuple<Kind, std::size_t>, fftw_plan> g_plans;

fftw_plan get_plan(Kind kind, std::size_t n) {
    std::lock_guard<std::mutex> lock(g_mutex);
    auto key = std::make_tuple(kind, n);
    auto it = g_plans.find(key);
    if (it != g_plans.end()) return it->second;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int len = static_cast<int>(n);
    std::vector<double> r(n);
    std::vector<cplx> c(n), c2(n);
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    auto* cp2 = reinterpret_cast<fftw_complex*>(c2.data());
    fftw_plan p = nullptr;
    switch (kind) {
        case Kind::R2C: p = fftw_plan_dft_r2c_1d(len, r.data(), cp, flags); break;
        case Kind::C2R: p = fftw_plan_dft_c2r_1d(len, cp, r.data(), flags); break;
        case Kind::Forward: p = fftw_plan_dft_1d(len, cp, cp2, FFTW_FORWARD, flags); break;
        case Kind::Backward: p = fftw_plan_dft_1d(len, cp, cp2, FFTW_BACKWARD, flags); break;
    }
    g_plans.emplace(key, p);
    return p;
}

}  // namespace

void forward_real(const double* in, cplx* out, std::size_t n) {
    fftw_execute_dft_r2c(get_plan(Kind::R2C, n), const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void inverse_real(const cplx* in, double* out, std::size_t n) {
    // c2r overwrites its input
    thread_local std::vector<cplx> scratch;
    scratch.assign(in, in + n / 2 + 1);
    fftw_execute_dft_c2r(get_plan(Kind::C2R, n), reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

void transform(const cplx* in, cplx* out, std::size_t n, int sign) {
    fftw_plan p = get_plan(sign < 0 ? Kind::Forward : Kind::Backward, n);
    if (in == out) {  // plans are out-of-place
        thread_local std::vector<cplx> scratch;
        scratch.assign(in, in + n);
        fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(scratch.data()), reinterpret_cast<fftw_complex*>(out));
    } else {
        fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace catderiv::fft
