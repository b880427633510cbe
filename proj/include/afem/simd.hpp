#pragma once

// Vector kernels behind the sparse solver. Every kernel has a scalar
// reference in simd::generic; wider variants live in simd::avx2 / simd::neon
// and are selected once per process from CPU capabilities.
//
// FRACTURE_AFEM_SIMD=generic|avx2|neon forces a specific table.

#include <cstddef>
#include <span>
#include <string_view>

namespace afem::simd {

enum class Isa { Generic, Avx2, Neon };

std::string_view isa_name(Isa isa);

using DotFn = double (*)(const double* x, const double* y, std::size_t n);
using AxpyFn = void (*)(double a, const double* x, double* y, std::size_t n);
using XpbyFn = void (*)(const double* x, double b, double* y, std::size_t n);
using MulFn = void (*)(const double* x, const double* y, double* z, std::size_t n);
using MaxAbsDiffFn = double (*)(const double* x, const double* y, std::size_t n);
using CsrSpmvFn = void (*)(const int* row_ptr, const int* cols, const double* vals,
                           const double* x, double* y, std::size_t row_begin,
                           std::size_t row_end);

struct KernelTable {
    Isa isa;
    DotFn dot;                 // sum x_i y_i
    AxpyFn axpy;               // y += a x
    XpbyFn xpby;               // y = x + b y
    MulFn mul;                 // z = x .* y
    MaxAbsDiffFn max_abs_diff; // max |x_i - y_i|
    CsrSpmvFn csr_spmv;        // y[r] = A[r,:] x for r in [row_begin, row_end)
};

bool isa_available(Isa isa);

/// Table for a specific ISA; throws std::invalid_argument if this CPU or
/// build cannot run it.
const KernelTable& kernels_for(Isa isa);

/// Process-wide active table.
const KernelTable& kernels();

namespace generic {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void xpby(const double* x, double b, double* y, std::size_t n);
void mul(const double* x, const double* y, double* z, std::size_t n);
double max_abs_diff(const double* x, const double* y, std::size_t n);
void csr_spmv(const int* row_ptr, const int* cols, const double* vals, const double* x, double* y,
              std::size_t row_begin, std::size_t row_end);
} // namespace generic

#if defined(__x86_64__) || defined(_M_X64)
#define AFEM_HAVE_AVX2 1
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void xpby(const double* x, double b, double* y, std::size_t n);
void mul(const double* x, const double* y, double* z, std::size_t n);
double max_abs_diff(const double* x, const double* y, std::size_t n);
void csr_spmv(const int* row_ptr, const int* cols, const double* vals, const double* x, double* y,
              std::size_t row_begin, std::size_t row_end);
} // namespace avx2
#endif

#if defined(__aarch64__)
#define AFEM_HAVE_NEON 1
namespace neon {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void xpby(const double* x, double b, double* y, std::size_t n);
void mul(const double* x, const double* y, double* z, std::size_t n);
double max_abs_diff(const double* x, const double* y, std::size_t n);
void csr_spmv(const int* row_ptr, const int* cols, const double* vals, const double* x, double* y,
              std::size_t row_begin, std::size_t row_end);
} // namespace neon
#endif

// Span helpers over the active table.

inline double dot(std::span<const double> x, std::span<const double> y) {
    return kernels().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    kernels().axpy(a, x.data(), y.data(), x.size());
}

inline void xpby(std::span<const double> x, double b, std::span<double> y) {
    kernels().xpby(x.data(), b, y.data(), x.size());
}

inline void mul(std::span<const double> x, std::span<const double> y, std::span<double> z) {
    kernels().mul(x.data(), y.data(), z.data(), x.size());
}

inline double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    return kernels().max_abs_diff(x.data(), y.data(), x.size());
}

} // namespace afem::simd
