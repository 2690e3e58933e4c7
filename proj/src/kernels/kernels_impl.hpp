#pragma once

#include "mia/kernels.hpp"

namespace mia::kernels {

#if defined(__x86_64__) || defined(_M_X64)
#define MIA_HAVE_AVX2_KERNELS 1
namespace avx2 {
void axpy(float a, const float* x, float* y, std::size_t n);
float dot(const float* x, const float* y, std::size_t n);
float sum(const float* x, std::size_t n);
void scale(float a, float* y, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define MIA_HAVE_NEON_KERNELS 1
namespace neon {
void axpy(float a, const float* x, float* y, std::size_t n);
float dot(const float* x, const float* y, std::size_t n);
float sum(const float* x, std::size_t n);
void scale(float a, float* y, std::size_t n);
}  // namespace neon
#endif

}  // namespace mia::kernels
