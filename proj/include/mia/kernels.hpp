#pragma once

// Inner-loop arithmetic shared by the layers. Every float kernel has a
// portable scalar reference and, where the CPU supports it, a SIMD variant
// (AVX2+FMA on x86-64, NEON on AArch64). The variant is picked once at
// startup; MIA_ISA=scalar|avx2|neon in the environment overrides it.
// Double-precision calls always take the scalar path.

#include <cstddef>
#include <string_view>

namespace mia::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);
Isa best_isa();
Isa active_isa();
/// Throws std::invalid_argument if the ISA is unavailable on this CPU.
void set_isa(Isa isa);

struct KernelTable {
    void (*axpy)(float a, const float* x, float* y, std::size_t n);
    float (*dot)(const float* x, const float* y, std::size_t n);
    float (*sum)(const float* x, std::size_t n);
    void (*scale)(float a, float* y, std::size_t n);
};

/// Table for a specific ISA, used by the equivalence tests.
const KernelTable& table(Isa isa);
const KernelTable& active();

namespace scalar {
void axpy(float a, const float* x, float* y, std::size_t n);
float dot(const float* x, const float* y, std::size_t n);
float sum(const float* x, std::size_t n);
void scale(float a, float* y, std::size_t n);
}  // namespace scalar

// y += a * x
inline void axpy(float a, const float* x, float* y, std::size_t n) { active().axpy(a, x, y, n); }
inline float dot(const float* x, const float* y, std::size_t n) { return active().dot(x, y, n); }
inline float sum(const float* x, std::size_t n) { return active().sum(x, n); }
inline void scale(float a, float* y, std::size_t n) { active().scale(a, y, n); }

inline void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}
inline double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}
inline double sum(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}
inline void scale(double a, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= a;
}

}  // namespace mia::kernels
