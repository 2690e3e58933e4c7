#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace mia::kernels {

namespace {

constexpr KernelTable kScalar{scalar::axpy, scalar::dot, scalar::sum, scalar::scale};
#ifdef MIA_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2{avx2::axpy, avx2::dot, avx2::sum, avx2::scale};
#endif
#ifdef MIA_HAVE_NEON_KERNELS
constexpr KernelTable kNeon{neon::axpy, neon::dot, neon::sum, neon::scale};
#endif

Isa initial_isa() {
    if (const char* env = std::getenv("MIA_ISA")) {
        const std::string s(env);
        if (s == "scalar") return Isa::scalar;
        if (s == "avx2" && isa_available(Isa::avx2)) return Isa::avx2;
        if (s == "neon" && isa_available(Isa::neon)) return Isa::neon;
    }
    return best_isa();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> ptr{&table(initial_isa())};
    return ptr;
}

std::atomic<Isa>& current_isa() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#ifdef MIA_HAVE_AVX2_KERNELS
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::neon:
#ifdef MIA_HAVE_NEON_KERNELS
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa best_isa() {
    if (isa_available(Isa::avx2)) return Isa::avx2;
    if (isa_available(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

const KernelTable& table(Isa isa) {
    if (!isa_available(isa)) {
        throw std::invalid_argument("kernel ISA not available: " + std::string(isa_name(isa)));
    }
    switch (isa) {
#ifdef MIA_HAVE_AVX2_KERNELS
        case Isa::avx2: return kAvx2;
#endif
#ifdef MIA_HAVE_NEON_KERNELS
        case Isa::neon: return kNeon;
#endif
        default: return kScalar;
    }
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

Isa active_isa() { return current_isa().load(); }

void set_isa(Isa isa) {
    const KernelTable& t = table(isa);
    current().store(&t);
    current_isa().store(isa);
}

}  // namespace mia::kernels
