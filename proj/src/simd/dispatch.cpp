#include "afem/simd.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

namespace afem::simd {

namespace {

constexpr KernelTable kGeneric{Isa::Generic,        generic::dot,          generic::axpy,
                               generic::xpby,       generic::mul,          generic::max_abs_diff,
                               generic::csr_spmv};

#if defined(AFEM_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2,         avx2::dot,          avx2::axpy,    avx2::xpby,
                            avx2::mul,         avx2::max_abs_diff, avx2::csr_spmv};
#endif

#if defined(AFEM_HAVE_NEON)
constexpr KernelTable kNeon{Isa::Neon,         neon::dot,          neon::axpy,    neon::xpby,
                            neon::mul,         neon::max_abs_diff, neon::csr_spmv};
#endif

const KernelTable& select() {
    if (const char* forced = std::getenv("FRACTURE_AFEM_SIMD")) {
        const std::string name(forced);
        for (Isa isa : {Isa::Generic, Isa::Avx2, Isa::Neon}) {
            if (name == isa_name(isa)) {
                if (isa_available(isa)) return kernels_for(isa);
                spdlog::warn("FRACTURE_AFEM_SIMD={} not available on this CPU, using best match", name);
            }
        }
    }
    if (isa_available(Isa::Avx2)) return kernels_for(Isa::Avx2);
    if (isa_available(Isa::Neon)) return kernels_for(Isa::Neon);
    return kGeneric;
}

} // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::Generic: return "generic";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
    case Isa::Generic: return true;
    case Isa::Avx2:
#if defined(AFEM_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::Neon:
#if defined(AFEM_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& kernels_for(Isa isa) {
    if (!isa_available(isa)) {
        throw std::invalid_argument("kernel set '" + std::string(isa_name(isa)) + "' unavailable");
    }
    switch (isa) {
#if defined(AFEM_HAVE_AVX2)
    case Isa::Avx2: return kAvx2;
#endif
#if defined(AFEM_HAVE_NEON)
    case Isa::Neon: return kNeon;
#endif
    default: return kGeneric;
    }
}

const KernelTable& kernels() {
    static const KernelTable& active = select();
    return active;
}

} // namespace afem::simd
