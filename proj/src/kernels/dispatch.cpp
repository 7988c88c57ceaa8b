#include <cstdlib>
#include <string>

#include "cogscreen/kernels/kernels.hpp"

namespace cogscreen::kernels {

bool avx2_supported() {
#if defined(COGSCREEN_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") != 0;
    }();
    return supported;
#else
    return false;
#endif
}

Isa active_isa() {
    static const Isa isa = [] {
        if (const char* env = std::getenv("COGSCREEN_ISA")) {
            if (std::string(env) == "scalar") return Isa::scalar;
        }
        return avx2_supported() ? Isa::avx2 : Isa::scalar;
    }();
    return isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable& table_for(Isa isa) {
#if defined(COGSCREEN_HAVE_AVX2)
    if (isa == Isa::avx2 && avx2_supported()) return avx2_table();
#endif
    (void)isa;
    return scalar_table();
}

const KernelTable& active() {
    static const KernelTable& table = table_for(active_isa());
    return table;
}

}  // namespace cogscreen::kernels
