#include "shroud/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace shroud::kernels {

const KernelTable* avx2_table_impl() noexcept;

const KernelTable* avx2_table() noexcept
{
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? avx2_table_impl() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() noexcept
{
    static const KernelTable& chosen = [&]() -> const KernelTable& {
        const char* forced = std::getenv("SHROUD_SIMD");
        if (forced && std::string_view(forced) == "scalar") return scalar_table();
        if (const KernelTable* t = avx2_table()) return *t;
        return scalar_table();
    }();
    return chosen;
}

} // namespace shroud::kernels
