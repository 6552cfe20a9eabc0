#include "biouncert/random.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace biouncert {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t h = mix64(root);
    for (std::uint64_t p : path)
        h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

std::uint64_t seed_from_env(std::uint64_t fallback)
{
    const char* env = std::getenv("BIOUNCERT_SEED");
    if (env == nullptr || *env == '\0')
        return fallback;
    std::uint64_t value = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec != std::errc() || ptr != end)
        return fallback;
    return value;
}

} // namespace biouncert
