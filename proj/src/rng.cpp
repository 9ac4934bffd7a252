#include "oppnet/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace oppnet {

double StreamKey::exponential(std::uint64_t counter) const noexcept
{
    // 1 - u lies in (0, 1], so the log is finite.
    return -std::log1p(-uniform(counter));
}

std::size_t Rng::index(std::size_t bound)
{
    if (bound == 0) {
        throw std::invalid_argument("Rng::index: empty range");
    }
    const std::uint64_t b = bound;
    const std::uint64_t limit = max() - (max() % b + 1) % b;
    std::uint64_t x;
    do {
        x = (*this)();
    } while (x > limit);
    return static_cast<std::size_t>(x % b);
}

} // namespace oppnet
