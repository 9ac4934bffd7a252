#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <vector>

namespace oppnet {

// Counter-based randomness. Every random quantity in the simulator is a pure
// function of (root seed, named path of integers, counter), so results do not
// depend on evaluation order or thread scheduling.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Named substreams hanging off the root seed.
enum class Stream : std::uint64_t {
    Topology = 1,
    Pairs = 2,
    Fading = 3,
    Selection = 4,
    Snapshot = 5,
    Bootstrap = 6,
    GridSizing = 7,
};

class StreamKey {
public:
    constexpr StreamKey() noexcept = default;
    constexpr explicit StreamKey(std::uint64_t seed) noexcept : state_(splitmix64(seed)) {}

    [[nodiscard]] constexpr StreamKey child(std::uint64_t word) const noexcept
    {
        StreamKey k;
        k.state_ = splitmix64(state_ ^ splitmix64(word + 0x632be59bd9b4e019ULL));
        return k;
    }
    [[nodiscard]] constexpr StreamKey child(Stream s) const noexcept
    {
        return child(static_cast<std::uint64_t>(s));
    }
    [[nodiscard]] StreamKey child(std::initializer_list<std::uint64_t> words) const noexcept
    {
        StreamKey k = *this;
        for (auto w : words) {
            k = k.child(w);
        }
        return k;
    }

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept
    {
        return splitmix64(state_ ^ splitmix64(counter ^ 0xd1b54a32d192ed03ULL));
    }
    // Uniform in [0, 1).
    [[nodiscard]] double uniform(std::uint64_t counter) const noexcept
    {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }
    // Unit-mean exponential; this is |g|^2 for a Rayleigh-faded link.
    [[nodiscard]] double exponential(std::uint64_t counter) const noexcept;

    [[nodiscard]] constexpr std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0;
};

// Sequential generator over a StreamKey. Satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(StreamKey key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept { return key_.bits(counter_++); }

    double uniform() noexcept { return key_.uniform(counter_++); }
    double exponential() noexcept { return key_.exponential(counter_++); }
    // Unbiased integer in [0, bound).
    std::size_t index(std::size_t bound);

    [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

private:
    StreamKey key_;
    std::uint64_t counter_ = 0;
};

// Fisher-Yates; std::shuffle is implementation-defined and would break
// cross-platform reproducibility.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = rng.index(i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace oppnet
