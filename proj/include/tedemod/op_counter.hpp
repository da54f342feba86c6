#pragma once

#include <cstdint>

namespace tedemod {

// Multiply-accumulate tally. Demodulators take an optional pointer and add
// the arithmetic they perform; a null pointer disables counting.
struct OpCounter {
    std::uint64_t mac = 0;

    void add(std::uint64_t n) noexcept { mac += n; }
};

inline void tally(OpCounter* counter, std::uint64_t n) noexcept
{
    if (counter) counter->add(n);
}

} // namespace tedemod
