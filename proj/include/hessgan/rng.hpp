#pragma once

#include <cstdint>
#include <string_view>

namespace hessgan {

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based child seed: child i of `parent`. Deriving a new child never
/// perturbs existing ones.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// Named random streams fanned out from one master seed.
enum class Stream : std::uint64_t { data = 1, init = 2, latent = 3, probes = 4, measure = 5 };

struct SeedStreams {
    std::uint64_t master = 0;

    std::uint64_t seed(Stream stream) const {
        return derive_seed(master, static_cast<std::uint64_t>(stream));
    }
    std::uint64_t seed(Stream stream, std::uint64_t counter) const {
        return derive_seed(seed(stream), counter);
    }
};

std::string_view stream_name(Stream stream);

}  // namespace hessgan
