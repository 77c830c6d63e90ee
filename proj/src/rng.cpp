#include "hessgan/rng.hpp"

namespace hessgan {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    return splitmix64(splitmix64(parent) ^ splitmix64(index * 0xD1B54A32D192ED03ULL + 1));
}

std::string_view stream_name(Stream stream) {
    switch (stream) {
        case Stream::data:
            return "data";
        case Stream::init:
            return "init";
        case Stream::latent:
            return "latent";
        case Stream::probes:
            return "probes";
        case Stream::measure:
            return "measure";
    }
    return "unknown";
}

}  // namespace hessgan
