#include "plsa/seed.hpp"

#include "plsa/error.hpp"

namespace plsa {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, StreamTag tag) {
    if (index >= (std::uint64_t{1} << 62)) throw InvalidInput("derive_seed: index out of range");
    return mix64(mix64(base) ^ ((index << 2) | static_cast<std::uint64_t>(tag)));
}

std::uint64_t replication_index(std::uint64_t size_index, std::uint64_t rep) {
    if (rep >= (std::uint64_t{1} << 32) || size_index >= (std::uint64_t{1} << 30)) {
        throw InvalidInput("replication_index: out of range");
    }
    return (size_index << 32) | rep;
}

}  // namespace plsa
