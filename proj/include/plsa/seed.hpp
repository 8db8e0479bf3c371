#pragma once

#include <cstdint>
#include <random>

namespace plsa {

enum class StreamTag : std::uint64_t { covariates = 0, events = 1, response = 2 };

// splitmix64 output finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Seed for one random stream of one replication:
///   mix64(mix64(base) ^ (index << 2 | tag)).
/// Both mixing steps are bijective, so distinct (index, tag) pairs with
/// index < 2^62 always give distinct seeds. The formula is part of the output
/// contract; changing it changes every simulated dataset.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, StreamTag tag);

// Replication index combining the position in the size grid and the
// replication number.
std::uint64_t replication_index(std::uint64_t size_index, std::uint64_t rep);

using Rng = std::mt19937_64;

}  // namespace plsa
