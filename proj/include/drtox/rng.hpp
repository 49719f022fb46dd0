#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace drtox {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic substream derivation: fold each id into the state with a
// splitmix round, so (master, trial, role, index) address independent streams.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> ids) {
    std::uint64_t s = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t id : ids) s = splitmix64(s ^ id);
    return s;
}

inline Rng make_rng(std::initializer_list<std::uint64_t> ids) {
    return Rng(derive_seed(ids));
}

// Stream roles within one simulated trial.
namespace stream {
constexpr std::uint64_t patient = 0x01;
constexpr std::uint64_t design = 0x02;
constexpr std::uint64_t nlme = 0x03;
constexpr std::uint64_t mcmc_logistic = 0x04;
constexpr std::uint64_t mcmc_hier = 0x05;
constexpr std::uint64_t predict = 0x06;
constexpr std::uint64_t calibrate = 0x07;
}  // namespace stream

}  // namespace drtox
