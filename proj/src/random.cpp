#include "kkl/random.hpp"

namespace kkl {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t draw) {
    const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ index) ^ draw);
    return static_cast<double>(key >> 11) * 0x1.0p-53;
}

}  // namespace kkl
