#ifndef KKL_RANDOM_HPP
#define KKL_RANDOM_HPP

#include <cstdint>

namespace kkl {

// Counter-based uniform draw in [0, 1): depends only on (seed, index, draw).
double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t draw);

}  // namespace kkl

#endif
