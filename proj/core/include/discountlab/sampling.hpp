#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace discountlab {

/// Randomly shifted Halton sequence on [0,1)^dim (Cranley-Patterson rotation).
/// The shift is drawn once from the seed, so a given (dim, seed) always yields
/// the same stream.
class HaltonSampler {
public:
    HaltonSampler(int dim, std::uint64_t seed);

    /// Next point in [0,1)^dim.
    const std::vector<double>& next();
    int dim() const { return static_cast<int>(shift_.size()); }

private:
    std::vector<double> shift_;
    std::vector<double> point_;
    std::uint64_t index_ = 1;
};

/// Radical inverse of `index` in base `base`.
double radical_inverse(std::uint64_t index, int base);

} // namespace discountlab
