#include "discountlab/sampling.hpp"

#include <array>
#include <cmath>

#include "discountlab/error.hpp"

namespace discountlab {

namespace {
constexpr std::array<int, 24> kPrimes{2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                      41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
}

double radical_inverse(std::uint64_t index, int base) {
    double inv_base = 1.0 / base;
    double factor = inv_base;
    double result = 0.0;
    while (index > 0) {
        result += static_cast<double>(index % base) * factor;
        index /= base;
        factor *= inv_base;
    }
    return result;
}

HaltonSampler::HaltonSampler(int dim, std::uint64_t seed) : shift_(dim), point_(dim) {
    require(dim >= 1 && dim <= static_cast<int>(kPrimes.size()), "Halton dimension out of range");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& s : shift_) s = unif(rng);
}

const std::vector<double>& HaltonSampler::next() {
    for (int d = 0; d < dim(); ++d) {
        double v = radical_inverse(index_, kPrimes[d]) + shift_[d];
        point_[d] = v - std::floor(v);
    }
    ++index_;
    return point_;
}

} // namespace discountlab
