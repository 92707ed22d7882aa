#include <nhflow/sampling.hpp>

#include <bit>

namespace nhflow::sampling {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t s = base ^ 0xD1B54A32D192ED03ULL;
    const std::uint64_t a = splitmix64(s);
    std::uint64_t t = a ^ (index * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
    splitmix64(t);
    return splitmix64(t);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& w : s_) w = splitmix64(s);
}

Rng::result_type Rng::operator()() {
    const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::normal() { return normal_(*this); }

cplx Rng::complex_normal() {
    constexpr double s = 0.70710678118654752440;
    const double re = normal_(*this);
    const double im = normal_(*this);
    return {s * re, s * im};
}

}  // namespace nhflow::sampling
