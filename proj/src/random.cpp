#include "pm/random.hpp"

namespace pm {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

std::uint64_t word_at(std::uint64_t key, std::uint64_t draw, std::uint64_t j) {
    std::uint64_t h = mix64(key + kGolden * (draw + 1));
    return mix64(h ^ (kGolden * (j + 1)));
}

}  // namespace

RandomStream RandomStream::from_seed(std::uint64_t seed) {
    return RandomStream{mix64(seed + kGolden), 0};
}

RandomStream RandomStream::substream(std::uint64_t tag) const {
    return RandomStream{mix64(key ^ mix64(tag + kGolden)), 0};
}

std::uint64_t RandomStream::next_u64() {
    return word_at(key, draw++, 0);
}

double RandomStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1p-53;
}

Dyadic RandomStream::next_fraction(long bits) {
    if (bits < 1) throw internal_error("next_fraction needs bits >= 1");
    std::uint64_t d = draw++;
    long nwords = (bits + 63) / 64;
    mpz_class acc = 0;
    for (long j = 0; j < nwords; ++j) {
        acc <<= 64;
        std::uint64_t w = word_at(key, d, static_cast<std::uint64_t>(j));
        mpz_class wz;
        mpz_import(wz.get_mpz_t(), 1, 1, sizeof(w), 0, 0, &w);
        acc += wz;
    }
    acc >>= (nwords * 64 - bits);  // keep the most significant `bits` bits
    return Dyadic(std::move(acc), bits);
}

std::uint64_t RandomStream::next_below(std::uint64_t n) {
    if (n == 0) throw internal_error("next_below(0)");
    std::uint64_t lim = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    for (;;) {
        std::uint64_t w = next_u64();
        if (w <= lim) return w % n;
    }
}

}  // namespace pm
