#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace clusterpower {

// SplitMix64 finalizer; a bijective mixer used to derive stream seeds.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Folds a list of identifiers into one seed.  Order matters, so
// (seed, cell, replicate) and (seed, replicate, cell) give different streams.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t key : keys) h = splitmix64(h ^ splitmix64(key + 0x632be59bd9b4e019ULL));
    return h;
}

// Independent random stream.  Streams are split by deriving a child seed, so
// results never depend on the order in which replicates are executed.
class RngStream {
public:
    using result_type = std::mt19937_64::result_type;

    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    RngStream split(std::uint64_t key) const { return RngStream(derive_seed(seed_, {key})); }

    std::uint64_t seed() const { return seed_; }

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return normal_(engine_); }
    double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
    bool bernoulli(double prob) { return uniform() < prob; }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace clusterpower
