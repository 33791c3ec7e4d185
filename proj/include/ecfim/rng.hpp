#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace ecfim {

/// Random stream identified by (master_seed, stream_index).
///
/// The engine is seeded from both words through std::seed_seq, so the output sequence is a pure
/// function of the pair. Monte Carlo trial i draws from stream i, which keeps results independent
/// of how trials are spread over threads.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : master_seed_(master_seed), stream_index_(stream_index), engine_(make_engine(master_seed, stream_index)) {}

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_index() const noexcept { return stream_index_; }

    RngStream substream(std::uint64_t index) const { return RngStream(master_seed_, index); }

    double uniform() { return uniform_(engine_); }
    double normal() { return normal_(engine_); }

    /// Standard circular complex normal, E|z|^2 = 1.
    std::complex<double> complex_normal() {
        constexpr double s = 0.70710678118654752440;
        const double re = normal_(engine_), im = normal_(engine_);
        return {s * re, s * im};
    }

    /// Gamma(shape, scale = 1).
    double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          0x9e3779b9u};
        return std::mt19937_64(seq);
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ecfim
