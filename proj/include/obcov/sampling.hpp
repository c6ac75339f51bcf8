#pragma once

#include "obcov/linalg.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace obcov {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based random stream keyed by (seed, stream_id, lane).
///
/// The seed is the Philox key; stream_id and lane are folded into the
/// counter, so any two distinct triples read disjoint parts of the same
/// keyed sequence and the output depends on nothing but the triple. Monte
/// Carlo trials use stream_id = trial index; lanes separate the raw samples
/// from the two dither sequences within one trial.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint16_t lane = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() noexcept;
    /// Standard normal, Box-Muller; the second variate of each pair is cached.
    double normal() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    std::uint16_t lane() const noexcept { return lane_; }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint16_t lane_;
    std::uint64_t block_ = 0; // 48 usable bits
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    std::optional<double> spare_normal_;
};

/// Zero-mean Gaussian with covariance sigma; the Cholesky factor is computed
/// once at construction.
class GaussianModel {
public:
    explicit GaussianModel(SymMatrix sigma);

    std::size_t dim() const noexcept { return sigma_.dim(); }
    const SymMatrix& sigma() const noexcept { return sigma_; }
    const Matrix& chol() const noexcept { return chol_; }

    /// out = L z with z i.i.d. N(0,1) drawn in coordinate order.
    void sample_into(RngStream& rng, std::span<double> out) const;
    std::vector<double> sample(RngStream& rng) const;

private:
    SymMatrix sigma_;
    Matrix chol_;
};

std::vector<double> gaussian_vector(const GaussianModel& model, RngStream& rng);

/// Coordinates uniform on [-scale_i, scale_i]. One uniform is consumed per
/// coordinate even where the scale is zero, so the stream position does not
/// depend on the scales; zero scales produce exactly +0.0.
void uniform_dither_into(std::span<const double> scale, RngStream& rng, std::span<double> out);
void uniform_dither_into(double scale, RngStream& rng, std::span<double> out);
std::vector<double> uniform_dither(std::size_t p, double scale, RngStream& rng);
std::vector<double> uniform_dither(std::span<const double> scale, RngStream& rng);

/// i.i.d. uniform on [-bound, bound]; bound must be positive.
std::vector<double> bounded_test_vector(std::size_t p, double bound, RngStream& rng);

} // namespace obcov
