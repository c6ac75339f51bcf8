#include "obcov/sampling.hpp"

#include "obcov/error.hpp"

#include <cmath>
#include <numbers>

namespace obcov {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint16_t lane) noexcept
    : seed_(seed), stream_id_(stream_id), lane_(lane) {}

void RngStream::refill() noexcept {
    // counter = (block[0:32], block[32:48] | lane << 16, stream_id lo, stream_id hi)
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_),
        static_cast<std::uint32_t>((block_ >> 32) & 0xFFFFu) | (static_cast<std::uint32_t>(lane_) << 16),
        static_cast<std::uint32_t>(stream_id_),
        static_cast<std::uint32_t>(stream_id_ >> 32),
    };
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                              static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = philox4x32_10(ctr, key);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
    ++block_;
}

RngStream::result_type RngStream::operator()() noexcept {
    if (buffered_ == 0) refill();
    return buffer_[2 - buffered_--];
}

double RngStream::uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
    if (spare_normal_) {
        const double z = *spare_normal_;
        spare_normal_.reset();
        return z;
    }
    const double u1 = 1.0 - uniform01(); // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(angle);
    return r * std::cos(angle);
}

GaussianModel::GaussianModel(SymMatrix sigma) : sigma_(std::move(sigma)), chol_(cholesky(sigma_)) {}

void GaussianModel::sample_into(RngStream& rng, std::span<double> out) const {
    const std::size_t p = dim();
    if (out.size() != p) throw Error(Errc::ShapeMismatch, "gaussian sample buffer has wrong length");
    for (std::size_t i = 0; i < p; ++i) out[i] = rng.normal();
    // In-place L z: row i only reads z_0..z_i, which are untouched when
    // walking rows from the bottom up.
    for (std::size_t i = p; i-- > 0;) {
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) s += chol_(i, k) * out[k];
        out[i] = s;
    }
}

std::vector<double> GaussianModel::sample(RngStream& rng) const {
    std::vector<double> x(dim());
    sample_into(rng, x);
    return x;
}

std::vector<double> gaussian_vector(const GaussianModel& model, RngStream& rng) {
    return model.sample(rng);
}

void uniform_dither_into(std::span<const double> scale, RngStream& rng, std::span<double> out) {
    if (scale.size() != out.size()) throw Error(Errc::ShapeMismatch, "dither scale/output length mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double u = 2.0 * rng.uniform01() - 1.0;
        out[i] = scale[i] == 0.0 ? 0.0 : scale[i] * u;
    }
}

void uniform_dither_into(double scale, RngStream& rng, std::span<double> out) {
    for (double& v : out) {
        const double u = 2.0 * rng.uniform01() - 1.0;
        v = scale == 0.0 ? 0.0 : scale * u;
    }
}

std::vector<double> uniform_dither(std::size_t p, double scale, RngStream& rng) {
    if (scale < 0.0) throw Error(Errc::InvalidArgument, "dither scale must be non-negative");
    std::vector<double> out(p);
    uniform_dither_into(scale, rng, out);
    return out;
}

std::vector<double> uniform_dither(std::span<const double> scale, RngStream& rng) {
    for (double s : scale)
        if (s < 0.0) throw Error(Errc::InvalidArgument, "dither scale must be non-negative");
    std::vector<double> out(scale.size());
    uniform_dither_into(scale, rng, out);
    return out;
}

std::vector<double> bounded_test_vector(std::size_t p, double bound, RngStream& rng) {
    if (!(bound > 0.0)) throw Error(Errc::InvalidArgument, "bound must be positive");
    std::vector<double> out(p);
    uniform_dither_into(bound, rng, out);
    return out;
}

} // namespace obcov
