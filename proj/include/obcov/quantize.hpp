#pragma once

#include "obcov/linalg.hpp"
#include "obcov/sampling.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace obcov {

/// Packed vector in {-1,+1}^p. Bit i lives in byte i/8 at position i%8
/// (LSB first); a set bit means +1. Padding bits past p are always zero.
class SignVector {
public:
    SignVector() = default;
    /// All -1.
    explicit SignVector(std::size_t p);
    /// Adopts packed bytes; throws ShapeMismatch on a wrong byte count and
    /// InvalidArgument on non-zero padding.
    SignVector(std::size_t p, std::vector<std::uint8_t> bytes);

    std::size_t size() const noexcept { return p_; }
    std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

    int operator[](std::size_t i) const noexcept { return (bytes_[i >> 3] >> (i & 7)) & 1 ? 1 : -1; }
    void set(std::size_t i, bool positive) noexcept;

    /// Expands to +/-1.0 doubles.
    void unpack_into(std::span<double> out) const noexcept;

    static std::size_t byte_count(std::size_t p) noexcept { return (p + 7) / 8; }

    friend bool operator==(const SignVector&, const SignVector&) = default;

private:
    std::size_t p_ = 0;
    std::vector<std::uint8_t> bytes_;
};

/// sign(x + dither) entrywise, with sign(0) = +1.
SignVector sign_quantize(std::span<const double> x, std::span<const double> dither);

enum class DitherPolicy : std::uint8_t {
    Fixed = 0,
    GlobalAdaptive = 1,
    EntrywiseAdaptive = 2,
    OracleEntrywise = 3,
    MaxEntrywise = 4,
};

std::string_view policy_name(DitherPolicy policy) noexcept;
/// Per-entry (vector) scales rather than one scalar per sample.
bool is_entrywise(DitherPolicy policy) noexcept;

/// Dither half-width in effect for one sample: a scalar for Fixed and
/// GlobalAdaptive, a length-p vector for the entry-wise policies.
using DitherScale = std::variant<double, std::vector<double>>;

/// sqrt(c1 * log_k) * lambda, the global adaptive half-width.
double global_adaptive_scale(double c1, double log_k, double lambda);

/// Running state of one dithering policy.
///
/// k counts the samples folded in by update(). The scale used for sample k
/// (1-based) is read while k updates have been made, i.e. it only sees
/// X_0, ..., X_{k-1}. For the adaptive policies log(k) vanishes at k = 1, so
/// the first quantized sample gets zero dither; `log_offset` replaces log(k)
/// by log(k+1).
class DitherState {
public:
    static DitherState fixed(double lambda);
    static DitherState global_adaptive(double c1, bool log_offset = false);
    static DitherState entrywise_adaptive(std::size_t p, double c1, bool log_offset = false);
    /// Fixed per-entry scale vectors; see build_oracle_dither / build_max_dither.
    static DitherState oracle_entrywise(std::vector<double> scale, double c1);
    static DitherState max_entrywise(std::vector<double> scale);

    DitherPolicy policy() const noexcept { return policy_; }
    std::uint64_t k() const noexcept { return k_; }
    double c1() const noexcept { return c1_; }
    bool log_offset() const noexcept { return log_offset_; }
    /// Value stored in the stream header: lambda for Fixed, C1 for the
    /// adaptive and oracle policies, 0 for MaxEntrywise.
    double header_param() const noexcept;

    /// Running mean of ||X_j||_inf (GlobalAdaptive).
    double lambda_running() const noexcept { return lambda_running_; }
    /// Running mean of X_j^2 per coordinate (EntrywiseAdaptive).
    std::span<const double> mean_squares() const noexcept { return mean_squares_; }
    /// Entrywise square root of mean_squares().
    std::vector<double> lambda_vec() const;

    /// Throws InvalidState for adaptive policies before the first update.
    DitherScale current_scale() const;

    /// Folds x into the running statistics and increments k.
    void update(std::span<const double> x);

    /// Test hook: overrides the running statistics as if k samples were seen.
    void set_running(std::uint64_t k, double lambda_running, std::vector<double> mean_squares = {});

private:
    DitherState() = default;

    DitherPolicy policy_ = DitherPolicy::Fixed;
    std::uint64_t k_ = 0;
    double c1_ = 0.0;
    bool log_offset_ = false;
    double fixed_lambda_ = 0.0;
    double lambda_running_ = 0.0;
    std::vector<double> mean_squares_;
    std::vector<double> fixed_vector_;
};

inline DitherState update_state(DitherState state, std::span<const double> x) {
    state.update(x);
    return state;
}

struct QuantizedSample {
    SignVector y;
    SignVector y_bar;
    DitherScale scale;

    friend bool operator==(const QuantizedSample&, const QuantizedSample&) = default;
};

/// Quantizes sample x_k: the scale is read from `state` before x is looked
/// at, tau and tau_bar are drawn (in that order) from `rng` at that scale,
/// and only then is x folded into the state.
QuantizedSample acquire_sample(std::span<const double> x, DitherState& state, RngStream& rng);

/// c1 * sqrt(log_n * Sigma_ii) per coordinate.
std::vector<double> oracle_scale(const SymMatrix& sigma, double log_n, double c1);
DitherState build_oracle_dither(const SymMatrix& sigma, std::size_t n, double c1);

/// Per-coordinate max |X_k,i|. Needs every sample up front, so unlike the
/// adaptive policies it cannot be run while samples arrive.
DitherState build_max_dither(std::span<const std::vector<double>> raw_samples);

struct SampleStream {
    std::size_t p = 0;
    DitherPolicy policy = DitherPolicy::Fixed;
    /// lambda for Fixed, C1 otherwise (0 for MaxEntrywise).
    double header_param = 0.0;
    std::vector<QuantizedSample> samples;

    std::size_t n() const noexcept { return samples.size(); }

    /// Throws InvalidArgument if any sample disagrees with p or the policy's
    /// scale kind, or carries a negative scale.
    void validate() const;

    friend bool operator==(const SampleStream&, const SampleStream&) = default;
};

/// Acquisition pipeline over raw samples X_0, ..., X_n: X_0 only seeds the
/// state, X_1..X_n are quantized in order with dithers drawn from `rng`.
SampleStream acquire_stream(std::span<const std::vector<double>> xs, DitherState state, RngStream& rng);

struct BitCost {
    std::uint64_t quantized_bits;
    std::uint64_t full_precision_bits;

    friend bool operator==(const BitCost&, const BitCost&) = default;
};

/// Nominal storage at 32-bit floats: (2p + 32) n for global policies,
/// 32p + 2pn for entry-wise ones, against 32 p n for raw samples.
BitCost bit_cost(DitherPolicy policy, std::uint64_t p, std::uint64_t n);

} // namespace obcov
