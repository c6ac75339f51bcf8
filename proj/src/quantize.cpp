#include "obcov/quantize.hpp"

#include "obcov/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace obcov {

SignVector::SignVector(std::size_t p) : p_(p), bytes_(byte_count(p), 0) {}

SignVector::SignVector(std::size_t p, std::vector<std::uint8_t> bytes) : p_(p), bytes_(std::move(bytes)) {
    if (bytes_.size() != byte_count(p_))
        throw Error(Errc::ShapeMismatch, "sign vector of length " + std::to_string(p_) + " needs " +
                                             std::to_string(byte_count(p_)) + " bytes");
    if (p_ % 8 != 0 && (bytes_.back() >> (p_ % 8)) != 0)
        throw Error(Errc::InvalidArgument, "sign vector padding bits are not zero");
}

void SignVector::set(std::size_t i, bool positive) noexcept {
    const auto mask = static_cast<std::uint8_t>(1u << (i & 7));
    if (positive)
        bytes_[i >> 3] |= mask;
    else
        bytes_[i >> 3] &= static_cast<std::uint8_t>(~mask);
}

void SignVector::unpack_into(std::span<double> out) const noexcept {
    for (std::size_t i = 0; i < p_; ++i) out[i] = (*this)[i] > 0 ? 1.0 : -1.0;
}

SignVector sign_quantize(std::span<const double> x, std::span<const double> dither) {
    if (x.size() != dither.size()) throw Error(Errc::ShapeMismatch, "sign_quantize: x and dither lengths differ");
    SignVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.set(i, x[i] + dither[i] >= 0.0);
    return out;
}

std::string_view policy_name(DitherPolicy policy) noexcept {
    switch (policy) {
    case DitherPolicy::Fixed: return "fixed";
    case DitherPolicy::GlobalAdaptive: return "adaptive";
    case DitherPolicy::EntrywiseAdaptive: return "entrywise";
    case DitherPolicy::OracleEntrywise: return "oracle";
    case DitherPolicy::MaxEntrywise: return "max";
    }
    return "unknown";
}

bool is_entrywise(DitherPolicy policy) noexcept {
    return policy == DitherPolicy::EntrywiseAdaptive || policy == DitherPolicy::OracleEntrywise ||
           policy == DitherPolicy::MaxEntrywise;
}

double global_adaptive_scale(double c1, double log_k, double lambda) {
    return std::sqrt(c1 * log_k) * lambda;
}

DitherState DitherState::fixed(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error(Errc::InvalidArgument, "fixed dither scale must be finite and non-negative");
    DitherState s;
    s.policy_ = DitherPolicy::Fixed;
    s.fixed_lambda_ = lambda;
    return s;
}

DitherState DitherState::global_adaptive(double c1, bool log_offset) {
    if (!(c1 > 0.0) || !std::isfinite(c1)) throw Error(Errc::InvalidArgument, "C1 must be positive");
    DitherState s;
    s.policy_ = DitherPolicy::GlobalAdaptive;
    s.c1_ = c1;
    s.log_offset_ = log_offset;
    return s;
}

DitherState DitherState::entrywise_adaptive(std::size_t p, double c1, bool log_offset) {
    if (!(c1 > 0.0) || !std::isfinite(c1)) throw Error(Errc::InvalidArgument, "C1 must be positive");
    DitherState s;
    s.policy_ = DitherPolicy::EntrywiseAdaptive;
    s.c1_ = c1;
    s.log_offset_ = log_offset;
    s.mean_squares_.assign(p, 0.0);
    return s;
}

DitherState DitherState::oracle_entrywise(std::vector<double> scale, double c1) {
    for (double v : scale)
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::InvalidArgument, "oracle scale must be >= 0");
    DitherState s;
    s.policy_ = DitherPolicy::OracleEntrywise;
    s.c1_ = c1;
    s.fixed_vector_ = std::move(scale);
    return s;
}

DitherState DitherState::max_entrywise(std::vector<double> scale) {
    for (double v : scale)
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::InvalidArgument, "max scale must be >= 0");
    DitherState s;
    s.policy_ = DitherPolicy::MaxEntrywise;
    s.fixed_vector_ = std::move(scale);
    return s;
}

double DitherState::header_param() const noexcept {
    switch (policy_) {
    case DitherPolicy::Fixed: return fixed_lambda_;
    case DitherPolicy::MaxEntrywise: return 0.0;
    default: return c1_;
    }
}

std::vector<double> DitherState::lambda_vec() const {
    std::vector<double> out(mean_squares_.size());
    std::transform(mean_squares_.begin(), mean_squares_.end(), out.begin(), [](double m) { return std::sqrt(m); });
    return out;
}

DitherScale DitherState::current_scale() const {
    switch (policy_) {
    case DitherPolicy::Fixed: return fixed_lambda_;
    case DitherPolicy::OracleEntrywise:
    case DitherPolicy::MaxEntrywise: return fixed_vector_;
    case DitherPolicy::GlobalAdaptive:
    case DitherPolicy::EntrywiseAdaptive: break;
    }
    if (k_ == 0) throw Error(Errc::InvalidState, "adaptive dither needs at least one prior sample (k >= 1)");
    const double log_k = std::log(static_cast<double>(k_ + (log_offset_ ? 1 : 0)));
    if (policy_ == DitherPolicy::GlobalAdaptive) return global_adaptive_scale(c1_, log_k, lambda_running_);

    const double factor = c1_ * std::sqrt(log_k);
    std::vector<double> scale(mean_squares_.size());
    for (std::size_t i = 0; i < scale.size(); ++i) scale[i] = factor * std::sqrt(mean_squares_[i]);
    return scale;
}

void DitherState::update(std::span<const double> x) {
    const std::uint64_t next = k_ + 1;
    const double kk = static_cast<double>(next);
    if (policy_ == DitherPolicy::GlobalAdaptive) {
        double inf_norm = 0.0;
        for (double v : x) inf_norm = std::max(inf_norm, std::abs(v));
        lambda_running_ = ((kk - 1.0) * lambda_running_ + inf_norm) / kk;
    } else if (policy_ == DitherPolicy::EntrywiseAdaptive) {
        if (x.size() != mean_squares_.size())
            throw Error(Errc::ShapeMismatch, "sample length does not match entry-wise dither state");
        for (std::size_t i = 0; i < x.size(); ++i)
            mean_squares_[i] = ((kk - 1.0) * mean_squares_[i] + x[i] * x[i]) / kk;
    } else if (!fixed_vector_.empty() && x.size() != fixed_vector_.size()) {
        throw Error(Errc::ShapeMismatch, "sample length does not match dither scale vector");
    }
    k_ = next;
}

void DitherState::set_running(std::uint64_t k, double lambda_running, std::vector<double> mean_squares) {
    k_ = k;
    lambda_running_ = lambda_running;
    if (!mean_squares.empty()) mean_squares_ = std::move(mean_squares);
}

QuantizedSample acquire_sample(std::span<const double> x, DitherState& state, RngStream& rng) {
    DitherScale scale = state.current_scale();
    std::vector<double> tau(x.size());
    std::vector<double> tau_bar(x.size());
    if (const auto* s = std::get_if<double>(&scale)) {
        uniform_dither_into(*s, rng, tau);
        uniform_dither_into(*s, rng, tau_bar);
    } else {
        const auto& v = std::get<std::vector<double>>(scale);
        uniform_dither_into(v, rng, tau);
        uniform_dither_into(v, rng, tau_bar);
    }
    QuantizedSample sample{sign_quantize(x, tau), sign_quantize(x, tau_bar), std::move(scale)};
    state.update(x);
    return sample;
}

std::vector<double> oracle_scale(const SymMatrix& sigma, double log_n, double c1) {
    std::vector<double> scale(sigma.dim());
    for (std::size_t i = 0; i < scale.size(); ++i) {
        const double var = sigma(i, i);
        if (var < 0.0) throw Error(Errc::InvalidArgument, "negative variance on the diagonal");
        scale[i] = c1 * std::sqrt(log_n * var);
    }
    return scale;
}

DitherState build_oracle_dither(const SymMatrix& sigma, std::size_t n, double c1) {
    if (n == 0) throw Error(Errc::InvalidArgument, "oracle dither needs n >= 1");
    return DitherState::oracle_entrywise(oracle_scale(sigma, std::log(static_cast<double>(n)), c1), c1);
}

DitherState build_max_dither(std::span<const std::vector<double>> raw_samples) {
    if (raw_samples.empty()) throw Error(Errc::EmptyInput, "max dither needs at least one sample");
    std::vector<double> scale(raw_samples.front().size(), 0.0);
    for (const auto& x : raw_samples) {
        if (x.size() != scale.size()) throw Error(Errc::ShapeMismatch, "samples differ in length");
        for (std::size_t i = 0; i < x.size(); ++i) scale[i] = std::max(scale[i], std::abs(x[i]));
    }
    return DitherState::max_entrywise(std::move(scale));
}

SampleStream acquire_stream(std::span<const std::vector<double>> xs, DitherState state, RngStream& rng) {
    if (xs.empty()) throw Error(Errc::EmptyInput, "acquisition needs the seed sample X_0");
    SampleStream stream;
    stream.p = xs.front().size();
    stream.policy = state.policy();
    stream.header_param = state.header_param();
    stream.samples.reserve(xs.size() - 1);
    state.update(xs.front());
    for (std::size_t k = 1; k < xs.size(); ++k) {
        if (xs[k].size() != stream.p) throw Error(Errc::ShapeMismatch, "samples differ in length");
        stream.samples.push_back(acquire_sample(xs[k], state, rng));
    }
    return stream;
}

void SampleStream::validate() const {
    if (p == 0) throw Error(Errc::InvalidArgument, "stream dimension p must be >= 1");
    const bool vector_scale = is_entrywise(policy);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        const std::string where = "sample " + std::to_string(k) + ": ";
        if (s.y.size() != p || s.y_bar.size() != p) throw Error(Errc::InvalidArgument, where + "sign length != p");
        if (vector_scale) {
            const auto* v = std::get_if<std::vector<double>>(&s.scale);
            if (v == nullptr || v->size() != p)
                throw Error(Errc::InvalidArgument, where + "entry-wise policy needs a length-p scale vector");
            for (double x : *v)
                if (!(x >= 0.0)) throw Error(Errc::InvalidArgument, where + "negative scale");
        } else {
            const auto* v = std::get_if<double>(&s.scale);
            if (v == nullptr) throw Error(Errc::InvalidArgument, where + "global policy needs a scalar scale");
            if (!(*v >= 0.0)) throw Error(Errc::InvalidArgument, where + "negative scale");
        }
    }
}

BitCost bit_cost(DitherPolicy policy, std::uint64_t p, std::uint64_t n) {
    if (p == 0 || n == 0) throw Error(Errc::InvalidArgument, "bit_cost needs p, n >= 1");
    const std::uint64_t full = 32 * p * n;
    if (is_entrywise(policy)) return {32 * p + 2 * p * n, full};
    return {(2 * p + 32) * n, full};
}

} // namespace obcov
