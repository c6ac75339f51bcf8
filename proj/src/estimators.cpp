#include "obcov/estimators.hpp"

#include "obcov/error.hpp"

#include <array>
#include <string>
#include <utility>

namespace obcov {

namespace {

constexpr std::array<std::pair<EstimatorTag, std::string_view>, 6> kEstimatorNames = {{
    {EstimatorTag::SampleCov, "sample"},
    {EstimatorTag::Dith, "dith"},
    {EstimatorTag::Adap, "adap"},
    {EstimatorTag::AdapEntrywise, "entrywise"},
    {EstimatorTag::OracleEntrywise, "oracle"},
    {EstimatorTag::MaxEntrywise, "max"},
}};

void require_policy(const SampleStream& stream, bool ok, const char* estimator) {
    if (!ok) {
        throw Error(Errc::PolicyMismatch, std::string(estimator) + " cannot consume a '" +
                                              std::string(policy_name(stream.policy)) + "' stream");
    }
}

// Every quantized estimator reduces to (1/n) sum_k u_k v_k^T with
// u_k = s_k . y_k and v_k = s_k . y_bar_k, then symmetrization. Because the
// signs are exactly +/-1, (s*y_i)(s*y_j) == +/-(s*s) bit-for-bit, so the
// fixed, global and entry-wise estimators agree exactly whenever their
// scales do. Accumulation runs in ascending k.
template <typename ScaleOf>
SymMatrix weighted_sign_average(const SampleStream& stream, ScaleOf&& scale_of) {
    const std::size_t p = stream.p;
    const std::size_t n = stream.n();
    if (n == 0) throw Error(Errc::EmptyInput, "stream has no samples");

    Matrix acc(p, p);
    std::vector<double> u(p), v(p), s(p);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& sample = stream.samples[k];
        if (sample.y.size() != p || sample.y_bar.size() != p)
            throw Error(Errc::ShapeMismatch, "sample " + std::to_string(k) + " has wrong length");
        scale_of(k, sample, s);
        sample.y.unpack_into(u);
        sample.y_bar.unpack_into(v);
        for (std::size_t i = 0; i < p; ++i) {
            u[i] = s[i] * u[i];
            v[i] = s[i] * v[i];
        }
        for (std::size_t i = 0; i < p; ++i) {
            const double ui = u[i];
            double* row = &acc(i, 0);
            for (std::size_t j = 0; j < p; ++j) row[j] += ui * v[j];
        }
    }
    const double nn = static_cast<double>(n);
    for (double& x : acc.data()) x /= nn;
    return SymMatrix::symmetrize(acc);
}

} // namespace

std::string_view estimator_name(EstimatorTag tag) noexcept {
    for (const auto& [t, name] : kEstimatorNames)
        if (t == tag) return name;
    return "unknown";
}

std::optional<EstimatorTag> parse_estimator(std::string_view name) noexcept {
    for (const auto& [t, n] : kEstimatorNames)
        if (n == name) return t;
    return std::nullopt;
}

std::string_view norm_name(ErrorNorm norm) noexcept {
    switch (norm) {
    case ErrorNorm::Op: return "op";
    case ErrorNorm::Fro: return "fro";
    case ErrorNorm::Max: return "max";
    }
    return "unknown";
}

std::optional<ErrorNorm> parse_norm(std::string_view name) noexcept {
    if (name == "op") return ErrorNorm::Op;
    if (name == "fro") return ErrorNorm::Fro;
    if (name == "max") return ErrorNorm::Max;
    return std::nullopt;
}

SymMatrix sample_cov(std::span<const std::vector<double>> xs) {
    if (xs.empty()) throw Error(Errc::EmptyInput, "sample_cov needs at least one sample");
    const std::size_t p = xs.front().size();
    Matrix acc(p, p);
    for (const auto& x : xs) {
        if (x.size() != p) throw Error(Errc::ShapeMismatch, "samples differ in length");
        for (std::size_t i = 0; i < p; ++i) {
            const double xi = x[i];
            double* row = &acc(i, 0);
            for (std::size_t j = 0; j < p; ++j) row[j] += xi * x[j];
        }
    }
    const double n = static_cast<double>(xs.size());
    for (double& v : acc.data()) v /= n;
    return SymMatrix(std::move(acc));
}

SymMatrix estimate_dith(const SampleStream& stream) {
    require_policy(stream, stream.policy == DitherPolicy::Fixed, "estimate_dith");
    const double lambda = stream.header_param;
    return weighted_sign_average(stream, [lambda](std::size_t, const QuantizedSample&, std::vector<double>& s) {
        std::fill(s.begin(), s.end(), lambda);
    });
}

SymMatrix estimate_adap(const SampleStream& stream) {
    require_policy(stream, stream.policy == DitherPolicy::GlobalAdaptive, "estimate_adap");
    return weighted_sign_average(stream, [](std::size_t k, const QuantizedSample& sample, std::vector<double>& s) {
        const auto* scale = std::get_if<double>(&sample.scale);
        if (scale == nullptr) throw Error(Errc::MissingScale, "sample " + std::to_string(k) + " has no scalar scale");
        std::fill(s.begin(), s.end(), *scale);
    });
}

SymMatrix estimate_adap_entrywise(const SampleStream& stream) {
    require_policy(stream, is_entrywise(stream.policy), "estimate_adap_entrywise");
    return weighted_sign_average(stream, [](std::size_t k, const QuantizedSample& sample, std::vector<double>& s) {
        const auto* scale = std::get_if<std::vector<double>>(&sample.scale);
        if (scale == nullptr || scale->size() != s.size())
            throw Error(Errc::MissingScale, "sample " + std::to_string(k) + " has no per-entry scale vector");
        std::copy(scale->begin(), scale->end(), s.begin());
    });
}

EstimatorTag estimator_for(DitherPolicy policy) noexcept {
    switch (policy) {
    case DitherPolicy::Fixed: return EstimatorTag::Dith;
    case DitherPolicy::GlobalAdaptive: return EstimatorTag::Adap;
    case DitherPolicy::EntrywiseAdaptive: return EstimatorTag::AdapEntrywise;
    case DitherPolicy::OracleEntrywise: return EstimatorTag::OracleEntrywise;
    case DitherPolicy::MaxEntrywise: return EstimatorTag::MaxEntrywise;
    }
    return EstimatorTag::Dith;
}

SymMatrix estimate(const SampleStream& stream) {
    switch (stream.policy) {
    case DitherPolicy::Fixed: return estimate_dith(stream);
    case DitherPolicy::GlobalAdaptive: return estimate_adap(stream);
    default: return estimate_adap_entrywise(stream);
    }
}

SymMatrix apply_mask(const SymMatrix& est, const Matrix& mask) {
    if (!mask.is_square() || mask.rows() != est.dim())
        throw Error(Errc::ShapeMismatch, "mask shape does not match the estimate");
    if (!mask.is_symmetric()) throw Error(Errc::MaskAsymmetric, "mask is not symmetric");
    for (double m : mask.data())
        if (!(m >= 0.0 && m <= 1.0)) throw Error(Errc::MaskRange, "mask entry " + std::to_string(m) + " outside [0,1]");
    return SymMatrix(hadamard(mask, est.matrix()));
}

double estimation_error(const SymMatrix& est, const SymMatrix& truth, ErrorNorm norm) {
    if (est.dim() != truth.dim()) throw Error(Errc::ShapeMismatch, "estimate and truth differ in dimension");
    const Matrix diff = est.matrix() - truth.matrix();
    switch (norm) {
    case ErrorNorm::Op: return op_norm(diff);
    case ErrorNorm::Fro: return fro_norm(diff);
    case ErrorNorm::Max: return max_norm(diff);
    }
    return 0.0;
}

} // namespace obcov
