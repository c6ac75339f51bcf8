#pragma once

#include "obcov/linalg.hpp"
#include "obcov/quantize.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace obcov {

enum class EstimatorTag {
    SampleCov,
    Dith,
    Adap,
    AdapEntrywise,
    OracleEntrywise,
    MaxEntrywise,
};

std::string_view estimator_name(EstimatorTag tag) noexcept;
std::optional<EstimatorTag> parse_estimator(std::string_view name) noexcept;

enum class ErrorNorm { Op, Fro, Max };

std::string_view norm_name(ErrorNorm norm) noexcept;
std::optional<ErrorNorm> parse_norm(std::string_view name) noexcept;

/// (1/n) sum_k x_k x_k^T, no centering. Throws EmptyInput.
SymMatrix sample_cov(std::span<const std::vector<double>> xs);

/// lambda^2/n sum_k y_k y_bar_k^T, symmetrized. Needs a Fixed stream.
SymMatrix estimate_dith(const SampleStream& stream);

/// sum_k (s_k^2/n) y_k y_bar_k^T, symmetrized, with s_k the scale recorded
/// for sample k. Needs a GlobalAdaptive stream.
SymMatrix estimate_adap(const SampleStream& stream);

/// (1/n) sum_k (s_k . y_k)(s_k . y_bar_k)^T, symmetrized, with s_k the
/// per-entry scale vector of sample k. Needs an entry-wise stream.
SymMatrix estimate_adap_entrywise(const SampleStream& stream);

/// Dispatches on the stream's policy.
SymMatrix estimate(const SampleStream& stream);

/// Estimator that consumes streams of the given policy.
EstimatorTag estimator_for(DitherPolicy policy) noexcept;

/// mask (.) est. The mask must be exactly symmetric (MaskAsymmetric) with
/// entries in [0,1] (MaskRange).
SymMatrix apply_mask(const SymMatrix& est, const Matrix& mask);

double estimation_error(const SymMatrix& est, const SymMatrix& truth, ErrorNorm norm = ErrorNorm::Op);

} // namespace obcov
