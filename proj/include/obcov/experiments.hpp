#pragma once

#include "obcov/estimators.hpp"
#include "obcov/linalg.hpp"
#include "obcov/sampling.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace obcov {

enum class SigmaKind {
    /// 0.8 I + 0.2 J: unit variances, all correlations 0.2.
    CompoundSymmetry,
    /// D Sigma_1 D with D = diag(1, 1/10, ..., 1/10).
    ScaledCompound,
    /// B^T B / p + 0.1 I with B standard Gaussian drawn from `seed`.
    RandomSpd,
    /// Matrix read from a CSV file.
    Custom,
};

std::string_view sigma_kind_name(SigmaKind kind) noexcept;

struct SigmaSpec {
    SigmaKind kind = SigmaKind::CompoundSymmetry;
    std::uint64_t seed = 0;
    std::string path;

    friend bool operator==(const SigmaSpec&, const SigmaSpec&) = default;
};

/// `points` equally spaced values from min to max inclusive.
struct LambdaGrid {
    double min = 0.0;
    double max = 0.0;
    std::size_t points = 0;

    std::vector<double> values() const;
    /// The default (0, 4 ||Sigma||_inf] grid with 50 points, zero excluded.
    static LambdaGrid for_sigma(const SymMatrix& sigma, std::size_t points = 50);

    friend bool operator==(const LambdaGrid&, const LambdaGrid&) = default;
};

struct ExperimentSpec {
    std::string name = "figure1";
    /// Figures 1/2 and the rate study use the first entry; figure 3 sweeps
    /// every entry.
    std::vector<SigmaSpec> sigmas = {SigmaSpec{}};
    std::vector<std::size_t> p_values = {5, 10, 15, 20, 25, 30};
    std::size_t n = 200;
    std::vector<std::size_t> n_values = {250, 1000, 4000, 16000};
    std::size_t trials = 100;
    std::uint64_t seed = 2024;
    std::vector<EstimatorTag> estimators = {EstimatorTag::SampleCov, EstimatorTag::Dith, EstimatorTag::Adap};
    LambdaGrid lambda_grid{0.08, 4.0, 50};
    /// C1 of the global adaptive dither, sqrt(C1 log k) lambda_k.
    double c1 = 0.20;
    /// C1 of the entry-wise adaptive and oracle dithers, C1 sqrt(log k) lambda_k.
    /// Grid optimum on the compound-symmetry matrix at p = 5, n = 200.
    double c1_entrywise = 0.775;
    bool log_offset = false;
    ErrorNorm norm = ErrorNorm::Op;
    /// Report errors divided by ||Sigma||.
    bool relative = false;
    unsigned threads = 1;

    /// Throws InvalidConfig on an unusable spec.
    void validate() const;
};

ExperimentSpec figure1_defaults();
ExperimentSpec figure2_defaults();
ExperimentSpec figure3_defaults();
ExperimentSpec rate_study_defaults();

SymMatrix build_sigma(const SigmaSpec& spec, std::size_t p);

struct ResultRow {
    double sweep = 0.0;
    std::string estimator;
    double mean_error = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
    std::string sweep_name;
    std::vector<ResultRow> rows;
    /// Derived scalars (chosen lambdas, fitted slopes, ...).
    std::map<std::string, double> annotations;

    /// Stable sort by sweep value; rows sharing a sweep value keep their
    /// insertion order.
    void sort_rows();
    /// First row matching (sweep, estimator); throws InvalidArgument if absent.
    const ResultRow& at(double sweep, std::string_view estimator) const;
};

struct MeanSe {
    double mean = 0.0;
    /// Sample standard deviation over sqrt(count); 0 for a single value.
    double std_error = 0.0;
};
MeanSe mean_and_se(std::span<const double> values);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

/// Runs fn(t) for t in [0, trials) on `threads` workers. Each index runs
/// exactly once; callers write into per-index slots, so results never
/// depend on scheduling. The first exception thrown is rethrown.
void for_each_trial(std::size_t trials, unsigned threads, const std::function<void(std::size_t)>& fn);

// Random lanes within one trial. Lane = purpose + kLaneStride * sweep_index.
inline constexpr std::uint16_t kLaneStride = 8;
enum class LanePurpose : std::uint16_t { RawSamples = 0, Dith = 1, Adap = 2, Entrywise = 3, Oracle = 4, Max = 5 };
std::uint16_t lane_for(LanePurpose purpose, std::size_t sweep_index);

/// X_0, ..., X_n for one trial.
std::vector<std::vector<double>> draw_trial_samples(const GaussianModel& model, std::size_t n, std::uint64_t seed,
                                                    std::size_t trial, std::size_t sweep_index);

/// FNV-1a over the raw bytes of the samples; identifies a trial's draw.
std::uint64_t sample_digest(std::span<const std::vector<double>> xs);

struct TrialErrors {
    std::map<EstimatorTag, double> errors;
    /// One error per lambda grid point when Dith is requested.
    std::vector<double> dith_curve;
    std::uint64_t raw_digest = 0;
};

struct TrialSetup {
    const GaussianModel* model = nullptr;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t sweep_index = 0;
    std::vector<EstimatorTag> estimators;
    std::vector<double> lambdas;
    double c1 = 0.2;
    double c1_entrywise = 0.775;
    bool log_offset = false;
    ErrorNorm norm = ErrorNorm::Op;
    /// Errors are divided by this (1 for absolute errors).
    double error_scale = 1.0;
};

/// Draws one trial's raw samples and scores every requested estimator on
/// them. The fixed-lambda grid reuses one dither lane for every lambda, so
/// the grid points differ only in the scale applied to the same uniforms.
TrialErrors evaluate_trial(const TrialSetup& setup, std::size_t trial);

ResultTable run_figure1(const ExperimentSpec& spec);
ResultTable run_figure2(const ExperimentSpec& spec);
ResultTable run_figure3(const ExperimentSpec& spec);

struct GridSearchResult {
    double best = 0.0;
    std::vector<double> grid;
    std::vector<double> mean_errors;
    std::vector<double> std_errors;
};

GridSearchResult grid_search_lambda(const SymMatrix& sigma, std::size_t n, std::span<const double> grid,
                                    std::size_t trials, std::uint64_t seed, unsigned threads = 1);

/// Grid search over C1 for the global adaptive estimator, or for the
/// entry-wise one when `target` is AdapEntrywise.
GridSearchResult grid_search_c1(const SymMatrix& sigma, std::size_t n, std::span<const double> grid,
                                std::size_t trials, std::uint64_t seed, unsigned threads = 1,
                                EstimatorTag target = EstimatorTag::Adap);

/// Mean error per n for the requested estimators on sigmas[0] at p_values[0];
/// annotations carry "slope:<estimator>" from a log-log fit.
ResultTable run_rate_study(const ExperimentSpec& spec);

} // namespace obcov
