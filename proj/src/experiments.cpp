#include "obcov/experiments.hpp"

#include "obcov/error.hpp"
#include "obcov/matrix_io.hpp"
#include "obcov/quantize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace obcov {

namespace {

std::string p_key(const char* prefix, double sweep) {
    return std::string(prefix) + "=" + std::to_string(static_cast<long long>(sweep));
}

std::size_t argmin(std::span<const double> v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

void check(bool ok, const std::string& what) {
    if (!ok) throw Error(Errc::InvalidConfig, what);
}

struct Aggregate {
    std::map<EstimatorTag, MeanSe> single;
    std::vector<MeanSe> dith_curve;
};

Aggregate aggregate(const std::vector<TrialErrors>& trials, const std::vector<EstimatorTag>& estimators,
                    std::size_t grid_points) {
    Aggregate out;
    std::vector<double> column(trials.size());
    for (EstimatorTag tag : estimators) {
        if (tag == EstimatorTag::Dith) continue;
        for (std::size_t t = 0; t < trials.size(); ++t) column[t] = trials[t].errors.at(tag);
        out.single[tag] = mean_and_se(column);
    }
    if (std::find(estimators.begin(), estimators.end(), EstimatorTag::Dith) != estimators.end()) {
        for (std::size_t g = 0; g < grid_points; ++g) {
            for (std::size_t t = 0; t < trials.size(); ++t) column[t] = trials[t].dith_curve[g];
            out.dith_curve.push_back(mean_and_se(column));
        }
    }
    return out;
}

std::vector<TrialErrors> run_trials(const TrialSetup& setup, std::size_t trials, unsigned threads) {
    std::vector<TrialErrors> out(trials);
    for_each_trial(trials, threads, [&](std::size_t t) { out[t] = evaluate_trial(setup, t); });
    return out;
}

TrialSetup make_setup(const ExperimentSpec& spec, const GaussianModel& model, std::size_t sweep_index) {
    TrialSetup setup;
    setup.model = &model;
    setup.n = spec.n;
    setup.seed = spec.seed;
    setup.sweep_index = sweep_index;
    setup.estimators = spec.estimators;
    setup.lambdas = spec.lambda_grid.values();
    setup.c1 = spec.c1;
    setup.c1_entrywise = spec.c1_entrywise;
    setup.log_offset = spec.log_offset;
    setup.norm = spec.norm;
    setup.error_scale = spec.relative ? op_norm(model.sigma()) : 1.0;
    return setup;
}

// Appends one row per estimator in request order; Dith reports the grid point
// with the smallest mean error.
void append_rows(ResultTable& table, double sweep, const std::string& prefix, const ExperimentSpec& spec,
                 const Aggregate& agg, const std::vector<double>& lambdas) {
    for (EstimatorTag tag : spec.estimators) {
        MeanSe m;
        if (tag == EstimatorTag::Dith) {
            std::vector<double> means;
            for (const auto& c : agg.dith_curve) means.push_back(c.mean);
            const std::size_t best = argmin(means);
            m = agg.dith_curve[best];
            table.annotations[prefix + p_key("best_lambda:p", sweep)] = lambdas[best];
        } else {
            m = agg.single.at(tag);
        }
        table.rows.push_back({sweep, prefix + std::string(estimator_name(tag)), m.mean, m.std_error, spec.trials});
    }
}

} // namespace

std::string_view sigma_kind_name(SigmaKind kind) noexcept {
    switch (kind) {
    case SigmaKind::CompoundSymmetry: return "compound";
    case SigmaKind::ScaledCompound: return "scaled";
    case SigmaKind::RandomSpd: return "random";
    case SigmaKind::Custom: return "custom";
    }
    return "unknown";
}

std::vector<double> LambdaGrid::values() const {
    if (points == 0) return {};
    if (points == 1) return {max};
    std::vector<double> v(points);
    for (std::size_t i = 0; i < points; ++i)
        v[i] = min + (max - min) * static_cast<double>(i) / static_cast<double>(points - 1);
    v.back() = max;
    return v;
}

LambdaGrid LambdaGrid::for_sigma(const SymMatrix& sigma, std::size_t points) {
    const double top = 4.0 * max_norm(sigma.matrix());
    return {top / static_cast<double>(points), top, points};
}

void ExperimentSpec::validate() const {
    check(trials >= 1, "trials must be >= 1");
    check(!p_values.empty(), "p_values must be non-empty");
    for (std::size_t p : p_values) check(p >= 1, "p values must be >= 1");
    check(n >= 1, "n must be >= 1");
    check(!sigmas.empty(), "at least one sigma builder is required");
    check(!estimators.empty(), "at least one estimator is required");
    check(lambda_grid.min > 0.0 && lambda_grid.max > lambda_grid.min, "lambda grid needs max > min > 0");
    check(lambda_grid.points >= 2, "lambda grid needs at least 2 points");
    check(c1 > 0.0 && std::isfinite(c1), "c1 must be positive");
    check(c1_entrywise > 0.0 && std::isfinite(c1_entrywise), "c1_entrywise must be positive");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        check(n_values[i] >= 1, "n values must be >= 1");
        if (i > 0) check(n_values[i] > n_values[i - 1], "n_values must be increasing");
    }
    for (const auto& s : sigmas)
        check(s.kind != SigmaKind::Custom || !s.path.empty(), "custom sigma needs a path");
}

ExperimentSpec figure1_defaults() {
    return ExperimentSpec{};
}

ExperimentSpec figure2_defaults() {
    ExperimentSpec spec;
    spec.name = "figure2";
    spec.p_values = {5};
    spec.estimators = {EstimatorTag::Dith, EstimatorTag::Adap, EstimatorTag::SampleCov};
    spec.relative = true;
    return spec;
}

ExperimentSpec figure3_defaults() {
    ExperimentSpec spec;
    spec.name = "figure3";
    spec.sigmas = {SigmaSpec{SigmaKind::CompoundSymmetry, 0, {}}, SigmaSpec{SigmaKind::ScaledCompound, 0, {}}};
    spec.estimators = {EstimatorTag::Adap, EstimatorTag::AdapEntrywise, EstimatorTag::SampleCov};
    return spec;
}

ExperimentSpec rate_study_defaults() {
    ExperimentSpec spec;
    spec.name = "rate-study";
    spec.p_values = {5};
    spec.estimators = {EstimatorTag::Adap, EstimatorTag::SampleCov};
    return spec;
}

SymMatrix build_sigma(const SigmaSpec& spec, std::size_t p) {
    if (p == 0) throw Error(Errc::InvalidArgument, "dimension must be >= 1");
    Matrix m(p, p);
    switch (spec.kind) {
    case SigmaKind::CompoundSymmetry:
    case SigmaKind::ScaledCompound: {
        const bool scaled = spec.kind == SigmaKind::ScaledCompound;
        auto d = [&](std::size_t i) { return (scaled && i > 0) ? 0.1 : 1.0; };
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i; j < p; ++j) {
                const double v = d(i) * (i == j ? 1.0 : 0.2) * d(j);
                m(i, j) = v;
                m(j, i) = v;
            }
        }
        return SymMatrix(std::move(m));
    }
    case SigmaKind::RandomSpd: {
        RngStream rng(spec.seed, 0, 0);
        Matrix b(p, p);
        for (double& v : b.data()) v = rng.normal();
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i; j < p; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < p; ++k) s += b(k, i) * b(k, j);
                const double v = s / static_cast<double>(p) + (i == j ? 0.1 : 0.0);
                m(i, j) = v;
                m(j, i) = v;
            }
        }
        return SymMatrix(std::move(m));
    }
    case SigmaKind::Custom: {
        Matrix c = read_matrix_csv(spec.path);
        if (c.rows() != p || c.cols() != p)
            throw Error(Errc::InvalidConfig, "custom sigma " + spec.path + " is not " + std::to_string(p) + "x" +
                                                 std::to_string(p));
        return SymMatrix(std::move(c));
    }
    }
    throw Error(Errc::InvalidArgument, "unknown sigma kind");
}

void ResultTable::sort_rows() {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.sweep < b.sweep; });
}

const ResultRow& ResultTable::at(double sweep, std::string_view estimator) const {
    for (const auto& r : rows)
        if (r.sweep == sweep && r.estimator == estimator) return r;
    throw Error(Errc::InvalidArgument, "no row for " + std::string(estimator) + " at " + std::to_string(sweep));
}

MeanSe mean_and_se(std::span<const double> values) {
    MeanSe out;
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double count = static_cast<double>(values.size());
    out.mean = sum / count;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std_error = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
    }
    return out;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(Errc::InvalidArgument, "slope fit needs >= 2 paired points");
    const double count = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= count;
    my /= count;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

void for_each_trial(std::size_t trials, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(trials, 1)));
    if (threads <= 1) {
        for (std::size_t t = 0; t < trials; ++t) fn(t);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= trials) return;
            try {
                fn(t);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(trials);
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

std::uint16_t lane_for(LanePurpose purpose, std::size_t sweep_index) {
    const std::size_t lane = static_cast<std::size_t>(purpose) + kLaneStride * sweep_index;
    if (lane > 0xFFFF) throw Error(Errc::InvalidArgument, "sweep index too large for the lane space");
    return static_cast<std::uint16_t>(lane);
}

std::vector<std::vector<double>> draw_trial_samples(const GaussianModel& model, std::size_t n, std::uint64_t seed,
                                                    std::size_t trial, std::size_t sweep_index) {
    RngStream rng(seed, trial, lane_for(LanePurpose::RawSamples, sweep_index));
    std::vector<std::vector<double>> xs(n + 1, std::vector<double>(model.dim()));
    for (auto& x : xs) model.sample_into(rng, x);
    return xs;
}

std::uint64_t sample_digest(std::span<const std::vector<double>> xs) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& x : xs) {
        for (double v : x) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xFF;
                h *= 0x100000001b3ull;
            }
        }
    }
    return h;
}

TrialErrors evaluate_trial(const TrialSetup& setup, std::size_t trial) {
    const GaussianModel& model = *setup.model;
    const SymMatrix& truth = model.sigma();
    const auto xs = draw_trial_samples(model, setup.n, setup.seed, trial, setup.sweep_index);
    const std::span<const std::vector<double>> observed = std::span(xs).subspan(1);

    TrialErrors out;
    out.raw_digest = sample_digest(xs);
    auto score = [&](const SymMatrix& est) { return estimation_error(est, truth, setup.norm) / setup.error_scale; };
    auto rng_for = [&](LanePurpose purpose) {
        return RngStream(setup.seed, trial, lane_for(purpose, setup.sweep_index));
    };

    for (EstimatorTag tag : setup.estimators) {
        switch (tag) {
        case EstimatorTag::SampleCov:
            out.errors[tag] = score(sample_cov(observed));
            break;
        case EstimatorTag::Dith:
            out.dith_curve.clear();
            for (double lambda : setup.lambdas) {
                auto rng = rng_for(LanePurpose::Dith);
                out.dith_curve.push_back(score(estimate_dith(acquire_stream(xs, DitherState::fixed(lambda), rng))));
            }
            break;
        case EstimatorTag::Adap: {
            auto rng = rng_for(LanePurpose::Adap);
            const auto state = DitherState::global_adaptive(setup.c1, setup.log_offset);
            out.errors[tag] = score(estimate_adap(acquire_stream(xs, state, rng)));
            break;
        }
        case EstimatorTag::AdapEntrywise: {
            auto rng = rng_for(LanePurpose::Entrywise);
            const auto state = DitherState::entrywise_adaptive(model.dim(), setup.c1_entrywise, setup.log_offset);
            out.errors[tag] = score(estimate_adap_entrywise(acquire_stream(xs, state, rng)));
            break;
        }
        case EstimatorTag::OracleEntrywise: {
            auto rng = rng_for(LanePurpose::Oracle);
            const auto state = build_oracle_dither(truth, setup.n, setup.c1_entrywise);
            out.errors[tag] = score(estimate_adap_entrywise(acquire_stream(xs, state, rng)));
            break;
        }
        case EstimatorTag::MaxEntrywise: {
            auto rng = rng_for(LanePurpose::Max);
            const auto state = build_max_dither(observed);
            out.errors[tag] = score(estimate_adap_entrywise(acquire_stream(xs, state, rng)));
            break;
        }
        }
    }
    return out;
}

ResultTable run_figure1(const ExperimentSpec& spec) {
    spec.validate();
    ResultTable table;
    table.sweep_name = "p";
    const auto lambdas = spec.lambda_grid.values();
    for (std::size_t pi = 0; pi < spec.p_values.size(); ++pi) {
        const std::size_t p = spec.p_values[pi];
        const GaussianModel model(build_sigma(spec.sigmas.front(), p));
        const auto setup = make_setup(spec, model, pi);
        const auto trials = run_trials(setup, spec.trials, spec.threads);
        append_rows(table, static_cast<double>(p), "", spec, aggregate(trials, spec.estimators, lambdas.size()),
                    lambdas);
    }
    table.sort_rows();
    return table;
}

ResultTable run_figure2(const ExperimentSpec& spec) {
    spec.validate();
    if (std::find(spec.estimators.begin(), spec.estimators.end(), EstimatorTag::Dith) == spec.estimators.end())
        throw Error(Errc::InvalidConfig, "figure 2 sweeps the fixed-lambda estimator; 'dith' must be listed");

    ResultTable table;
    table.sweep_name = "lambda";
    const std::size_t p = spec.p_values.front();
    const GaussianModel model(build_sigma(spec.sigmas.front(), p));
    const auto setup = make_setup(spec, model, 0);
    const auto lambdas = setup.lambdas;
    const auto agg = aggregate(run_trials(setup, spec.trials, spec.threads), spec.estimators, lambdas.size());

    for (std::size_t g = 0; g < lambdas.size(); ++g) {
        for (EstimatorTag tag : spec.estimators) {
            const MeanSe m = tag == EstimatorTag::Dith ? agg.dith_curve[g] : agg.single.at(tag);
            table.rows.push_back({lambdas[g], std::string(estimator_name(tag)), m.mean, m.std_error, spec.trials});
        }
    }
    std::vector<double> means;
    for (const auto& c : agg.dith_curve) means.push_back(c.mean);
    const std::size_t best = argmin(means);
    table.annotations["best_lambda"] = lambdas[best];
    table.annotations["best_lambda_index"] = static_cast<double>(best);
    table.annotations["dith_min"] = means[best];
    table.annotations["dith_at_max_lambda"] = means.back();
    table.sort_rows();
    return table;
}

ResultTable run_figure3(const ExperimentSpec& spec) {
    spec.validate();
    ResultTable table;
    table.sweep_name = "p";
    const auto lambdas = spec.lambda_grid.values();
    for (std::size_t g = 0; g < spec.sigmas.size(); ++g) {
        const std::string prefix = "sigma" + std::to_string(g + 1) + "/";
        for (std::size_t pi = 0; pi < spec.p_values.size(); ++pi) {
            const std::size_t p = spec.p_values[pi];
            const GaussianModel model(build_sigma(spec.sigmas[g], p));
            const auto setup = make_setup(spec, model, g * spec.p_values.size() + pi);
            const auto trials = run_trials(setup, spec.trials, spec.threads);
            append_rows(table, static_cast<double>(p), prefix, spec,
                        aggregate(trials, spec.estimators, lambdas.size()), lambdas);
        }
    }
    table.sort_rows();
    return table;
}

GridSearchResult grid_search_lambda(const SymMatrix& sigma, std::size_t n, std::span<const double> grid,
                                    std::size_t trials, std::uint64_t seed, unsigned threads) {
    if (grid.empty()) throw Error(Errc::InvalidArgument, "lambda grid is empty");
    if (trials == 0) throw Error(Errc::InvalidArgument, "trials must be >= 1");
    const GaussianModel model(sigma);
    TrialSetup setup;
    setup.model = &model;
    setup.n = n;
    setup.seed = seed;
    setup.estimators = {EstimatorTag::Dith};
    setup.lambdas.assign(grid.begin(), grid.end());

    const auto agg = aggregate(run_trials(setup, trials, threads), setup.estimators, grid.size());
    GridSearchResult out;
    out.grid = setup.lambdas;
    for (const auto& c : agg.dith_curve) {
        out.mean_errors.push_back(c.mean);
        out.std_errors.push_back(c.std_error);
    }
    out.best = out.grid[argmin(out.mean_errors)];
    return out;
}

GridSearchResult grid_search_c1(const SymMatrix& sigma, std::size_t n, std::span<const double> grid,
                                std::size_t trials, std::uint64_t seed, unsigned threads, EstimatorTag target) {
    if (grid.empty()) throw Error(Errc::InvalidArgument, "C1 grid is empty");
    if (trials == 0) throw Error(Errc::InvalidArgument, "trials must be >= 1");
    if (target != EstimatorTag::Adap && target != EstimatorTag::AdapEntrywise)
        throw Error(Errc::InvalidArgument, "C1 search applies to 'adap' or 'entrywise'");
    const GaussianModel model(sigma);
    const LanePurpose purpose = target == EstimatorTag::Adap ? LanePurpose::Adap : LanePurpose::Entrywise;

    std::vector<std::vector<double>> errors(trials);
    for_each_trial(trials, threads, [&](std::size_t t) {
        const auto xs = draw_trial_samples(model, n, seed, t, 0);
        for (double c1 : grid) {
            RngStream rng(seed, t, lane_for(purpose, 0));
            if (target == EstimatorTag::Adap) {
                const auto stream = acquire_stream(xs, DitherState::global_adaptive(c1), rng);
                errors[t].push_back(estimation_error(estimate_adap(stream), sigma));
            } else {
                const auto stream = acquire_stream(xs, DitherState::entrywise_adaptive(model.dim(), c1), rng);
                errors[t].push_back(estimation_error(estimate_adap_entrywise(stream), sigma));
            }
        }
    });

    GridSearchResult out;
    out.grid.assign(grid.begin(), grid.end());
    std::vector<double> column(trials);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        for (std::size_t t = 0; t < trials; ++t) column[t] = errors[t][g];
        const MeanSe m = mean_and_se(column);
        out.mean_errors.push_back(m.mean);
        out.std_errors.push_back(m.std_error);
    }
    out.best = out.grid[argmin(out.mean_errors)];
    return out;
}

ResultTable run_rate_study(const ExperimentSpec& spec) {
    spec.validate();
    if (spec.n_values.size() < 2) throw Error(Errc::InvalidConfig, "rate study needs at least two n values");
    for (EstimatorTag tag : spec.estimators)
        if (tag == EstimatorTag::Dith) throw Error(Errc::InvalidConfig, "rate study does not sweep 'dith'");

    ResultTable table;
    table.sweep_name = "n";
    const GaussianModel model(build_sigma(spec.sigmas.front(), spec.p_values.front()));
    std::map<EstimatorTag, std::vector<double>> means;
    std::vector<double> ns;
    for (std::size_t ni = 0; ni < spec.n_values.size(); ++ni) {
        ExperimentSpec at_n = spec;
        at_n.n = spec.n_values[ni];
        const auto setup = make_setup(at_n, model, ni);
        const auto agg = aggregate(run_trials(setup, spec.trials, spec.threads), spec.estimators, 0);
        ns.push_back(static_cast<double>(at_n.n));
        for (EstimatorTag tag : spec.estimators) {
            const MeanSe m = agg.single.at(tag);
            means[tag].push_back(m.mean);
            table.rows.push_back(
                {static_cast<double>(at_n.n), std::string(estimator_name(tag)), m.mean, m.std_error, spec.trials});
        }
    }
    for (EstimatorTag tag : spec.estimators)
        table.annotations["slope:" + std::string(estimator_name(tag))] = log_log_slope(ns, means[tag]);
    table.sort_rows();
    return table;
}

} // namespace obcov
