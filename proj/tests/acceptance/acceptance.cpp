// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include "obcov/cli.hpp"
#include "obcov/estimators.hpp"
#include "obcov/experiments.hpp"
#include "obcov/linalg.hpp"
#include "obcov/quantize.hpp"
#include "obcov/sampling.hpp"
#include "obcov/stream_codec.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace obcov;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SymMatrix sigma1(std::size_t p) { return build_sigma({SigmaKind::CompoundSymmetry, 0, {}}, p); }

// 1. Uniform inputs on [-1, 1]^5 with lambda = 1: the estimate is unbiased
// for I/3. Per-entry variance is 1 - (1/3)^2 = 8/9 on the diagonal and
// (2 + 2/9)/4 = 5/9 off it after symmetrization.
Outcome dither_identity() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t p = 5, n = 1'000'000;
    RngStream raw(101, 0, 0);
    std::vector<std::vector<double>> xs(n + 1);
    for (auto& x : xs) x = bounded_test_vector(p, 1.0, raw);
    RngStream dith(101, 0, 1);
    const SymMatrix est = estimate_dith(acquire_stream(xs, DitherState::fixed(1.0), dith));
    const double elapsed = seconds_since(t0);

    double worst = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double target = i == j ? 1.0 / 3.0 : 0.0;
            const double se = std::sqrt((i == j ? 8.0 / 9.0 : 5.0 / 9.0) / static_cast<double>(n));
            worst = std::max(worst, std::abs(est(i, j) - target) / se);
        }
    }
    return {worst <= 4.0 && elapsed < 60.0, fmt("max deviation %.2f s.e. (limit 4), %.1f s (limit 60)", worst, elapsed)};
}

// 2. Figure 1: sample covariance best everywhere, Adap within [0.8, 1.5] of
// the grid-optimal Dith.
Outcome figure1() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentSpec s = figure1_defaults();
    s.threads = workers();
    const ResultTable t = run_figure1(s);
    const double elapsed = seconds_since(t0);
    bool sample_best = true;
    double lo = 1e9, hi = 0.0;
    for (std::size_t p : s.p_values) {
        const double sample = t.at(p, "sample").mean_error;
        const double dith = t.at(p, "dith").mean_error;
        const double adap = t.at(p, "adap").mean_error;
        sample_best = sample_best && sample < dith && sample < adap;
        lo = std::min(lo, adap / dith);
        hi = std::max(hi, adap / dith);
    }
    const bool ok = sample_best && lo >= 0.8 && hi <= 1.5 && elapsed < 600.0;
    return {ok, fmt("adap/dith in [%.3f, %.3f] (band [0.8, 1.5]), sample smallest at every p %s, %.1f s (limit 600)",
                    lo, hi, sample_best ? "yes" : "no", elapsed)};
}

// 3. Figure 2: U-shaped Dith curve with an interior minimum, Adap close to it.
Outcome figure2() {
    ExperimentSpec s = figure2_defaults();
    s.threads = workers();
    const ResultTable t = run_figure2(s);
    const auto lambdas = s.lambda_grid.values();
    const double best = t.annotations.at("dith_min");
    const auto index = static_cast<std::size_t>(t.annotations.at("best_lambda_index"));
    const double at_max = t.at(lambdas.back(), "dith").mean_error;
    const double adap = t.at(lambdas.front(), "adap").mean_error;
    const bool ok = at_max >= 1.5 * best && index > 0 && index + 1 < lambdas.size() && adap <= 1.3 * best;
    return {ok, fmt("dith(max lambda)/min = %.3f (>= 1.5), argmin index %zu of %zu, adap/min = %.3f (<= 1.3)",
                    at_max / best, index, lambdas.size(), adap / best)};
}

// 4. Figure 3 on the scaled matrix.
Outcome figure3() {
    ExperimentSpec s = figure3_defaults();
    s.threads = workers();
    const ResultTable t = run_figure3(s);
    const double adap_growth = t.at(30, "sigma2/adap").mean_error / t.at(5, "sigma2/adap").mean_error;
    const double entry_growth = t.at(30, "sigma2/entrywise").mean_error / t.at(5, "sigma2/entrywise").mean_error;
    const double vs_sample = t.at(30, "sigma2/entrywise").mean_error / t.at(30, "sigma2/sample").mean_error;
    const bool ok = adap_growth >= 1.5 && entry_growth <= 1.3 && vs_sample <= 2.0;
    return {ok, fmt("adap growth %.3f (>= 1.5), entrywise growth %.3f (<= 1.3), entrywise/sample at p=30 %.3f (<= 2)",
                    adap_growth, entry_growth, vs_sample)};
}

// 5. Log-log slope of the Adap error against n.
Outcome rate() {
    ExperimentSpec s = rate_study_defaults();
    s.threads = workers();
    const ResultTable t = run_rate_study(s);
    const double slope = t.annotations.at("slope:adap");
    return {slope >= -0.65 && slope <= -0.35, fmt("slope %.4f (band [-0.65, -0.35])", slope)};
}

// 6. Constant scales collapse Adap to Dith and entry-wise to Adap, bit for bit.
Outcome reduction_chain() {
    RngStream gen(606, 0);
    int failures = 0;
    const int cases = 1000;
    for (int t = 0; t < cases; ++t) {
        const std::size_t p = 1 + static_cast<std::size_t>(gen() % 16);
        const std::size_t n = 1 + static_cast<std::size_t>(gen() % 64);
        const double lambda = 0.05 + 3.0 * gen.uniform01();
        std::vector<std::vector<double>> xs(n + 1, std::vector<double>(p));
        for (auto& x : xs)
            for (double& v : x) v = 2.0 * gen.normal();
        RngStream rng(607, static_cast<std::uint64_t>(t));
        const SampleStream dith = acquire_stream(xs, DitherState::fixed(lambda), rng);

        SampleStream adap = dith;
        adap.policy = DitherPolicy::GlobalAdaptive;
        adap.header_param = 0.2;
        SampleStream entry = dith;
        entry.policy = DitherPolicy::EntrywiseAdaptive;
        entry.header_param = 0.775;
        for (auto& q : entry.samples) q.scale = std::vector<double>(p, lambda);

        const SymMatrix a = estimate_dith(dith);
        const SymMatrix b = estimate_adap(adap);
        const SymMatrix c = estimate_adap_entrywise(entry);
        if (!(a == b) || !(b == c)) ++failures;
    }
    return {failures == 0, fmt("%d of %d cases differ", failures, cases)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 7. Codec round trips and byte-identical quick reproductions.
Outcome codec_and_determinism() {
    RngStream gen(707, 0);
    int codec_failures = 0;
    for (int t = 0; t < 100; ++t) {
        SampleStream s;
        s.p = 1 + static_cast<std::size_t>(gen() % 40);
        s.policy = static_cast<DitherPolicy>(gen() % 5);
        s.header_param = gen.uniform01();
        const std::size_t n = gen() % 30;
        for (std::size_t k = 0; k < n; ++k) {
            QuantizedSample q{SignVector(s.p), SignVector(s.p), 0.0};
            for (std::size_t i = 0; i < s.p; ++i) {
                q.y.set(i, gen() & 1);
                q.y_bar.set(i, gen() & 1);
            }
            if (is_entrywise(s.policy)) {
                std::vector<double> v(s.p);
                for (double& x : v) x = 4.0 * gen.uniform01();
                q.scale = std::move(v);
            } else {
                q.scale = 4.0 * gen.uniform01();
            }
            s.samples.push_back(std::move(q));
        }
        const auto bytes = encode_stream(s);
        const SampleStream back = decode_stream(bytes);
        if (!(back == s) || encode_stream(back) != bytes) ++codec_failures;
    }

    const fs::path dir = fs::temp_directory_path() / "obcov_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto reproduce = [&](const std::string& name, const std::string& threads) {
        std::ostringstream out, err;
        return run_cli({"obcov", "reproduce", "1", "--quick", "--threads", threads, "--out", (dir / name).string()},
                       out, err);
    };
    const bool ran = reproduce("a.csv", "1") == 0 && reproduce("b.csv", "1") == 0 && reproduce("c.csv", "8") == 0;
    const bool same_runs = ran && slurp(dir / "a.csv") == slurp(dir / "b.csv") &&
                           slurp(dir / "a.json") == slurp(dir / "b.json");
    const bool same_threads = ran && slurp(dir / "a.csv") == slurp(dir / "c.csv") &&
                              slurp(dir / "a.json") == slurp(dir / "c.json");
    fs::remove_all(dir);
    return {codec_failures == 0 && same_runs && same_threads,
            fmt("%d of 100 round trips differ, repeat run identical %s, threads 1 vs 8 identical %s", codec_failures,
                same_runs ? "yes" : "no", same_threads ? "yes" : "no")};
}

// 8. Eigenvalues of 0.8 I + 0.2 J and norms of the all-ones matrix.
Outcome linalg_oracles() {
    const auto eig = sym_eigvals(sigma1(5));
    const std::vector<double> expected{1.8, 0.8, 0.8, 0.8, 0.8};
    double eig_err = 0.0;
    for (std::size_t i = 0; i < 5; ++i) eig_err = std::max(eig_err, std::abs(eig[i] - expected[i]));
    int norm_failures = 0;
    for (std::size_t p = 1; p <= 64; ++p) {
        const Matrix ones = Matrix::constant(p, p, 1.0);
        const double pd = static_cast<double>(p);
        if (op_norm(ones) != pd || fro_norm(ones) != pd || max_norm(ones) != 1.0 || col_norm_1to2(ones) != std::sqrt(pd))
            ++norm_failures;
    }
    return {eig_err <= 1e-10 && norm_failures == 0,
            fmt("eigenvalue error %.2e (limit 1e-10), %d of 64 all-ones sizes off", eig_err, norm_failures)};
}

// 9. Negating X_k, wholly or in part, never changes the scale recorded for
// sample k.
Outcome predictability() {
    RngStream gen(909, 0);
    int failures = 0;
    const int cases = 10000;
    for (int t = 0; t < cases; ++t) {
        const std::size_t p = 1 + static_cast<std::size_t>(gen() % 8);
        const std::size_t n = 1 + static_cast<std::size_t>(gen() % 12);
        const std::size_t k = 1 + static_cast<std::size_t>(gen() % n);
        std::vector<std::vector<double>> xs(n + 1, std::vector<double>(p));
        for (auto& x : xs)
            for (double& v : x) v = 3.0 * gen.normal();

        DitherState state = DitherState::fixed(1.0);
        switch (t % 5) {
        case 0: state = DitherState::fixed(0.1 + gen.uniform01()); break;
        case 1: state = DitherState::global_adaptive(0.2, t % 2 == 0); break;
        case 2: state = DitherState::entrywise_adaptive(p, 0.775); break;
        case 3: state = build_oracle_dither(build_sigma({SigmaKind::RandomSpd, 3, {}}, p), n, 0.775); break;
        default: state = build_max_dither(std::span(xs).subspan(1)); break;
        }

        auto flipped = xs;
        const bool whole = gen() & 1;
        for (std::size_t i = 0; i < p; ++i)
            if (whole || (gen() & 1)) flipped[k][i] = -flipped[k][i];

        RngStream r1(910, static_cast<std::uint64_t>(t)), r2(910, static_cast<std::uint64_t>(t));
        const SampleStream a = acquire_stream(xs, state, r1);
        const SampleStream b = acquire_stream(flipped, state, r2);
        if (!(a.samples[k - 1].scale == b.samples[k - 1].scale)) ++failures;
    }
    return {failures == 0, fmt("%d of %d cases changed the scale", failures, cases)};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"dither identity on bounded inputs", dither_identity},
        {"figure 1 reproduction", figure1},
        {"figure 2 U-shape", figure2},
        {"figure 3 separation on the scaled matrix", figure3},
        {"adaptive error rate in n", rate},
        {"reduction identities", reduction_chain},
        {"codec and determinism", codec_and_determinism},
        {"linear algebra oracles", linalg_oracles},
        {"predictable dither scales", predictability},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
                  << "): " << o.detail << std::endl;
    }
    std::cout << criteria.size() - static_cast<std::size_t>(failed) << " of " << criteria.size()
              << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
