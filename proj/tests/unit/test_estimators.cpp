#include "obcov/error.hpp"
#include "obcov/estimators.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace obcov;

namespace {

SignVector all_plus(std::size_t p) {
    SignVector v(p);
    for (std::size_t i = 0; i < p; ++i) v.set(i, true);
    return v;
}

SampleStream random_signs(std::size_t p, std::size_t n, DitherPolicy policy, RngStream& rng) {
    SampleStream s;
    s.p = p;
    s.policy = policy;
    s.header_param = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        QuantizedSample q{SignVector(p), SignVector(p), 0.0};
        for (std::size_t i = 0; i < p; ++i) {
            q.y.set(i, rng() & 1);
            q.y_bar.set(i, rng() & 1);
        }
        s.samples.push_back(std::move(q));
    }
    return s;
}

// Same signs, every sample at scale `lambda`, in each of the three forms.
void set_scales(SampleStream& s, DitherPolicy policy, double lambda) {
    s.policy = policy;
    s.header_param = policy == DitherPolicy::Fixed ? lambda : 0.2;
    for (auto& q : s.samples) {
        if (is_entrywise(policy))
            q.scale = std::vector<double>(s.p, lambda);
        else
            q.scale = lambda;
    }
}

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an obcov::Error");
    return Errc::InvalidState;
}

} // namespace

TEST_CASE("estimator names") {
    for (auto tag : {EstimatorTag::SampleCov, EstimatorTag::Dith, EstimatorTag::Adap, EstimatorTag::AdapEntrywise,
                     EstimatorTag::OracleEntrywise, EstimatorTag::MaxEntrywise})
        CHECK(parse_estimator(estimator_name(tag)) == tag);
    CHECK(!parse_estimator("bogus"));
    CHECK(parse_norm("fro") == ErrorNorm::Fro);
    CHECK(!parse_norm("l1"));
}

TEST_CASE("sample covariance") {
    const std::vector<std::vector<double>> one{{1.0, 2.0}};
    CHECK(sample_cov(one).matrix() == Matrix(2, 2, {1, 2, 2, 4}));
    const std::vector<std::vector<double>> pm{{1.0, 0.0}, {-1.0, 0.0}};
    CHECK(sample_cov(pm).matrix() == Matrix(2, 2, {1, 0, 0, 0}));
    CHECK(code_of([] { sample_cov(std::vector<std::vector<double>>{}); }) == Errc::EmptyInput);

    Matrix m = Matrix::constant(5, 5, 0.2);
    for (std::size_t i = 0; i < 5; ++i) m(i, i) = 1.0;
    const GaussianModel model{SymMatrix(m)};
    RngStream rng(41, 0);
    std::vector<std::vector<double>> xs(100000);
    for (auto& x : xs) x = model.sample(rng);
    CHECK(max_norm(sample_cov(xs).matrix() - m) <= 0.05);
}

TEST_CASE("fixed-lambda estimator") {
    SampleStream s;
    s.p = 3;
    s.policy = DitherPolicy::Fixed;
    s.header_param = 2.0;
    s.samples.push_back({all_plus(3), all_plus(3), 2.0});
    CHECK(estimate_dith(s).matrix() == Matrix::constant(3, 3, 4.0));

    s.header_param = 1.0;
    s.samples[0] = {all_plus(3), SignVector(3), 1.0};
    CHECK(estimate_dith(s).matrix() == Matrix::constant(3, 3, -1.0));

    CHECK(code_of([&] { estimate_adap(s); }) == Errc::PolicyMismatch);
    CHECK(code_of([&] { estimate_adap_entrywise(s); }) == Errc::PolicyMismatch);
    s.samples.clear();
    CHECK(code_of([&] { estimate_dith(s); }) == Errc::EmptyInput);
}

TEST_CASE("bounded inputs give an unbiased fixed-lambda estimate") {
    const std::size_t p = 3;
    const std::size_t n = 200000;
    RngStream xr(42, 0), dr(42, 1);
    std::vector<std::vector<double>> xs(n + 1);
    for (auto& x : xs) x = bounded_test_vector(p, 1.0, xr);
    const SampleStream s = acquire_stream(xs, DitherState::fixed(1.0), dr);
    const SymMatrix est = estimate_dith(s);
    // Per-entry variance of lambda^2 y_i ybar_j: 1 - E[x_i^2]^2 on the
    // diagonal, 1 off it; symmetrizing two independent entries halves that.
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const double target = i == j ? 1.0 / 3 : 0.0;
            const double var = i == j ? 1.0 - 1.0 / 9 : 0.5 * (1.0 + 1.0 / 9);
            CHECK(std::abs(est(i, j) - target) <= 4 * std::sqrt(var / n));
        }
}

TEST_CASE("global adaptive estimator") {
    RngStream rng(43, 0);
    SUBCASE("a single sample has zero weight") {
        std::vector<std::vector<double>> xs{{1.0, 2.0}, {0.3, -0.7}};
        const SampleStream s = acquire_stream(xs, DitherState::global_adaptive(0.2), rng);
        CHECK(estimate_adap(s).matrix() == Matrix(2, 2));
    }
    SUBCASE("missing scalar scale") {
        SampleStream s = random_signs(2, 3, DitherPolicy::GlobalAdaptive, rng);
        s.samples[1].scale = std::vector<double>{1.0, 1.0};
        CHECK(code_of([&] { estimate_adap(s); }) == Errc::MissingScale);
    }
}

TEST_CASE("reduction chain is bit-exact") {
    RngStream rng(44, 0);
    for (int t = 0; t < 200; ++t) {
        const std::size_t p = 1 + static_cast<std::size_t>(rng() % 12);
        const std::size_t n = 1 + static_cast<std::size_t>(rng() % 40);
        const double lambda = 0.01 + 4 * rng.uniform01();
        SampleStream s = random_signs(p, n, DitherPolicy::Fixed, rng);
        set_scales(s, DitherPolicy::Fixed, lambda);
        const SymMatrix dith = estimate_dith(s);
        set_scales(s, DitherPolicy::GlobalAdaptive, lambda);
        const SymMatrix adap = estimate_adap(s);
        set_scales(s, DitherPolicy::EntrywiseAdaptive, lambda);
        const SymMatrix entry = estimate_adap_entrywise(s);
        REQUIRE(dith == adap);
        REQUIRE(adap == entry);
    }
}

TEST_CASE("estimators agree with a direct double loop") {
    RngStream rng(45, 0);
    for (int t = 0; t < 50; ++t) {
        const std::size_t p = 1 + static_cast<std::size_t>(rng() % 9);
        SampleStream s = random_signs(p, 30, DitherPolicy::EntrywiseAdaptive, rng);
        for (auto& q : s.samples) {
            std::vector<double> v(p);
            for (double& x : v) x = 3 * rng.uniform01();
            q.scale = v;
        }
        CHECK(oracle::max_abs_diff(estimate(s).matrix(), oracle::naive_estimate(s)) <= 1e-12);

        for (auto& q : s.samples) q.scale = 3 * rng.uniform01();
        s.policy = DitherPolicy::GlobalAdaptive;
        CHECK(oracle::max_abs_diff(estimate(s).matrix(), oracle::naive_estimate(s)) <= 1e-12);
    }
}

TEST_CASE("outputs are symmetric and bounded by the mean squared scale") {
    RngStream rng(46, 0);
    for (int t = 0; t < 200; ++t) {
        const std::size_t p = 1 + static_cast<std::size_t>(rng() % 10);
        const std::size_t n = 1 + static_cast<std::size_t>(rng() % 30);
        SampleStream s = random_signs(p, n, DitherPolicy::GlobalAdaptive, rng);
        double bound = 0;
        for (auto& q : s.samples) {
            const double sc = 2 * rng.uniform01();
            q.scale = sc;
            bound += sc * sc;
        }
        bound /= static_cast<double>(n);
        const SymMatrix est = estimate_adap(s);
        REQUIRE(est.matrix().is_symmetric());
        REQUIRE(max_norm(est.matrix()) <= bound * (1 + 1e-12));
    }
}

TEST_CASE("entry-wise estimator") {
    RngStream rng(47, 0);
    SUBCASE("zero-scale coordinate zeroes its row and column") {
        SampleStream s = random_signs(3, 20, DitherPolicy::EntrywiseAdaptive, rng);
        for (auto& q : s.samples) q.scale = std::vector<double>{1.0, 0.0, 2.0};
        const SymMatrix est = estimate_adap_entrywise(s);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(est(1, i) == 0.0);
            CHECK(est(i, 1) == 0.0);
        }
    }
    SUBCASE("bounded inputs with matching scales are unbiased") {
        const std::vector<double> b{0.5, 1.0, 3.0};
        const std::size_t n = 200000;
        RngStream xr(48, 0), dr(48, 1);
        std::vector<std::vector<double>> xs(n + 1, std::vector<double>(3));
        for (auto& x : xs)
            for (std::size_t i = 0; i < 3; ++i) x[i] = b[i] * (2 * xr.uniform01() - 1);
        const SampleStream s = acquire_stream(xs, DitherState::oracle_entrywise(b, 1.0), dr);
        const SymMatrix est = estimate(s);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                const double scale2 = b[i] * b[j] * b[i] * b[j];
                const double target = i == j ? b[i] * b[i] / 3 : 0.0;
                const double var = i == j ? scale2 * (1 - 1.0 / 9) : 0.5 * scale2 * (1 + 1.0 / 9);
                CHECK(std::abs(est(i, j) - target) <= 4 * std::sqrt(var / n));
            }
    }
    SUBCASE("global stream is rejected") {
        SampleStream s = random_signs(2, 2, DitherPolicy::GlobalAdaptive, rng);
        CHECK(code_of([&] { estimate_adap_entrywise(s); }) == Errc::PolicyMismatch);
        s.policy = DitherPolicy::MaxEntrywise;
        CHECK(code_of([&] { estimate_adap_entrywise(s); }) == Errc::MissingScale);
    }
}

TEST_CASE("estimator dispatch") {
    CHECK(estimator_for(DitherPolicy::Fixed) == EstimatorTag::Dith);
    CHECK(estimator_for(DitherPolicy::GlobalAdaptive) == EstimatorTag::Adap);
    CHECK(estimator_for(DitherPolicy::EntrywiseAdaptive) == EstimatorTag::AdapEntrywise);
    CHECK(estimator_for(DitherPolicy::OracleEntrywise) == EstimatorTag::OracleEntrywise);
    CHECK(estimator_for(DitherPolicy::MaxEntrywise) == EstimatorTag::MaxEntrywise);
}

TEST_CASE("masks") {
    const SymMatrix est(Matrix(3, 3, {1, 2, 3, 2, 4, 5, 3, 5, 6}));
    CHECK(apply_mask(est, Matrix::constant(3, 3, 1.0)) == est);
    CHECK(apply_mask(est, Matrix::identity(3)).matrix() == Matrix::diagonal(std::vector<double>{1, 4, 6}));
    Matrix band = Matrix::constant(3, 3, 1.0);
    band(0, 2) = band(2, 0) = 0.0;
    const SymMatrix banded = apply_mask(est, band);
    CHECK(banded(0, 2) == 0.0);
    CHECK(banded(2, 0) == 0.0);
    CHECK(banded(0, 1) == 2.0);

    Matrix asym = Matrix::constant(3, 3, 1.0);
    asym(0, 1) = 0.5;
    CHECK(code_of([&] { apply_mask(est, asym); }) == Errc::MaskAsymmetric);
    CHECK(code_of([&] { apply_mask(est, Matrix::constant(3, 3, 1.5)); }) == Errc::MaskRange);
    CHECK(code_of([&] { apply_mask(est, Matrix::constant(3, 3, -0.1)); }) == Errc::MaskRange);
    CHECK(code_of([&] { apply_mask(est, Matrix::constant(2, 2, 1.0)); }) == Errc::ShapeMismatch);
}

TEST_CASE("masking never increases the max norm") {
    RngStream rng(49, 0);
    for (int t = 0; t < 200; ++t) {
        const std::size_t p = 1 + static_cast<std::size_t>(rng() % 8);
        const SymMatrix e = SymMatrix::symmetrize(oracle::random_matrix(p, p, rng));
        const Matrix r = oracle::random_matrix(p, p, rng);
        const SymMatrix m = SymMatrix::symmetrize(0.5 * (r + Matrix::constant(p, p, 1.0)));
        REQUIRE(max_norm(apply_mask(e, m.matrix()).matrix()) <= max_norm(e.matrix()));
    }
}

TEST_CASE("estimation error") {
    const SymMatrix truth(Matrix(3, 3, {2, 1, 0, 1, 2, 1, 0, 1, 2}));
    for (auto norm : {ErrorNorm::Op, ErrorNorm::Fro, ErrorNorm::Max}) CHECK(estimation_error(truth, truth, norm) == 0.0);

    const SymMatrix shifted(truth.matrix() + 0.1 * Matrix::identity(3));
    const Matrix d = shifted.matrix() - truth.matrix();
    CHECK(estimation_error(shifted, truth, ErrorNorm::Op) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(estimation_error(shifted, truth, ErrorNorm::Max) == max_norm(d));
    CHECK(estimation_error(shifted, truth, ErrorNorm::Fro) == doctest::Approx(0.1 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(code_of([&] { estimation_error(truth, SymMatrix::identity(2)); }) == Errc::ShapeMismatch);
}
