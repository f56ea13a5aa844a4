#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "softcon/error.hpp"
#include "softcon/stats.hpp"

using namespace softcon;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (auto row : rows) {
        Eigen::Index c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// Plain-loop oracles, independent of Eigen expression code.
std::vector<double> loop_mean(const std::vector<std::vector<double>>& pts, const std::vector<double>& w) {
    std::vector<double> m(pts[0].size(), 0.0);
    for (std::size_t j = 0; j < pts.size(); ++j)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += w[j] * pts[j][i];
    return m;
}

std::vector<std::vector<double>> loop_cov(const std::vector<std::vector<double>>& pts, const std::vector<double>& w,
                                          const std::vector<double>& m) {
    const std::size_t n = m.size();
    std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < pts.size(); ++j)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) c[a][b] += w[j] * (pts[j][a] - m[a]) * (pts[j][b] - m[b]);
    return c;
}

double rel_frobenius(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("cholesky examples") {
    CHECK(cholesky(Matrix::Identity(2, 2)).isApprox(Matrix::Identity(2, 2)));
    CHECK(cholesky(mat({{4, 0}, {0, 9}})).isApprox(mat({{2, 0}, {0, 3}})));
    const Matrix m = mat({{2, 1}, {1, 2}});
    const Matrix l = cholesky(m);
    CHECK(rel_frobenius(l * l.transpose(), m) < 1e-10);
    CHECK(l(0, 1) == 0.0);
}

TEST_CASE("cholesky rejects indefinite and singular input") {
    CHECK_THROWS_AS(cholesky(mat({{1, 2}, {2, 1}})), Error);
    CHECK_THROWS_AS(cholesky(Matrix::Zero(2, 2)), Error);
    try {
        cholesky(mat({{1, 0}, {0, -1}}));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    }
    CHECK_THROWS_AS(cholesky(Matrix::Identity(2, 3)), Error);
}

TEST_CASE("cholesky round-trip on random lower-triangular factors") {
    RngStream rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 1 + trial % 6;
        Matrix l = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < i; ++j) l(i, j) = rng.standard_normal();
            l(i, i) = 0.2 + 2.0 * rng.uniform();
        }
        const Matrix back = cholesky(l * l.transpose());
        CHECK((back - l).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("semidefinite factor tolerates rank deficiency") {
    const Matrix rank_one = mat({{1, 1}, {1, 1}});
    const Matrix l = semidefinite_factor(rank_one);
    CHECK(rel_frobenius(l * l.transpose(), rank_one) < 1e-12);
    CHECK(semidefinite_factor(Matrix::Zero(3, 3)).isZero());
    CHECK_THROWS_AS(semidefinite_factor(mat({{1, 0}, {0, -1}})), Error);
}

TEST_CASE("mvn_sample degenerate, moments and determinism") {
    SUBCASE("zero covariance returns the mean exactly") {
        RngStream rng(1);
        const GaussianSpec g(vec({0.0, 0.0}), Matrix::Zero(2, 2));
        for (const auto& d : mvn_sample(g, 10, rng)) CHECK(d == g.mean);
        RngStream rng2(1);
        const GaussianSpec g2(vec({1.0, 1.0}), Matrix::Zero(2, 2));
        for (const auto& d : mvn_sample(g2, 4, rng2)) CHECK(d == g2.mean);
    }
    SUBCASE("law of large numbers, 3I") {
        RngStream rng(2024);
        const GaussianSpec g(vec({0.0, 0.0}), 3.0 * Matrix::Identity(2, 2));
        const auto draws = mvn_sample(g, 5000, rng);
        Vector mean = Vector::Zero(2);
        for (const auto& d : draws) mean += d;
        mean /= 5000.0;
        CHECK(mean.cwiseAbs().maxCoeff() < 0.1);
        Vector var = Vector::Zero(2);
        for (const auto& d : draws) var += (d - mean).cwiseAbs2();
        var /= 4999.0;
        CHECK(std::abs(var(0) - 3.0) < 0.3);
        CHECK(std::abs(var(1) - 3.0) < 0.3);
    }
    SUBCASE("same seed gives identical draws") {
        const GaussianSpec g(vec({1.0, -2.0}), mat({{2, 0.5}, {0.5, 1}}));
        RngStream a(99), b(99);
        const auto da = mvn_sample(g, 50, a);
        const auto db = mvn_sample(g, 50, b);
        for (std::size_t i = 0; i < da.size(); ++i) CHECK(da[i] == db[i]);
    }
}

TEST_CASE("mvn_sample covariance convergence on a random SPD matrix") {
    RngStream rng(5);
    Matrix a(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) a(i, j) = rng.standard_normal();
    const Matrix spd = a * a.transpose() + 0.5 * Matrix::Identity(3, 3);
    const GaussianSpec g(vec({0.5, -1.0, 2.0}), spd);
    const auto draws = mvn_sample(g, 100000, rng);
    Vector mean = Vector::Zero(3);
    for (const auto& d : draws) mean += d;
    mean /= static_cast<double>(draws.size());
    Matrix cov = Matrix::Zero(3, 3);
    for (const auto& d : draws) cov += (d - mean) * (d - mean).transpose();
    cov /= static_cast<double>(draws.size() - 1);
    CHECK(rel_frobenius(cov, spd) < 0.05);
}

TEST_CASE("derived sub-streams are reproducible and distinct") {
    RngStream a = RngStream::derive(1, "enkf-sample", 3);
    RngStream b = RngStream::derive(1, "enkf-sample", 3);
    RngStream c = RngStream::derive(1, "enkf-sample", 4);
    RngStream d = RngStream::derive(1, "exact-prior", 3);
    const double va = a.standard_normal();
    CHECK(va == b.standard_normal());
    CHECK(va != c.standard_normal());
    CHECK(va != d.standard_normal());
}

TEST_CASE("mvn_logpdf examples") {
    const GaussianSpec unit(vec({0.0}), Matrix::Identity(1, 1));
    CHECK(mvn_logpdf(vec({0.0}), unit) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
    const GaussianSpec half(vec({0.0}), Matrix::Constant(1, 1, 0.5));
    CHECK(mvn_logpdf(vec({0.0}), half) == doctest::Approx(-0.5723649429247001).epsilon(1e-14));
    CHECK(mvn_logpdf(vec({2.0}), half) == doctest::Approx(-0.5723649429247001 - 4.0).epsilon(1e-14));
    CHECK_THROWS_AS(mvn_logpdf(vec({0.0, 0.0}), unit), Error);
}

TEST_CASE("exp(mvn_logpdf) integrates to one") {
    for (double mean : {-1.0, 0.0, 2.5}) {
        const GaussianSpec g(vec({mean}), Matrix::Identity(1, 1));
        // Composite Simpson on [mean-10, mean+10].
        const int n = 2000;
        const double a = mean - 10.0, h = 20.0 / n;
        double s = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            s += w * std::exp(mvn_logpdf(vec({a + i * h}), g));
        }
        CHECK(std::abs(s * h / 3.0 - 1.0) < 1e-3);
    }
}

TEST_CASE("weighted_mean examples") {
    const std::vector<Vector> sym{vec({0, 0}), vec({2, 2})};
    CHECK(weighted_mean(sym, vec({0.5, 0.5})).isApprox(vec({1, 1})));
    const std::vector<Vector> skew{vec({0, 0}), vec({4, 4})};
    CHECK(weighted_mean(skew, vec({0.75, 0.25})).isApprox(vec({1, 1})));
    const std::vector<Vector> one{vec({3, -1})};
    CHECK(weighted_mean(one, vec({1.0})) == vec({3, -1}));
}

TEST_CASE("weighted moments reject bad input") {
    const std::vector<Vector> pts{vec({0, 0}), vec({2, 2})};
    CHECK_THROWS_AS(weighted_mean(pts, vec({0.5, 0.6})), Error);
    CHECK_THROWS_AS(weighted_mean(pts, vec({1.5, -0.5})), Error);
    CHECK_THROWS_AS(weighted_mean(pts, vec({1.0})), Error);
    const std::vector<Vector> ragged{vec({0, 0}), vec({2})};
    CHECK_THROWS_AS(weighted_mean(ragged, vec({0.5, 0.5})), Error);
    try {
        weighted_mean(pts, vec({0.5, 0.6}));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::WeightsNotNormalized);
    }
}

TEST_CASE("weighted_covariance examples") {
    const std::vector<Vector> same{vec({1, 2}), vec({1, 2}), vec({1, 2})};
    CHECK(weighted_covariance(same, vec({0.2, 0.3, 0.5}), vec({1, 2})).isZero());
    const std::vector<Vector> scalar{vec({-1}), vec({1})};
    CHECK(weighted_covariance(scalar, vec({0.5, 0.5}), vec({0})).isApprox(Matrix::Identity(1, 1)));
    const std::vector<Vector> line{vec({-1, 0}), vec({1, 0})};
    CHECK(weighted_covariance(line, vec({0.5, 0.5}), vec({0, 0})).isApprox(mat({{1, 0}, {0, 0}})));
}

TEST_CASE("weighted moments agree with a loop oracle") {
    RngStream rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t count = 1 + static_cast<std::size_t>(rng.uniform() * 100);
        const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform() * 5);
        std::vector<std::vector<double>> raw(count, std::vector<double>(dim));
        std::vector<Vector> pts;
        std::vector<double> w(count);
        double total = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
            for (auto& v : raw[j]) v = 3.0 * rng.standard_normal();
            pts.emplace_back(Eigen::Map<const Vector>(raw[j].data(), static_cast<Eigen::Index>(dim)));
            w[j] = rng.uniform();
            total += w[j];
        }
        for (auto& x : w) x /= total;
        const Vector weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(count));
        if (std::abs(weights.sum() - 1.0) > 1e-12) continue;

        const auto m_ref = loop_mean(raw, w);
        const auto c_ref = loop_cov(raw, w, m_ref);
        const Vector m = weighted_mean(pts, weights);
        const Matrix c = weighted_covariance(pts, weights, m);
        for (std::size_t a = 0; a < dim; ++a) {
            CHECK(std::abs(m(static_cast<Eigen::Index>(a)) - m_ref[a]) < 1e-12);
            for (std::size_t b = 0; b < dim; ++b)
                CHECK(std::abs(c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) - c_ref[a][b]) < 1e-12);
        }
    }
}

TEST_CASE("normalize_log_weights") {
    const Vector w = normalize_log_weights(vec({0.0, -4.0}));
    CHECK(w(0) == doctest::Approx(0.9820137900379085).epsilon(1e-14));
    CHECK(w(1) == doctest::Approx(0.017986209962091555).epsilon(1e-12));

    SUBCASE("shift invariance") {
        const Vector base = vec({-3.0, 0.5, -1e3, 2.0});
        const Vector ref = normalize_log_weights(base);
        for (double shift : {-1e4, -7.5, 0.0, 123.0, 5e5}) {
            const Vector moved = normalize_log_weights((base.array() + shift).matrix());
            CHECK((moved - ref).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("underflow-prone magnitudes stay normalized") {
        const Vector big = vec({-5000.0, -5001.0, -1e300});
        const Vector n = normalize_log_weights(big);
        CHECK(std::abs(n.sum() - 1.0) < 1e-12);
        CHECK(n(0) > n(1));
    }
    SUBCASE("all -inf") {
        const double ninf = -std::numeric_limits<double>::infinity();
        try {
            normalize_log_weights(vec({ninf, ninf}));
            FAIL("expected AllWeightsZero");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::AllWeightsZero);
        }
    }
}

TEST_CASE("GaussianSpec validation") {
    CHECK_NOTHROW(GaussianSpec(vec({0, 0}), Matrix::Zero(2, 2)).validate());
    CHECK_THROWS_AS(GaussianSpec(vec({0, 0}), mat({{1, 0.5}, {0.4, 1}})).validate(), Error);
    CHECK_THROWS_AS(GaussianSpec(vec({0, 0}), Matrix::Identity(3, 3)).validate(), Error);
    CHECK_THROWS_AS(GaussianSpec(vec({0, 0}), mat({{1, 0}, {0, -1}})).validate(), Error);
}

TEST_CASE("effective sample size") {
    CHECK(effective_sample_size(Vector::Constant(4, 0.25)) == doctest::Approx(4.0));
    CHECK(effective_sample_size(vec({1.0, 0.0, 0.0})) == doctest::Approx(1.0));
}
