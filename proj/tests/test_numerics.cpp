#include "doctest.h"
#include "nguniv/graph.hpp"
#include "nguniv/numerics.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>

using namespace nguniv;

namespace {

constexpr double kPi = 3.14159265358979323846;

double step(double u) {
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    double a = std::exp(-1 / u), b = std::exp(-1 / (1 - u));
    return a / (a + b);
}

// Cartesian 4D FFT evaluation of an uncorrected constant, written independently of the radial code.
double cartesian_constant(int k, int l, const Pairing& pi, double eps, double h) {
    const double ht = h * h;
    const int n = static_cast<int>(std::ceil(4.2 / h));
    const int nt = static_cast<int>(std::ceil(2.2 / ht));
    const size_t N = static_cast<size_t>(nt) * n * n * n;
    const size_t Nc = static_cast<size_t>(nt) * n * n * (n / 2 + 1);
    const double vol = ht * h * h * h;
    int dims[4] = {nt, n, n, n};
    double* re = fftw_alloc_real(N);
    fftw_complex* cx = fftw_alloc_complex(Nc);
    fftw_plan fwd = fftw_plan_dft_r2c(4, dims, re, cx, FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_c2r(4, dims, cx, re, FFTW_ESTIMATE);
    auto c = [](int i, int m) { return i <= m / 2 ? i : i - m; };
    auto fill = [&](auto f) {
        size_t at = 0;
        for (int a = 0; a < nt; ++a)
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    for (int z = 0; z < n; ++z, ++at) {
                        double r = h * std::sqrt(double(c(x, n) * c(x, n) + c(y, n) * c(y, n) + c(z, n) * c(z, n)));
                        re[at] = f(c(a, nt) * ht, r);
                    }
    };
    auto kernel = [&](double t, double r) {
        if (t < 0 || r == 0) return 0.0;
        double s = std::pow(t * t + r * r * r * r, 0.25);
        return step((1 - s) / 0.5) * heat_kernel_cell(t, r, ht);
    };
    auto forward = [&] {
        fftw_execute(fwd);
        std::vector<std::complex<double>> out(Nc);
        for (size_t i = 0; i < Nc; ++i) out[i] = {cx[i][0] * vol, cx[i][1] * vol};
        return out;
    };
    auto backward = [&](const std::vector<std::complex<double>>& in) {
        for (size_t i = 0; i < Nc; ++i) cx[i][0] = in[i].real(), cx[i][1] = in[i].imag();
        fftw_execute(inv);
        std::vector<double> out(re, re + N);
        for (double& v : out) v /= N * vol;
        return out;
    };
    double mass = 0;
    fill([&](double t, double r) { return bump(t / (eps * eps), r * r / (eps * eps)); });
    for (size_t i = 0; i < N; ++i) mass += re[i] * vol;
    for (size_t i = 0; i < N; ++i) re[i] /= mass;
    auto phi = forward();
    fill(kernel);
    std::vector<double> K(re, re + N);
    auto kh = forward();
    for (size_t i = 0; i < Nc; ++i) kh[i] *= phi[i];
    auto psi = backward(kh);
    auto hat_pow = [&](int a) {
        for (size_t i = 0; i < N; ++i) re[i] = std::pow(psi[i], a);
        return forward();
    };
    std::vector<std::vector<double>> gs;
    for (auto [a, b] : pi) {
        auto A = hat_pow(a), B = hat_pow(b);
        for (size_t i = 0; i < Nc; ++i) B[i] *= std::conj(A[i]);
        auto g = backward(B);
        for (double& v : g) v *= std::pow(eps, 2.5 * (a + b) - 5);
        gs.push_back(std::move(g));
    }
    double sum = 0;
    const size_t slab = static_cast<size_t>(n) * n * n;
    for (int a = 0; a < nt / 2; ++a) {
        int row = a == 0 ? 0 : nt - a;  // v at time -a ht, K(-v) at +a ht
        for (size_t s = 0; s < slab; ++s) {
            double v = K[static_cast<size_t>(a) * slab + s];
            if (v == 0) continue;
            for (auto& g : gs) v *= g[row * slab + s];
            sum += v;
        }
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(re);
    fftw_free(cx);
    return std::pow(eps, 0.5 * (k + l - 4)) * sum * vol;
}

}  // namespace

TEST_CASE("log fit on exact linear data") {
    std::vector<std::pair<double, double>> p;
    for (int e = 1; e <= 5; ++e) {
        double eps = std::pow(2.0, -e);
        p.push_back({eps, 2 * std::log(1 / eps) + 1});
    }
    auto f = fit_log_divergence(p);
    CHECK(f.slope == doctest::Approx(2).epsilon(1e-12).scale(0));
    CHECK(f.intercept == doctest::Approx(1).epsilon(1e-12).scale(0));
    CHECK(f.correlation == doctest::Approx(1).epsilon(1e-12).scale(0));
    p.pop_back();
    p.pop_back();
    CHECK_THROWS_AS(fit_log_divergence(p), std::invalid_argument);
    p.push_back(p.back());
    p.push_back({0.01, 3});
    CHECK_THROWS_AS(fit_log_divergence(p), std::invalid_argument);
}

TEST_CASE("difference helpers") {
    CHECK(differences_shrink({0, 1, 1.5, 1.75}, 0.7));
    CHECK_FALSE(differences_shrink({0, 1, 2, 3}, 0.7));
    CHECK(numeric_log_growth({0, 1, 2, 3}));
    CHECK_FALSE(numeric_log_growth({0, 1, 1.1, 1.11}));
    CHECK_FALSE(numeric_log_growth({0, 1, 0.5, 2}));
}

TEST_CASE("lattice config") {
    auto c = LatticeConfig::for_eps(0.25);
    CHECK(c.h == 0.125);
    CHECK(c.h_t() == c.h * c.h);
    CHECK(c.points() == 32u * 24 * 24 * 24);
    LatticeConfig bad = c;
    bad.d = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.h = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("heat kernel cell averages") {
    // against a fine midpoint rule of the heat kernel over the cell
    const double ht = 1.0 / 256;
    for (double t : {0.0, ht, 3 * ht, 12 * ht, 40 * ht})
        for (double r : {1.0 / 16, 0.1, 0.3}) {
            double a = std::max(0.0, t - ht / 2), b = t + ht / 2, s = 0;
            const int m = 20000;
            for (int i = 0; i < m; ++i) {
                double u = a + (b - a) * (i + 0.5) / m;
                s += std::pow(4 * kPi * u, -1.5) * std::exp(-r * r / (4 * u)) * (b - a) / m;
            }
            CHECK(heat_kernel_cell(t, r, ht) == doctest::Approx(s / ht).epsilon(1e-5).scale(0));
        }
}

TEST_CASE("kernel grid: heat kernel near the origin, zero outside, moments annihilated") {
    const double h = 1.0 / 32;
    auto raw = make_kernel_grid(h, 1.0, false);
    auto K = make_kernel_grid(h, 1.0, true);
    double scale = 0;
    for (int n = 0; n < K.nt; ++n)
        for (int i = 0; i < K.nr; ++i) {
            double t = n * K.h_t, r = i * h;
            double s = std::pow(t * t + r * r * r * r, 0.25);
            if (s <= 0.5 && i > 0) CHECK(K(n, i) == doctest::Approx(heat_kernel_cell(t, r, K.h_t)).epsilon(1e-12).scale(0));
            if (s >= 1) CHECK(K(n, i) == 0);
        }
    for (auto [a, b] : {std::pair{0, 0}, {1, 0}, {0, 1}}) {
        scale = std::abs(raw.moment(a, b));
        CHECK(scale > 1e-3);
        CHECK(std::abs(K.moment(a, b)) < 1e-10 * scale);
    }
    // the correction stays of the order of the kernel it compensates
    for (double c : K.correction) CHECK(std::abs(c) < 10);
}

TEST_CASE("radial and cartesian discretisations converge to a common limit") {
    const double eps = 0.5;
    ConstantConfig coarse, fine;
    coarse.corrected = fine.corrected = false;
    coarse.h_ratio = 0.5;
    fine.h_ratio = 0.25;
    ConstantEstimator rc(eps, coarse), rf(eps, fine);
    for (const Pairing& pi : {Pairing{{1, 1}, {1, 1}}, Pairing{{2, 2}}}) {
        double gap_c = rc.estimate(2, 2, pi) - cartesian_constant(2, 2, pi, eps, eps * coarse.h_ratio);
        double gap_f = rf.estimate(2, 2, pi) - cartesian_constant(2, 2, pi, eps, eps * fine.h_ratio);
        INFO(pairing_to_string(pi), " gaps ", gap_c, " ", gap_f);
        CHECK(std::abs(gap_f) < 0.5 * std::abs(gap_c));
        CHECK(std::abs(gap_f) < 0.25 * std::abs(rf.estimate(2, 2, pi)));
    }
    // frozen values of the radial evaluation (h = eps/4, uncorrected kernel)
    CHECK(rf.estimate(2, 2, {{1, 1}, {1, 1}}) == doctest::Approx(4.67224e-05).epsilon(1e-5).scale(0));
    CHECK(rf.estimate(2, 2, {{2, 2}}) == doctest::Approx(7.455e-06).epsilon(1e-4).scale(0));
}

TEST_CASE("constants: deterministic, validated inputs, grid guard") {
    ConstantEstimator a(0.25), b(0.25);
    CHECK(a.estimate(2, 2, {{1, 1}, {1, 1}}) == b.estimate(2, 2, {{1, 1}, {1, 1}}));
    CHECK_THROWS_AS(a.estimate(2, 2, {{1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(a.estimate(2, 2, {{2, 1}, {0, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(a.estimate(5, 5, {{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}}), std::invalid_argument);
    ConstantConfig tiny;
    tiny.max_points = 1000;
    CHECK_THROWS_AS(ConstantEstimator(0.25, tiny), std::length_error);
    CHECK_THROWS_AS(ConstantEstimator(0), std::invalid_argument);
    // pairwise enters the summed constant with pi! = 2, all-four with 1
    CHECK(summed_constant(a, 2, 2) ==
          doctest::Approx(2 * a.estimate(2, 2, {{1, 1}, {1, 1}}) + a.estimate(2, 2, {{2, 2}})).epsilon(1e-12).scale(0));
}

TEST_CASE("constants: growth pattern matches the symbolic classification") {
    std::vector<std::unique_ptr<ConstantEstimator>> ests;
    for (int e = 2; e <= 5; ++e) ests.push_back(std::make_unique<ConstantEstimator>(std::pow(2.0, -e)));
    std::vector<std::pair<int, Pairing>> cases = {
        {2, {{1, 1}, {1, 1}}}, {2, {{2, 2}}}, {1, {{1, 3}}}};
    for (const auto& [k, pi] : cases) {
        int l = 4 - k;
        std::vector<double> v;
        for (auto& e : ests) v.push_back(e->estimate(k, l, pi));
        auto d = classify_divergence(k, l, pi, 0);
        INFO(k, l, pairing_to_string(pi));
        CHECK(numeric_log_growth(v) == d.log_divergent);
    }
    for (const Pairing& pi : {Pairing{{1, 1}, {1, 1}, {1, 1}}, Pairing{{1, 1}, {2, 2}}, Pairing{{3, 3}}}) {
        std::vector<double> v;
        for (auto& e : ests) v.push_back(e->estimate(3, 3, pi));
        auto d = classify_divergence(3, 3, pi, 0);
        INFO(pairing_to_string(pi));
        CHECK_FALSE(d.log_divergent);
        CHECK(d.theta > ExactValue(0));
        CHECK_FALSE(numeric_log_growth(v));
        auto diff = successive_differences(v);
        CHECK(std::abs(diff.back()) < std::abs(diff.front()));
    }
}

TEST_CASE("noise: determinism, sign symmetry, eps below h") {
    auto cfg = LatticeConfig::for_eps(0.25, 3, 16, 12);
    auto a = sample_noise(cfg, 0.25, 7), b = sample_noise(cfg, 0.25, 7), c = sample_noise(cfg, 0.25, 8);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    auto f = a.flipped();
    for (size_t i = 0; i < a.values.size(); ++i) REQUIRE(f.values[i] == -a.values[i]);
    CHECK_THROWS_AS(sample_noise(cfg, 0.1, 1), std::invalid_argument);
    // odd cumulants change sign under the flip, even ones do not
    std::vector<NoiseFieldSample> s{a, c}, sf{a.flipped(), c.flipped()};
    std::vector<std::vector<Offset>> lag3{{Offset{1, {0, 0, 0}}, Offset{0, {1, 0, 0}}}};
    CHECK(empirical_cumulants(sf, 3, lag3)[0].value == doctest::Approx(-empirical_cumulants(s, 3, lag3)[0].value).scale(0));
    CHECK(covariance_at(sf, Offset{}).value == doctest::Approx(covariance_at(s, Offset{}).value).scale(0));
    CHECK_THROWS_AS(empirical_cumulants({a}, 2, {{Offset{}}}), std::invalid_argument);
    CHECK_THROWS_AS(empirical_cumulants(s, 7, {{}}), std::invalid_argument);
    CHECK_THROWS_AS(empirical_cumulants(s, 3, {{Offset{}}}), std::invalid_argument);
}

TEST_CASE("noise: cumulant contract on pooled samples") {
    const double eps = 0.25;
    auto cfg = LatticeConfig::for_eps(eps);
    auto samples = sample_noise_batch(cfg, eps, 2024, 16);
    auto integral = covariance_integral(samples);
    CHECK(std::abs(integral.value - 1) < 0.05);
    CHECK(covariance_at(samples, Offset{}).value > 0);
    std::vector<std::vector<Offset>> lags = {{Offset{}, Offset{}},
                                             {Offset{1, {0, 0, 0}}, Offset{0, {1, 0, 0}}},
                                             {Offset{0, {1, 0, 0}}, Offset{0, {0, 1, 0}}},
                                             {Offset{2, {1, 0, 0}}, Offset{-1, {0, 0, 1}}},
                                             {Offset{0, {1, 1, 0}}, Offset{3, {0, 0, 0}}}};
    for (auto e : empirical_cumulants(samples, 3, lags)) CHECK(std::abs(e.z()) < 4);
    // beyond twice the bump radius the field decorrelates
    for (int m : {6, 8, 10}) CHECK(std::abs(covariance_at(samples, Offset{0, {m, 0, 0}}).z()) < 4);
    CHECK(std::abs(covariance_at(samples, Offset{20, {0, 0, 0}}).z()) < 4);
    // shot noise is far from Gaussian, the surrogate is not
    auto k4 = empirical_cumulants(samples, 4, {{Offset{}, Offset{}, Offset{}}});
    CHECK(k4[0].z() > 10);
    auto gauss = sample_noise_batch(cfg, eps, 77, 16, NoiseModel::Gaussian);
    for (auto e : empirical_cumulants(gauss, 4, {{Offset{}, Offset{}, Offset{}}, {Offset{0, {1, 0, 0}}, Offset{1, {0, 0, 0}}, Offset{0, {0, 1, 0}}}}))
        CHECK(std::abs(e.z()) < 4);
}

TEST_CASE("psi moments") {
    const double eps = 0.25;
    auto samples = sample_noise_batch(LatticeConfig::for_eps(eps), eps, 5, 8);
    auto pm = estimate_psi_moments(samples);
    REQUIRE(pm.m.size() == 9);
    for (int j : {1, 3, 5, 7}) CHECK(std::abs(pm.m[j]) < 4 * pm.stderr_[j] + 1e-12);
    for (int j : {2, 4, 6, 8}) CHECK(pm.m[j] > 0);
    // self-similar lattices: the variance grows like 1/eps
    auto finer = estimate_psi_moments(sample_noise_batch(LatticeConfig::for_eps(eps / 2), eps / 2, 5, 8));
    CHECK(finer.m[2] > 1.5 * pm.m[2]);
    // W_2 built from one half, averaged against the other half
    std::vector<NoiseFieldSample> A(samples.begin(), samples.begin() + 4), B(samples.begin() + 4, samples.end());
    auto mA = estimate_psi_moments(A).sequence(), mB = estimate_psi_moments(B).sequence();
    auto avg = averaged_potential(wick_polynomial(2, mA), mB);
    CHECK(avg.coeff(2) == 1);
    CHECK(std::abs(rational_to_double(avg.coeff(0))) < 0.1 * pm.m[2]);
    CHECK(std::abs(rational_to_double(avg.coeff(1))) < 0.1 * std::sqrt(pm.m[2]));
    auto d1 = LatticeConfig::for_eps(eps, 1, 64, 64);
    CHECK_THROWS_AS(estimate_psi_moments(sample_noise_batch(d1, eps, 1, 2)), std::invalid_argument);
}
