#include "nguniv/numerics.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace nguniv {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

int wrap(int i, int n) { return ((i % n) + n) % n; }

size_t index_of(const LatticeConfig& c, int t, const std::array<int, 3>& x) {
    size_t at = static_cast<size_t>(wrap(t, c.n_time));
    for (int i = 0; i < c.d; ++i) at = at * c.n_space + wrap(x[i], c.n_space);
    return at;
}

struct Footprint {
    std::vector<Offset> offsets;
    std::vector<double> weights;
};

// lattice bump of width eps with unit discrete mass
Footprint lattice_bump(const LatticeConfig& c, double eps) {
    const int tw = static_cast<int>(std::ceil(eps * eps / c.h_t()));
    const int xw = static_cast<int>(std::ceil(eps / c.h));
    if (2 * tw + 1 > c.n_time || 2 * xw + 1 > c.n_space)
        throw std::invalid_argument("sample_noise: bump of width eps does not fit on the lattice");
    Footprint f;
    double mass = 0;
    const int y = c.d == 3 ? xw : 0;
    for (int n = -tw; n <= tw; ++n)
        for (int a = -xw; a <= xw; ++a)
            for (int b = -y; b <= y; ++b)
                for (int e = -y; e <= y; ++e) {
                    double r2 = (a * a + b * b + e * e) * c.h * c.h / (eps * eps);
                    double v = bump(n * c.h_t() / (eps * eps), r2);
                    if (v <= 0) continue;
                    f.offsets.push_back({n, {a, b, e}});
                    f.weights.push_back(v);
                    mass += v * c.cell_volume();
                }
    for (double& w : f.weights) w /= mass;
    return f;
}

void check_samples(const std::vector<NoiseFieldSample>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("need at least 2 samples");
    const auto& c = samples[0].cfg;
    for (const auto& s : samples) {
        if (s.cfg.d != c.d || s.cfg.n_time != c.n_time || s.cfg.n_space != c.n_space || s.cfg.h != c.h ||
            s.eps != samples[0].eps)
            throw std::invalid_argument("samples come from different lattices");
        if (s.values.size() != c.points()) throw std::invalid_argument("sample has the wrong size");
    }
}

// Leave-one-out jackknife of f applied to pooled sums.
template <class F>
Estimate jackknife(const std::vector<std::vector<double>>& sums, const std::vector<double>& counts, F f) {
    const size_t S = sums.size(), K = sums[0].size();
    std::vector<double> total(K, 0.0);
    double n = 0;
    for (size_t s = 0; s < S; ++s) {
        for (size_t j = 0; j < K; ++j) total[j] += sums[s][j];
        n += counts[s];
    }
    std::vector<double> pooled(K);
    for (size_t j = 0; j < K; ++j) pooled[j] = total[j] / n;
    Estimate e;
    e.value = f(pooled);
    std::vector<double> loo(S);
    double mean = 0;
    for (size_t s = 0; s < S; ++s) {
        std::vector<double> p(K);
        for (size_t j = 0; j < K; ++j) p[j] = (total[j] - sums[s][j]) / (n - counts[s]);
        loo[s] = f(p);
        mean += loo[s] / S;
    }
    double var = 0;
    for (double v : loo) var += (v - mean) * (v - mean);
    e.stderr_ = std::sqrt(var * (S - 1) / S);
    return e;
}

template <class Fn>
void parallel_for(int count, int threads, Fn fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (int i = t; i < count; i += threads) fn(i);
        });
    for (auto& th : pool) th.join();
}

std::vector<int> dims_of(const LatticeConfig& c) {
    std::vector<int> dims{c.n_time};
    for (int i = 0; i < c.d; ++i) dims.push_back(c.n_space);
    return dims;
}

}  // namespace

double bump(double t, double r2) {
    if (r2 >= 1 || t * t >= 1) return 0;
    double a = 1 - r2, b = 1 - t * t;
    return a * a * b * b;
}

double NoiseFieldSample::at(const Offset& z) const { return values[index_of(cfg, z.t, z.x)]; }

NoiseFieldSample NoiseFieldSample::flipped() const {
    NoiseFieldSample s = *this;
    for (double& v : s.values) v = -v;
    return s;
}

NoiseFieldSample sample_noise(const LatticeConfig& cfg, double eps, uint64_t seed, NoiseModel model) {
    cfg.validate();
    if (!(eps >= cfg.h)) throw std::invalid_argument("sample_noise: eps must be at least the lattice step h");
    const Footprint fp = lattice_bump(cfg, eps);
    NoiseFieldSample out;
    out.cfg = cfg;
    out.seed = seed;
    out.eps = eps;
    out.model = model;
    out.intensity = std::pow(eps, -(2.0 + cfg.d));
    out.values.assign(cfg.points(), 0.0);

    std::mt19937_64 rng(seed);
    const double mean = out.intensity * cfg.cell_volume();
    std::poisson_distribution<long> half(mean / 2);
    std::normal_distribution<double> gauss(0.0, std::sqrt(mean));
    const double amp = std::pow(eps, (2.0 + cfg.d) / 2);
    const size_t N = cfg.points();
    const int S = cfg.n_space;
    for (size_t c = 0; c < N; ++c) {
        double q = model == NoiseModel::Poisson ? static_cast<double>(half(rng) - half(rng)) : gauss(rng);
        if (q == 0) continue;
        // decode c into (t, x)
        size_t rest = c;
        std::array<int, 3> x{0, 0, 0};
        for (int i = cfg.d - 1; i >= 0; --i) {
            x[i] = static_cast<int>(rest % S);
            rest /= S;
        }
        int t = static_cast<int>(rest);
        for (size_t j = 0; j < fp.offsets.size(); ++j) {
            const auto& o = fp.offsets[j];
            std::array<int, 3> y{x[0] + o.x[0], x[1] + o.x[1], x[2] + o.x[2]};
            out.values[index_of(cfg, t + o.t, y)] += amp * q * fp.weights[j];
        }
    }
    return out;
}

std::vector<NoiseFieldSample> sample_noise_batch(const LatticeConfig& cfg, double eps, uint64_t seed, int count,
                                                 NoiseModel model, int threads) {
    if (count < 1) throw std::invalid_argument("sample_noise_batch: count must be positive");
    std::vector<NoiseFieldSample> out(count);
    parallel_for(count, numerics_threads(threads), [&](int i) { out[i] = sample_noise(cfg, eps, seed + i, model); });
    return out;
}

std::vector<Estimate> empirical_cumulants(const std::vector<NoiseFieldSample>& samples, int order,
                                          const std::vector<std::vector<Offset>>& lags) {
    check_samples(samples);
    if (order < 2 || order > 6) throw std::invalid_argument("empirical_cumulants: order must be in 2..6");
    const auto& cfg = samples[0].cfg;
    const int S = cfg.n_space;
    const uint32_t masks = 1u << order;
    std::vector<Estimate> out;
    for (const auto& config : lags) {
        if (static_cast<int>(config.size()) != order - 1)
            throw std::invalid_argument("empirical_cumulants: each lag configuration needs order-1 offsets");
        std::vector<Offset> pts{Offset{}};
        pts.insert(pts.end(), config.begin(), config.end());
        std::vector<std::vector<double>> sums(samples.size(), std::vector<double>(masks, 0.0));
        std::vector<double> counts(samples.size(), 0.0);
        for (size_t s = 0; s < samples.size(); ++s) {
            const auto& v = samples[s].values;
            std::vector<double> prod(masks), val(order);
            const int ny = cfg.d == 3 ? S : 1;
            for (int t = 0; t < cfg.n_time; ++t)
                for (int a = 0; a < S; ++a)
                    for (int b = 0; b < ny; ++b)
                        for (int e = 0; e < ny; ++e) {
                            for (int i = 0; i < order; ++i)
                                val[i] = v[index_of(cfg, t + pts[i].t, {a + pts[i].x[0], b + pts[i].x[1], e + pts[i].x[2]})];
                            prod[0] = 1;
                            for (uint32_t m = 1; m < masks; ++m) {
                                int low = __builtin_ctz(m);
                                prod[m] = prod[m & (m - 1)] * val[low];
                            }
                            for (uint32_t m = 1; m < masks; ++m) sums[s][m] += prod[m];
                        }
            counts[s] = static_cast<double>(cfg.points());
        }
        auto cumulant = [&](const std::vector<double>& mom) {
            std::map<Multiset, double> table;
            for (uint32_t m = 1; m < masks; ++m) {
                Multiset b;
                for (int i = 0; i < order; ++i)
                    if (m >> i & 1u) b.push_back(i);
                table[b] = mom[m];
            }
            Multiset all;
            for (int i = 0; i < order; ++i) all.push_back(i);
            return moments_to_cumulants_t<double>(table).at(all);
        };
        Estimate e = jackknife(sums, counts, cumulant);
        if (!std::isfinite(e.value) || (e.stderr_ == 0 && e.value == 0))
            throw std::invalid_argument("empirical_cumulants: degenerate sample set");
        out.push_back(e);
    }
    return out;
}

Estimate covariance_at(const std::vector<NoiseFieldSample>& samples, const Offset& lag) {
    return empirical_cumulants(samples, 2, {{lag}}).at(0);
}

Estimate covariance_integral(const std::vector<NoiseFieldSample>& samples) {
    check_samples(samples);
    const auto& cfg = samples[0].cfg;
    const double eps = samples[0].eps;
    const auto dims = dims_of(cfg);
    const size_t N = cfg.points();
    const size_t Nc = N / dims.back() * (dims.back() / 2 + 1);
    double* in = fftw_alloc_real(N);
    fftw_complex* spec = fftw_alloc_complex(Nc);
    fftw_plan fwd, inv;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fwd = fftw_plan_dft_r2c(static_cast<int>(dims.size()), dims.data(), in, spec, FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r(static_cast<int>(dims.size()), dims.data(), spec, in, FFTW_ESTIMATE);
    }
    // lags where two bumps of width eps overlap
    std::vector<size_t> window;
    const int S = cfg.n_space;
    const int ny = cfg.d == 3 ? S : 1;
    for (int t = 0; t < cfg.n_time; ++t)
        for (int a = 0; a < S; ++a)
            for (int b = 0; b < ny; ++b)
                for (int e = 0; e < ny; ++e) {
                    auto centred = [](int i, int n) { return i <= n / 2 ? i : i - n; };
                    double tt = centred(t, cfg.n_time) * cfg.h_t();
                    double xa = centred(a, S) * cfg.h, xb = centred(b, ny) * cfg.h, xe = centred(e, ny) * cfg.h;
                    if (std::abs(tt) < 2 * eps * eps && xa * xa + xb * xb + xe * xe < 4 * eps * eps)
                        window.push_back(index_of(cfg, t, {a, b, e}));
                }
    std::vector<std::vector<double>> sums(samples.size(), std::vector<double>(1, 0.0));
    std::vector<double> counts(samples.size(), static_cast<double>(N));
    for (size_t s = 0; s < samples.size(); ++s) {
        std::copy(samples[s].values.begin(), samples[s].values.end(), in);
        fftw_execute(fwd);
        for (size_t j = 0; j < Nc; ++j) {
            double p = spec[j][0] * spec[j][0] + spec[j][1] * spec[j][1];
            spec[j][0] = p, spec[j][1] = 0;
        }
        fftw_execute(inv);
        // in[] is N times the circular autocorrelation sum
        double acc = 0;
        for (size_t w : window) acc += in[w];
        sums[s][0] = acc / static_cast<double>(N);
    }
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }
    fftw_free(in);
    fftw_free(spec);
    const double vol = cfg.cell_volume();
    return jackknife(sums, counts, [&](const std::vector<double>& m) { return m[0] * vol; });
}

MomentSequence PsiMoments::sequence(int digits) const {
    std::vector<Rational> out;
    for (size_t j = 0; j < m.size(); ++j) {
        double x = m[j];
        if (j == 0) {
            out.push_back(1);
            continue;
        }
        if (x == 0) {
            out.push_back(0);
            continue;
        }
        int p = digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(x))));
        BigInt ten = 1;
        for (int i = 0; i < std::abs(p); ++i) ten *= 10;
        double scaled = p >= 0 ? x * std::pow(10.0, p) : x / std::pow(10.0, -p);
        Rational q(BigInt(static_cast<long long>(std::llround(scaled))));
        out.push_back(p >= 0 ? Rational(q / ten) : Rational(q * ten));
    }
    return MomentSequence::from_moments(out);
}

PsiMoments estimate_psi_moments(const std::vector<NoiseFieldSample>& samples, int max_order) {
    check_samples(samples);
    const auto& cfg = samples[0].cfg;
    if (cfg.d != 3) throw std::invalid_argument("estimate_psi_moments: stationary mode needs d = 3");
    if (max_order < 1 || max_order > 8) throw std::invalid_argument("estimate_psi_moments: order must be in 1..8");
    const auto dims = dims_of(cfg);
    const size_t N = cfg.points();
    const int S = cfg.n_space, Sh = S / 2 + 1;
    const size_t Nc = static_cast<size_t>(cfg.n_time) * S * S * Sh;
    double* in = fftw_alloc_real(N);
    fftw_complex* spec = fftw_alloc_complex(Nc);
    fftw_plan fwd, inv;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fwd = fftw_plan_dft_r2c(4, dims.data(), in, spec, FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r(4, dims.data(), spec, in, FFTW_ESTIMATE);
    }
    const double h = cfg.h, ht = cfg.h_t();
    auto lam = [&](int m) { return (2 - 2 * std::cos(2 * kPi * m / S)) / (h * h); };
    std::vector<std::vector<double>> sums(samples.size(), std::vector<double>(max_order + 1, 0.0));
    std::vector<double> counts(samples.size(), static_cast<double>(N));
    for (size_t s = 0; s < samples.size(); ++s) {
        std::copy(samples[s].values.begin(), samples[s].values.end(), in);
        fftw_execute(fwd);
        size_t at = 0;
        for (int n = 0; n < cfg.n_time; ++n) {
            // backward Euler in time: (1 - e^{-i w ht}) / ht
            std::complex<double> dt = (1.0 - std::polar(1.0, -2 * kPi * n / cfg.n_time)) / ht;
            for (int a = 0; a < S; ++a)
                for (int b = 0; b < S; ++b)
                    for (int e = 0; e < Sh; ++e, ++at) {
                        std::complex<double> z(spec[at][0], spec[at][1]);
                        if (a == 0 && b == 0 && e == 0) z = 0;
                        else z /= dt + lam(a) + lam(b) + lam(e);
                        z /= static_cast<double>(N);
                        spec[at][0] = z.real(), spec[at][1] = z.imag();
                    }
        }
        fftw_execute(inv);
        for (size_t i = 0; i < N; ++i) {
            double p = 1;
            for (int j = 1; j <= max_order; ++j) {
                p *= in[i];
                sums[s][j] += p;
            }
        }
    }
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }
    fftw_free(in);
    fftw_free(spec);
    PsiMoments out;
    out.points = N * samples.size();
    out.m.assign(max_order + 1, 1.0);
    out.stderr_.assign(max_order + 1, 0.0);
    for (int j = 1; j <= max_order; ++j) {
        Estimate e = jackknife(sums, counts, [j](const std::vector<double>& m) { return m[j]; });
        out.m[j] = e.value;
        out.stderr_[j] = e.stderr_;
    }
    return out;
}

NoiseContract check_noise_contract(const std::vector<NoiseFieldSample>& samples, double z_max, double norm_tol) {
    check_samples(samples);
    const auto& cfg = samples[0].cfg;
    const double eps = samples[0].eps;
    NoiseContract c;
    c.lags3 = {{Offset{}, Offset{}},
               {Offset{1, {0, 0, 0}}, Offset{0, {1, 0, 0}}},
               {Offset{0, {1, 0, 0}}, Offset{0, {0, 1, 0}}},
               {Offset{2, {1, 0, 0}}, Offset{-1, {0, 0, 1}}},
               {Offset{0, {1, 1, 0}}, Offset{3, {0, 0, 0}}}};
    c.kappa3 = empirical_cumulants(samples, 3, c.lags3);
    c.variance = empirical_cumulants(samples, 2, {{Offset{}}})[0];
    c.kappa4 = empirical_cumulants(samples, 4, {{Offset{}, Offset{}, Offset{}}})[0];
    c.integral = covariance_integral(samples);
    c.pooled_points = samples.size() * cfg.points();

    const int m0 = static_cast<int>(std::floor(2 * eps / cfg.h)) + 2;
    for (int m : {m0, m0 + 2, m0 + 4})
        if (m < cfg.n_space / 2) c.far_lags.push_back(Offset{0, {m, 0, 0}});
    const int t0 = static_cast<int>(std::floor(2 * eps * eps / cfg.h_t())) + 4;
    if (t0 < cfg.n_time / 2) c.far_lags.push_back(Offset{t0, {0, 0, 0}});
    for (const auto& z : c.far_lags) c.far.push_back(covariance_at(samples, z));

    c.symmetric = true;
    for (const auto& e : c.kappa3) c.symmetric = c.symmetric && std::abs(e.z()) < z_max;
    c.normalised = std::abs(c.integral.value - 1) < norm_tol;
    c.finite_range = !c.far.empty();
    for (const auto& e : c.far) c.finite_range = c.finite_range && std::abs(e.z()) < z_max;
    return c;
}

}  // namespace nguniv
