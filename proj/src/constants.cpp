#include "nguniv/numerics.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace nguniv {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

int good_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int x = m;
        for (int p : {2, 3, 5, 7})
            while (x % p == 0) x /= p;
        if (x == 1) return m;
    }
}

// Functions of (t, |x|) in three space dimensions. Space: DST-I of r f(r) on r = i h, i = 1..nr.
// Time: periodic real FFT of length nt.
class RadialSpectral {
public:
    RadialSpectral(int nt, int nr, double h, double ht) : nt_(nt), nr_(nr), h_(h), ht_(ht) {
        ntc_ = nt / 2 + 1;
        real_ = fftw_alloc_real(static_cast<size_t>(nt) * nr);
        cplx_ = fftw_alloc_complex(static_cast<size_t>(ntc_) * nr);
        if (!real_ || !cplx_) throw std::runtime_error("estimate_constant: out of memory");
        std::lock_guard<std::mutex> lock(plan_mutex());
        int n[1] = {nr};
        fftw_r2r_kind kind[1] = {FFTW_RODFT00};
        dst_ = fftw_plan_many_r2r(1, n, nt, real_, nullptr, 1, nr, real_, nullptr, 1, nr, kind, FFTW_ESTIMATE);
        int m[1] = {nt};
        fwd_ = fftw_plan_many_dft_r2c(1, m, nr, real_, nullptr, nr, 1, cplx_, nullptr, nr, 1, FFTW_ESTIMATE);
        inv_ = fftw_plan_many_dft_c2r(1, m, nr, cplx_, nullptr, nr, 1, real_, nullptr, nr, 1, FFTW_ESTIMATE);
        if (!dst_ || !fwd_ || !inv_) throw std::runtime_error("estimate_constant: FFT planning failed");
        R_ = (nr + 1) * h;
    }
    ~RadialSpectral() {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(dst_);
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(cplx_);
    }

    size_t real_size() const { return static_cast<size_t>(nt_) * nr_; }
    size_t cplx_size() const { return static_cast<size_t>(ntc_) * nr_; }
    double* real() { return real_; }
    std::complex<double>* cplx() { return reinterpret_cast<std::complex<double>*>(cplx_); }

    // real() holds f(t_n, r_i) at [n * nr + (i - 1)]; result lands in cplx()
    void forward() {
        for (int n = 0; n < nt_; ++n)
            for (int i = 0; i < nr_; ++i) real_[static_cast<size_t>(n) * nr_ + i] *= (i + 1) * h_;
        fftw_execute(dst_);
        for (int n = 0; n < nt_; ++n)
            for (int j = 0; j < nr_; ++j) real_[static_cast<size_t>(n) * nr_ + j] *= 2 * kPi * h_ * ht_ / k(j);
        fftw_execute(fwd_);
    }

    // cplx() holds a transform; result lands in real()
    void inverse() {
        fftw_execute(inv_);
        for (int n = 0; n < nt_; ++n)
            for (int j = 0; j < nr_; ++j) real_[static_cast<size_t>(n) * nr_ + j] *= k(j) / (nt_ * ht_);
        fftw_execute(dst_);
        for (int n = 0; n < nt_; ++n)
            for (int i = 0; i < nr_; ++i) real_[static_cast<size_t>(n) * nr_ + i] /= 4 * kPi * R_ * (i + 1) * h_;
    }

    int nt() const { return nt_; }
    int nr() const { return nr_; }
    int ntc() const { return ntc_; }

private:
    double k(int j) const { return (j + 1) * kPi / R_; }

    int nt_, nr_, ntc_;
    double h_, ht_, R_;
    double* real_;
    fftw_complex* cplx_;
    fftw_plan dst_, fwd_, inv_;
};

}  // namespace

struct ConstantEstimator::Impl {
    double eps, h, ht;
    ConstantConfig cfg;
    KernelGrid kernel;
    RadialSpectral* fft = nullptr;
    std::vector<double> psi;                                     // psi on the full grid
    std::map<int, std::vector<std::complex<double>>> power_hat;  // transforms of psi^a
    std::map<std::pair<int, int>, std::vector<double>> blocks;   // G on t = -n ht, n < kernel.nt

    ~Impl() { delete fft; }

    const std::vector<std::complex<double>>& hat(int a) {
        auto it = power_hat.find(a);
        if (it != power_hat.end()) return it->second;
        double* f = fft->real();
        for (size_t s = 0; s < fft->real_size(); ++s) f[s] = std::pow(psi[s], a);
        fft->forward();
        auto& out = power_hat[a];
        out.assign(fft->cplx(), fft->cplx() + fft->cplx_size());
        return out;
    }

    // a legs at the root, b at the integrated vertex
    const std::vector<double>& block(int a, int b) {
        auto key = std::make_pair(a, b);
        auto it = blocks.find(key);
        if (it != blocks.end()) return it->second;
        const auto& A = hat(a);
        const auto& B = hat(b);
        std::complex<double>* c = fft->cplx();
        for (size_t s = 0; s < fft->cplx_size(); ++s) c[s] = B[s] * std::conj(A[s]);
        fft->inverse();
        const double scale = std::pow(eps, 2.5 * (a + b) - 5);
        const int nt = fft->nt(), nr = fft->nr();
        auto& g = blocks[key];
        g.assign(static_cast<size_t>(kernel.nt) * nr, 0.0);
        for (int n = 0; n < kernel.nt; ++n) {
            int row = n == 0 ? 0 : nt - n;
            for (int i = 0; i < nr; ++i)
                g[static_cast<size_t>(n) * nr + i] = scale * fft->real()[static_cast<size_t>(row) * nr + i];
        }
        return g;
    }
};

ConstantEstimator::ConstantEstimator(double eps, const ConstantConfig& cfg) : impl_(new Impl) {
    auto& I = *impl_;
    if (!(eps > 0) || eps > 1) {
        delete impl_;
        throw std::invalid_argument("estimate_constant: eps must lie in (0, 1]");
    }
    if (!(cfg.h_ratio > 0 && cfg.h_ratio <= 1) || !(cfg.kernel_radius > 0)) {
        delete impl_;
        throw std::invalid_argument("estimate_constant: bad configuration");
    }
    I.eps = eps;
    I.cfg = cfg;
    I.h = cfg.h_ratio * eps;
    I.ht = I.h * I.h;
    const double R = cfg.kernel_radius;
    // block correlations reach 2R + 2 eps in r and must not fold back onto r <= R
    const int M = static_cast<int>(std::ceil((1.5 * R + 2 * eps + 2 * I.h) / I.h));
    const int nr = M - 1;
    const int nt = good_size(static_cast<int>(std::ceil((2 * R * R + 4 * eps * eps) / I.ht)) + 8);
    if (static_cast<size_t>(nt) * nr > cfg.max_points) {
        delete impl_;
        throw std::length_error("estimate_constant: grid of " + std::to_string(static_cast<size_t>(nt) * nr) +
                                " points exceeds the limit " + std::to_string(cfg.max_points));
    }
    try {
        I.kernel = make_kernel_grid(I.h, R, cfg.corrected, nr + 1);
        I.fft = new RadialSpectral(nt, nr, I.h, I.ht);
        const size_t N = I.fft->real_size();
        double* f = I.fft->real();

        // mollifier, normalised to unit mass with the same quadrature
        std::fill(f, f + N, 0.0);
        const int tw = static_cast<int>(std::ceil(eps * eps / I.ht));
        double mass = 0;
        for (int n = -tw; n <= tw; ++n) {
            int row = (n + nt) % nt;
            for (int i = 1; i <= nr; ++i) {
                double r = i * I.h;
                double v = bump(n * I.ht / (eps * eps), r * r / (eps * eps));
                f[static_cast<size_t>(row) * nr + i - 1] = v;
                mass += v * 4 * kPi * r * r * I.h * I.ht;
            }
        }
        if (!(mass > 0)) throw std::runtime_error("estimate_constant: mollifier not resolved");
        for (size_t s = 0; s < N; ++s) f[s] /= mass;
        I.fft->forward();
        std::vector<std::complex<double>> phi_hat(I.fft->cplx(), I.fft->cplx() + I.fft->cplx_size());

        std::fill(f, f + N, 0.0);
        for (int n = 0; n < I.kernel.nt; ++n)
            for (int i = 1; i < I.kernel.nr && i <= nr; ++i) f[static_cast<size_t>(n) * nr + i - 1] = I.kernel(n, i);
        I.fft->forward();
        std::complex<double>* c = I.fft->cplx();
        for (size_t s = 0; s < I.fft->cplx_size(); ++s) c[s] *= phi_hat[s];
        I.fft->inverse();
        I.psi.assign(f, f + N);
    } catch (...) {
        delete impl_;
        throw;
    }
}

ConstantEstimator::~ConstantEstimator() { delete impl_; }

double ConstantEstimator::eps() const { return impl_->eps; }

size_t ConstantEstimator::grid_points() const { return impl_->fft->real_size(); }

double ConstantEstimator::estimate(int k, int l, const Pairing& pi) {
    auto& I = *impl_;
    if (k < 1 || l < 1 || k + l > 8) throw std::invalid_argument("estimate_constant: (k, l) outside 1 <= k, l and k + l <= 8");
    int sk = 0, sl = 0;
    for (auto [a, b] : pi) {
        if (a < 1 || b < 1 || (a + b) % 2) throw std::invalid_argument("estimate_constant: unrecognized pairing " + pairing_to_string(pi));
        sk += a, sl += b;
    }
    if (sk != k || sl != l) throw std::invalid_argument("estimate_constant: pairing does not match (k, l)");
    std::vector<const std::vector<double>*> gs;
    for (auto [a, b] : pi) gs.push_back(&I.block(a, b));
    const int nr = I.fft->nr();
    double sum = 0;
    for (int n = 0; n < I.kernel.nt; ++n) {
        for (int i = 1; i < I.kernel.nr && i <= nr; ++i) {
            double kv = I.kernel(n, i);
            if (kv == 0) continue;
            double r = i * I.h;
            double v = kv * 4 * kPi * r * r;
            size_t at = static_cast<size_t>(n) * nr + i - 1;
            for (auto* g : gs) v *= (*g)[at];
            sum += v;
        }
    }
    return std::pow(I.eps, 0.5 * (k + l - 4)) * sum * I.h * I.ht;
}

double summed_constant(ConstantEstimator& est, int k, int l) {
    double s = 0;
    for (const auto& pi : enumerate_pairings(k, l)) {
        bool straddles = true;
        for (auto [a, b] : pi) straddles = straddles && a > 0 && b > 0 && (a + b) % 2 == 0;
        if (straddles) s += static_cast<double>(pairing_multiplicity(pi, k, l)) * est.estimate(k, l, pi);
    }
    return s;
}

double estimate_constant(int k, int l, const Pairing& pi, double eps, const ConstantConfig& cfg) {
    ConstantEstimator est(eps, cfg);
    return est.estimate(k, l, pi);
}

ScheduleReport schedule_from_constants(double a1_hat, double a0_prime, double c_log, const std::vector<double>& eps,
                                       const std::vector<double>& c22, const std::vector<double>& c13) {
    if (eps.size() != c22.size() || eps.size() != c13.size() || eps.size() < 2)
        throw std::invalid_argument("schedule: need matching eps and constant lists");
    ScheduleReport rep;
    rep.c_log = c_log;
    for (size_t i = 0; i < eps.size(); ++i) {
        ScheduleRow row;
        row.eps = eps[i];
        row.c22 = c22[i];
        row.c13 = c13[i];
        row.c_eps = mass_counterterm(std::vector<double>{a1_hat}, {{{1, 3}, c13[i]}, {{2, 2}, c22[i]}});
        row.theta = theta_schedule(a1_hat, a0_prime, c_log, eps[i]);
        row.lambda0 = a0_prime * row.theta / eps[i] - row.c_eps;
        rep.rows.push_back(row);
    }
    for (size_t i = 1; i < rep.rows.size(); ++i) rep.increments.push_back(rep.rows[i].lambda0 - rep.rows[i - 1].lambda0);
    rep.uncancelled = 9 * a1_hat * a1_hat * c_log * std::log(2.0);
    rep.bound = 0.5 * std::abs(rep.uncancelled);
    rep.bounded = true;
    for (double d : rep.increments) rep.bounded = rep.bounded && std::abs(d) <= rep.bound;
    return rep;
}

ScheduleReport numeric_schedule(double a1_hat, double a0_prime, const std::vector<double>& eps, const ConstantConfig& cfg) {
    std::vector<double> c22, c13;
    std::vector<std::pair<double, double>> pts;
    for (double e : eps) {
        ConstantEstimator est(e, cfg);
        c22.push_back(summed_constant(est, 2, 2));
        c13.push_back(summed_constant(est, 1, 3));
        pts.push_back({e, c22.back()});
    }
    double c_log = fit_log_divergence(pts).slope;
    return schedule_from_constants(a1_hat, a0_prime, c_log, eps, c22, c13);
}

}  // namespace nguniv
