#pragma once

#include "nguniv/wick.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nguniv {

// Space-time torus: n_time x n_space^d points, spatial step h, time step h^2.
struct LatticeConfig {
    int d = 3;
    int n_time = 32;
    int n_space = 24;
    double h = 0.0;

    double h_t() const { return h * h; }
    double L() const { return n_space * h; }
    double period_t() const { return n_time * h_t(); }
    size_t points() const;
    double cell_volume() const;
    void validate() const;
    static LatticeConfig for_eps(double eps, int d = 3, int n_time = 32, int n_space = 24);
};

struct Offset {
    int t = 0;
    std::array<int, 3> x{0, 0, 0};
};

enum class NoiseModel { Poisson, Gaussian };

struct NoiseFieldSample {
    LatticeConfig cfg;
    std::vector<double> values;  // time-major, then x0, x1, x2
    uint64_t seed = 0;
    double eps = 0;
    double intensity = 0;  // expected points per unit rescaled volume
    NoiseModel model = NoiseModel::Poisson;
    std::string mollifier = "c(1-|x|^2)_+^2 (1-t^2)_+^2";

    double at(const Offset& z) const;
    NoiseFieldSample flipped() const;
};

// phi(t, x) before normalisation; unit parabolic ball support.
double bump(double t, double r2);

NoiseFieldSample sample_noise(const LatticeConfig& cfg, double eps, uint64_t seed,
                              NoiseModel model = NoiseModel::Poisson);
std::vector<NoiseFieldSample> sample_noise_batch(const LatticeConfig& cfg, double eps, uint64_t seed, int count,
                                                 NoiseModel model = NoiseModel::Poisson, int threads = 0);

struct Estimate {
    double value = 0;
    double stderr_ = 0;
    double z() const { return stderr_ > 0 ? value / stderr_ : 0.0; }
};

// One entry per lag configuration; each configuration lists order-1 offsets from the first point.
std::vector<Estimate> empirical_cumulants(const std::vector<NoiseFieldSample>& samples, int order,
                                          const std::vector<std::vector<Offset>>& lags);

// Sum of the empirical covariance over every lag inside the support of the covariance, times the cell volume.
Estimate covariance_integral(const std::vector<NoiseFieldSample>& samples);
// Empirical covariance at a single lag.
Estimate covariance_at(const std::vector<NoiseFieldSample>& samples, const Offset& lag);

// Symmetry, normalisation and finite range on pooled samples.
struct NoiseContract {
    std::vector<std::vector<Offset>> lags3;
    std::vector<Estimate> kappa3;
    Estimate variance;  // order 2, zero lag
    Estimate kappa4;    // order 4, zero lag
    Estimate integral;  // covariance integral
    std::vector<Offset> far_lags;  // beyond the overlap window
    std::vector<Estimate> far;
    size_t pooled_points = 0;
    bool symmetric = false, normalised = false, finite_range = false;
    bool pass() const { return symmetric && normalised && finite_range; }
};
NoiseContract check_noise_contract(const std::vector<NoiseFieldSample>& samples, double z_max = 4.0,
                                   double norm_tol = 0.05);

struct PsiMoments {
    std::vector<double> m;       // m[0] = 1, up to m[8]
    std::vector<double> stderr_;
    size_t points = 0;
    MomentSequence sequence(int digits = 8) const;
};

PsiMoments estimate_psi_moments(const std::vector<NoiseFieldSample>& samples, int max_order = 8);

// Truncated heat kernel on the (t, r) half-grid t = n h_t >= 0, r = i h.
struct KernelGrid {
    double h = 0, h_t = 0, radius = 1.0;
    int nt = 0, nr = 0;  // t index 0..nt-1, r index 0..nr-1
    bool corrected = false;
    std::array<double, 3> correction{0, 0, 0};  // coefficients of w, t w, r^2 w
    std::vector<double> values;

    double operator()(int n, int i) const { return values[static_cast<size_t>(n) * nr + i]; }
    // sum K(t,x) t^a |x|^(2b) dt dx over the grid
    double moment(int a, int b) const;
};

double heat_kernel_cell(double t, double r, double h_t);
KernelGrid make_kernel_grid(double h, double radius = 1.0, bool corrected = true, int nr = 0);

struct ConstantConfig {
    double h_ratio = 0.5;        // h = h_ratio * eps
    double kernel_radius = 1.0;
    size_t max_points = 40'000'000;  // guard on the (t, r) grid
    bool corrected = true;
};

double estimate_constant(int k, int l, const Pairing& pi, double eps, const ConstantConfig& cfg = {});

// Reuses the smoothed kernel and block correlations across pairings at one eps.
class ConstantEstimator {
public:
    ConstantEstimator(double eps, const ConstantConfig& cfg = {});
    ~ConstantEstimator();
    ConstantEstimator(const ConstantEstimator&) = delete;
    ConstantEstimator& operator=(const ConstantEstimator&) = delete;

    double estimate(int k, int l, const Pairing& pi);
    double eps() const;
    size_t grid_points() const;

private:
    struct Impl;
    Impl* impl_;
};

struct LogFit {
    double slope = 0, intercept = 0, correlation = 0;
};
LogFit fit_log_divergence(const std::vector<std::pair<double, double>>& pairs);

// Successive differences of a sequence ordered by decreasing eps.
std::vector<double> successive_differences(const std::vector<double>& values);
// Bounded when every difference is at most `ratio` times the previous one in size.
bool differences_shrink(const std::vector<double>& values, double ratio = 0.7);
// Log growth: increments keep one sign and the last is at least half the first.
bool numeric_log_growth(const std::vector<double>& values);

// C_{k,l} = sum over pairings of pi! C_{k,l,pi} at one eps.
double summed_constant(ConstantEstimator& est, int k, int l);

// lambda_0 = eps^{-1} a0'(theta) - C_eps along the theta schedule, with one lambda (a_hat_1).
struct ScheduleRow {
    double eps = 0, c22 = 0, c13 = 0, c_eps = 0, theta = 0, lambda0 = 0;
};
struct ScheduleReport {
    double c_log = 0;          // log coefficient of C_{2,2}
    std::vector<ScheduleRow> rows;
    std::vector<double> increments;
    double uncancelled = 0;    // 9 a1^2 C_log log 2
    double bound = 0;          // half of it
    bool bounded = false;
};
ScheduleReport schedule_from_constants(double a1_hat, double a0_prime, double c_log, const std::vector<double>& eps,
                                       const std::vector<double>& c22, const std::vector<double>& c13);
// C_{2,2}, C_{1,3} from estimate_constant; C_log from the log fit of C_{2,2}.
ScheduleReport numeric_schedule(double a1_hat, double a0_prime, const std::vector<double>& eps,
                                const ConstantConfig& cfg = {});

// Threads for embarrassingly parallel loops: explicit value, NGUNIV_THREADS, or 1.
int numerics_threads(int requested = 0);

}  // namespace nguniv
