#include "nguniv/numerics.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace nguniv {

size_t LatticeConfig::points() const {
    size_t n = static_cast<size_t>(n_time);
    for (int i = 0; i < d; ++i) n *= static_cast<size_t>(n_space);
    return n;
}

double LatticeConfig::cell_volume() const { return h_t() * std::pow(h, d); }

void LatticeConfig::validate() const {
    if (d != 1 && d != 3) throw std::invalid_argument("LatticeConfig: d must be 1 or 3");
    if (n_time < 2 || n_space < 2) throw std::invalid_argument("LatticeConfig: lattice too small");
    if (!(h > 0) || !std::isfinite(h)) throw std::invalid_argument("LatticeConfig: h must be positive");
}

LatticeConfig LatticeConfig::for_eps(double eps, int d, int n_time, int n_space) {
    LatticeConfig c;
    c.d = d;
    c.n_time = n_time;
    c.n_space = n_space;
    c.h = eps / 2;
    c.validate();
    return c;
}

int numerics_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NGUNIV_THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

double heat(double t, double r) {
    if (t <= 0) return 0;
    return std::pow(4 * kPi * t, -1.5) * std::exp(-r * r / (4 * t));
}

// integral of the heat kernel over (0, T] at fixed r > 0
double heat_primitive(double T, double r) {
    if (T <= 0) return 0;
    return std::erfc(r / (2 * std::sqrt(T))) / (4 * kPi * r);
}

double smooth_step(double u) {
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    double a = std::exp(-1 / u), b = std::exp(-1 / (1 - u));
    return a / (a + b);
}

double cutoff(double t, double r, double R) {
    double s = std::pow(t * t + r * r * r * r, 0.25);
    return smooth_step((R - s) / (R / 2));
}

// smooth plateau on the annulus R/2 < s < R, ramped in from t = 0
double correction_weight(double t, double r, double R) {
    if (t <= 0) return 0;
    double s = std::pow(t * t + r * r * r * r, 0.25);
    return smooth_step((s - R / 2) / (R / 8)) * smooth_step((R - s) / (R / 8)) * smooth_step(t / (R * R / 4));
}

}  // namespace

double heat_kernel_cell(double t, double r, double h_t) {
    double a = std::max(0.0, t - h_t / 2), b = t + h_t / 2;
    if (b <= 0) return 0;
    if (r == 0) {
        if (a == 0) return 0;
        return std::pow(4 * kPi, -1.5) * 2 * (1 / std::sqrt(a) - 1 / std::sqrt(b)) / h_t;
    }
    if (t < 8 * h_t) return (heat_primitive(b, r) - heat_primitive(a, r)) / h_t;
    return (heat(a, r) + 4 * heat(t, r) + heat(b, r)) / 6;
}

double KernelGrid::moment(int a, int b) const {
    double s = 0;
    for (int n = 0; n < nt; ++n) {
        double t = n * h_t;
        for (int i = 1; i < nr; ++i) {
            double r = i * h;
            s += (*this)(n, i) * std::pow(t, a) * std::pow(r * r, b) * 4 * kPi * r * r;
        }
    }
    return s * h * h_t;
}

KernelGrid make_kernel_grid(double h, double radius, bool corrected, int nr) {
    if (!(h > 0) || !(radius > 0)) throw std::invalid_argument("make_kernel_grid: bad step or radius");
    KernelGrid g;
    g.h = h;
    g.h_t = h * h;
    g.radius = radius;
    g.corrected = corrected;
    g.nr = nr > 0 ? nr : static_cast<int>(std::ceil(radius / h)) + 2;
    g.nt = static_cast<int>(std::ceil(radius * radius / g.h_t)) + 2;
    g.values.assign(static_cast<size_t>(g.nt) * g.nr, 0.0);
    std::vector<double> w(g.values.size(), 0.0);
    for (int n = 0; n < g.nt; ++n) {
        double t = n * g.h_t;
        for (int i = 0; i < g.nr; ++i) {
            double r = i * h;
            size_t at = static_cast<size_t>(n) * g.nr + i;
            double c = cutoff(t, r, radius);
            if (c > 0) g.values[at] = c * heat_kernel_cell(t, r, g.h_t);
            w[at] = correction_weight(t, r, radius);
        }
    }
    if (!corrected) return g;

    // discrete moments against 1, t, r^2 of w, t w, r^2 w and of the cut kernel
    double A[3][3] = {}, rhs[3] = {};
    for (int n = 0; n < g.nt; ++n) {
        double t = n * g.h_t;
        for (int i = 1; i < g.nr; ++i) {
            double r = i * h;
            size_t at = static_cast<size_t>(n) * g.nr + i;
            double vol = 4 * kPi * r * r * h * g.h_t;
            double basis[3] = {1, t, r * r};
            for (int p = 0; p < 3; ++p) {
                rhs[p] += g.values[at] * basis[p] * vol;
                for (int q = 0; q < 3; ++q) A[p][q] += w[at] * basis[q] * basis[p] * vol;
            }
        }
    }
    auto det3 = [](double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    double D = det3(A);
    if (D == 0) throw std::runtime_error("make_kernel_grid: singular correction system");
    for (int q = 0; q < 3; ++q) {
        double M[3][3];
        for (int p = 0; p < 3; ++p)
            for (int s = 0; s < 3; ++s) M[p][s] = s == q ? rhs[p] : A[p][s];
        g.correction[q] = det3(M) / D;
    }
    for (int n = 0; n < g.nt; ++n) {
        double t = n * g.h_t;
        for (int i = 0; i < g.nr; ++i) {
            double r = i * h;
            size_t at = static_cast<size_t>(n) * g.nr + i;
            if (w[at] != 0) g.values[at] -= (g.correction[0] + g.correction[1] * t + g.correction[2] * r * r) * w[at];
        }
    }
    return g;
}

LogFit fit_log_divergence(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 4) throw std::invalid_argument("fit_log_divergence: need at least 4 points");
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (!(pairs[i].first > 0)) throw std::invalid_argument("fit_log_divergence: eps must be positive");
        for (size_t j = 0; j < i; ++j)
            if (pairs[i].first == pairs[j].first) throw std::invalid_argument("fit_log_divergence: repeated eps");
    }
    const double n = static_cast<double>(pairs.size());
    double sx = 0, sy = 0;
    for (auto [e, v] : pairs) sx += std::log(1 / e), sy += v;
    double mx = sx / n, my = sy / n, sxx = 0, syy = 0, sxy = 0;
    for (auto [e, v] : pairs) {
        double dx = std::log(1 / e) - mx, dy = v - my;
        sxx += dx * dx, syy += dy * dy, sxy += dx * dy;
    }
    LogFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.correlation = syy > 0 ? sxy / std::sqrt(sxx * syy) : 1.0;
    return f;
}

std::vector<double> successive_differences(const std::vector<double>& values) {
    std::vector<double> d;
    for (size_t i = 1; i < values.size(); ++i) d.push_back(values[i] - values[i - 1]);
    return d;
}

bool differences_shrink(const std::vector<double>& values, double ratio) {
    auto d = successive_differences(values);
    if (d.size() < 2) return false;
    for (size_t i = 1; i < d.size(); ++i)
        if (std::abs(d[i]) > ratio * std::abs(d[i - 1])) return false;
    return true;
}

bool numeric_log_growth(const std::vector<double>& values) {
    auto d = successive_differences(values);
    if (d.size() < 2) return false;
    for (double x : d)
        if ((x > 0) != (d[0] > 0) || x == 0) return false;
    return std::abs(d.back()) >= 0.5 * std::abs(d.front());
}

}  // namespace nguniv
