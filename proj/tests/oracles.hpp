// Independent reference computations used only by the tests. None of these go
// through BoundModel, softmax or the analytic derivatives they check.
#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crashsev/data_model.hpp"
#include "crashsev/model_spec.hpp"

namespace crashsev::oracle {

/// Coefficient of `variable` in outcome i's utility, looked up by slot label.
inline double coefficient(const ModelSpec& spec, const std::map<std::string, double>& by_label,
                          const TermSpec& term, std::size_t i) {
    std::string label = term.variable + "[";
    if (term.shared) {
        for (std::size_t j = 0; j < term.outcomes.size(); ++j) {
            if (j) label += ',';
            label += spec.outcome_set().label(term.outcomes[j]);
        }
    } else {
        label += spec.outcome_set().label(i);
    }
    return by_label.at(label + "]");
}

inline std::map<std::string, double> by_label(const ModelSpec& spec, const Eigen::VectorXd& theta) {
    const auto layout = build_layout(spec);
    std::map<std::string, double> out;
    for (std::size_t k = 0; k < layout.size(); ++k)
        out[layout.label(k, spec.outcome_set())] = theta[static_cast<Eigen::Index>(k)];
    return out;
}

/// Direct evaluation of the linear utility from the term list.
inline std::vector<double> utilities(const ModelSpec& spec, const Eigen::VectorXd& theta,
                                     const Dataset& data, std::size_t row) {
    const auto coef = by_label(spec, theta);
    std::vector<double> u(spec.outcome_set().size(), 0.0);
    for (const auto& term : spec.terms()) {
        const double x = term.variable == "constant" ? 1.0 : data.value(row, term.variable);
        for (std::size_t i : term.outcomes) u[i] += coefficient(spec, coef, term, i) * x;
    }
    return u;
}

/// Naive exp / sum / log evaluation; fine for moderate utilities.
inline double log_likelihood(const ModelSpec& spec, const Eigen::VectorXd& theta, const Dataset& data) {
    long double total = 0.0L;
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto u = utilities(spec, theta, data, r);
        long double denom = 0.0L;
        for (double v : u) denom += std::exp(static_cast<long double>(v));
        const auto& obs = data.observations()[r];
        total += obs.weight * std::log(std::exp(static_cast<long double>(u[obs.outcome])) / denom);
    }
    return static_cast<double>(total);
}

inline std::vector<double> probabilities(const ModelSpec& spec, const Eigen::VectorXd& theta,
                                         const Dataset& data, std::size_t row) {
    const auto u = utilities(spec, theta, data, row);
    double denom = 0.0;
    for (double v : u) denom += std::exp(v);
    std::vector<double> p;
    for (double v : u) p.push_back(std::exp(v) / denom);
    return p;
}

/// Central differences of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double rel_step = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = rel_step * (1.0 + std::abs(x[k]));
        Eigen::VectorXd up = x, down = x;
        up[k] += h;
        down[k] -= h;
        g[k] = (f(up) - f(down)) / (2.0 * h);
    }
    return g;
}

/// Central differences of a vector function, column k = d/dx_k.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double rel_step = 1e-5) {
    Eigen::MatrixXd j(x.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = rel_step * (1.0 + std::abs(x[k]));
        Eigen::VectorXd up = x, down = x;
        up[k] += h;
        down[k] -= h;
        j.col(k) = (f(up) - f(down)) / (2.0 * h);
    }
    return j;
}

/// Max over entries of |a - b| / max(|b|, floor).
inline double max_relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(std::abs(b(i, j)), floor));
    return worst;
}

// Adaptive Gauss-Kronrod (7/15) quadrature in long double.
namespace detail {
inline constexpr long double kNodes[8] = {
    0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
    0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
    0.586087235467691130294144845693013L, 0.405845151377397166906606412076961L,
    0.207784955007898467600689403773245L, 0.000000000000000000000000000000000L};
inline constexpr long double kKronrod[8] = {
    0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
    0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
    0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
    0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
inline constexpr long double kGauss[4] = {
    0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
    0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};

inline long double gk15(const std::function<long double(long double)>& f, long double a,
                        long double b, long double& error) {
    const long double c = 0.5L * (a + b), h = 0.5L * (b - a);
    const long double fc = f(c);
    long double kronrod = kKronrod[7] * fc;
    long double gauss = kGauss[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const long double x = h * kNodes[j];
        const long double f1 = f(c - x), f2 = f(c + x);
        kronrod += kKronrod[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kGauss[j / 2] * (f1 + f2);
    }
    error = std::abs((kronrod - gauss) * h);
    return kronrod * h;
}
} // namespace detail

inline long double integrate(const std::function<long double(long double)>& f, long double a,
                             long double b, long double tol, int depth = 0) {
    long double err = 0.0L;
    const long double whole = detail::gk15(f, a, b, err);
    if (err <= tol || depth > 40) return whole;
    const long double m = 0.5L * (a + b);
    return integrate(f, a, m, 0.5L * tol, depth + 1) + integrate(f, m, b, 0.5L * tol, depth + 1);
}

/// Chi-square upper tail by quadrature of the density. Substituting u = t^2
/// removes the 1/sqrt(u) singularity at zero for df = 1.
inline double chi_square_sf_quadrature(double x, int df) {
    const long double k = 0.5L * df;
    const long double log_norm = -k * std::log(2.0L) - std::lgamma(k);
    auto density_t = [&](long double t) {
        if (t <= 0.0L) return df == 1 ? 2.0L * std::exp(log_norm) : 0.0L;
        const long double u = t * t;
        return 2.0L * t * std::exp(log_norm + (k - 1.0L) * std::log(u) - 0.5L * u);
    };
    // Whichever side is shorter: the CDF over [0, x] or the tail over [x, far].
    const long double far = std::sqrt(static_cast<long double>(std::max(x, 1.0 * df)) + 600.0L);
    const long double tail = integrate(density_t, std::sqrt(static_cast<long double>(x)), far, 1e-16L);
    if (tail < 0.5L) return static_cast<double>(tail);
    return static_cast<double>(1.0L - integrate(density_t, 0.0L, std::sqrt(static_cast<long double>(x)), 1e-16L));
}

} // namespace crashsev::oracle
