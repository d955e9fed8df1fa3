#include "mgsim/phasor_net.hpp"

#include "mgsim/errors.hpp"

#include <Eigen/Dense>
#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mgsim {

namespace {

constexpr Complex j{0.0, 1.0};

struct Admittances {
    std::vector<Complex> y;
    Complex sum{0.0, 0.0};
};

Admittances admittances(std::span<const Impedance> lines) {
    Admittances a;
    a.y.reserve(lines.size());
    for (const auto& z : lines) {
        z.validate();
        a.y.push_back(1.0 / z.value());
        a.sum += a.y.back();
    }
    return a;
}

double voltage_scale(std::span<const double> magnitudes) {
    double s = 1.0;
    for (double m : magnitudes) s = std::max(s, m);
    return s;
}

} // namespace

double normalize_angle(double angle) {
    constexpr double pi = std::numbers::pi;
    double a = std::remainder(angle, 2.0 * pi); // [-pi, pi]
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

Phasor Phasor::polar(double magnitude, double angle) {
    if (!(magnitude >= 0.0) || !std::isfinite(magnitude) || !std::isfinite(angle))
        throw ValidationError(fmt::format("invalid phasor ({}, {})", magnitude, angle));
    return Phasor{magnitude, normalize_angle(angle)};
}

Phasor Phasor::from_complex(Complex c) {
    return polar(std::abs(c), std::arg(c));
}

Complex Phasor::to_complex() const {
    return std::polar(magnitude, angle);
}

void Impedance::validate() const {
    if (!std::isfinite(resistance) || !std::isfinite(reactance) || resistance < 0.0)
        throw ValidationError(fmt::format("invalid line impedance {} + j{}", resistance, reactance));
    if (std::abs(value()) <= 0.0)
        throw ValidationError("line impedance must be non-zero");
}

void LoadDemand::validate() const {
    if (!std::isfinite(active) || !std::isfinite(reactive) || active < 0.0)
        throw ValidationError(fmt::format("invalid load {} W, {} var", active, reactive));
}

std::vector<Complex> line_currents(std::span<const Phasor> ibr_voltages,
                                   std::span<const Impedance> lines, Phasor pcc) {
    std::vector<Complex> out;
    out.reserve(ibr_voltages.size());
    const Complex u = pcc.to_complex();
    for (std::size_t i = 0; i < ibr_voltages.size(); ++i)
        out.push_back((ibr_voltages[i].to_complex() - u) / lines[i].value());
    return out;
}

NetworkSolution solve_network(std::span<const Phasor> ibr_voltages,
                              std::span<const Impedance> lines,
                              const LoadDemand& load,
                              const SolverOptions& opts) {
    if (ibr_voltages.empty())
        throw ValidationError("network needs at least one IBR");
    if (ibr_voltages.size() != lines.size())
        throw ValidationError("one line impedance per IBR required");
    load.validate();

    const auto adm = admittances(lines);
    Complex a{0.0, 0.0}; // sum of Y_i V_i
    std::vector<double> mags;
    for (std::size_t i = 0; i < ibr_voltages.size(); ++i) {
        a += adm.y[i] * ibr_voltages[i].to_complex();
        mags.push_back(ibr_voltages[i].magnitude);
    }
    const Complex s_load = load.value();
    const double tol = opts.tolerance_va();
    const double collapse = 1e-9 * voltage_scale(mags);

    // Power delivered into the PCC minus the load.
    auto mismatch = [&](Complex u) { return u * std::conj(a - u * adm.sum) - s_load; };

    NetworkSolution sol;
    Complex u = a / adm.sum; // no-load voltage
    bool converged = false;
    int it = 0;

    if (s_load == Complex{0.0, 0.0}) {
        converged = true;
    } else {
        const int fixed_point_budget = opts.max_iterations / 2;
        double prev_res = std::abs(mismatch(u));
        int growth = 0;
        for (; it < fixed_point_budget; ++it) {
            if (std::abs(u) <= collapse)
                throw PlantCollapseError(fmt::format("PCC voltage collapsed at iteration {}", it));
            const double res = std::abs(mismatch(u));
            if (res <= tol) {
                converged = true;
                break;
            }
            growth = res > prev_res ? growth + 1 : 0;
            if (growth >= 3 || !std::isfinite(res)) break;
            prev_res = res;
            u = (a - std::conj(s_load / u)) / adm.sum;
        }

        if (!converged) {
            sol.used_newton = true;
            if (!std::isfinite(std::abs(u))) u = a / adm.sum;
            const Complex ca = std::conj(a);
            const Complex cy = std::conj(adm.sum);
            for (; it < opts.max_iterations; ++it) {
                if (std::abs(u) <= collapse)
                    throw PlantCollapseError(fmt::format("PCC voltage collapsed at iteration {}", it));
                const Complex g = mismatch(u);
                if (std::abs(g) <= tol) {
                    converged = true;
                    break;
                }
                const Complex d_re = ca - 2.0 * u.real() * cy;
                const Complex d_im = j * ca - 2.0 * u.imag() * cy;
                const double det = d_re.real() * d_im.imag() - d_im.real() * d_re.imag();
                if (std::abs(det) < 1e-300) break;
                const double du_re = (-g.real() * d_im.imag() + g.imag() * d_im.real()) / det;
                const double du_im = (-d_re.real() * g.imag() + d_re.imag() * g.real()) / det;
                u += Complex{du_re, du_im};
            }
        }
    }

    if (!converged)
        throw PlantConvergenceError(fmt::format(
            "network solve did not converge in {} iterations (load {:.6g} W, {:.6g} var)",
            opts.max_iterations, load.active, load.reactive));
    if (std::abs(u) <= collapse && s_load != Complex{0.0, 0.0})
        throw PlantCollapseError("PCC voltage collapsed");

    sol.pcc_voltage = Phasor::from_complex(u);
    sol.iterations = it;
    sol.residual = std::abs(mismatch(u));
    sol.active.reserve(ibr_voltages.size());
    sol.reactive.reserve(ibr_voltages.size());
    for (std::size_t i = 0; i < ibr_voltages.size(); ++i) {
        const Complex v = ibr_voltages[i].to_complex();
        const Complex s = v * std::conj((v - u) * adm.y[i]);
        sol.active.push_back(s.real());
        sol.reactive.push_back(s.imag());
    }
    return sol;
}

Equilibrium solve_equilibrium(std::span<const double> magnitudes,
                              std::span<const Impedance> lines,
                              const LoadDemand& load,
                              std::span<const double> droop_n,
                              std::span<const double> angle_guess,
                              const SolverOptions& opts) {
    const std::size_t n = magnitudes.size();
    if (n == 0) throw ValidationError("network needs at least one IBR");
    if (lines.size() != n || droop_n.size() != n)
        throw ValidationError("magnitudes, lines and droop coefficients must have equal length");
    if (!angle_guess.empty() && angle_guess.size() != n)
        throw ValidationError("angle guess length mismatch");
    load.validate();
    for (double nd : droop_n)
        if (!(nd > 0.0)) throw ValidationError("droop coefficient n must be positive");

    const auto adm = admittances(lines);
    const Complex s_load = load.value();
    const double tol = opts.tolerance_va();
    const double collapse = 1e-9 * voltage_scale(magnitudes);
    double n_ref = 0.0;
    for (double nd : droop_n) n_ref += nd;
    n_ref /= static_cast<double>(n);

    // Unknowns: source angles (n) and PCC magnitude (PCC angle pinned to 0).
    const auto dim = static_cast<Eigen::Index>(n + 1);
    Eigen::VectorXd xk(dim);
    for (std::size_t i = 0; i < n; ++i) xk(static_cast<Eigen::Index>(i)) = angle_guess.empty() ? 0.0 : angle_guess[i];
    {
        Complex a{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) a += adm.y[i] * std::polar(magnitudes[i], xk(static_cast<Eigen::Index>(i)));
        xk(dim - 1) = std::abs(a / adm.sum);
    }

    std::vector<Complex> v(n), cur(n), s(n);
    auto evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd& f) {
        const double u = x(dim - 1);
        Complex sum_ci{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = std::polar(magnitudes[i], x(static_cast<Eigen::Index>(i)));
            cur[i] = (v[i] - u) * adm.y[i];
            s[i] = v[i] * std::conj(cur[i]);
            sum_ci += std::conj(cur[i]);
        }
        for (std::size_t k = 0; k + 1 < n; ++k)
            f(static_cast<Eigen::Index>(k)) = (droop_n[k] * s[k].real() - droop_n[k + 1] * s[k + 1].real()) / n_ref;
        const Complex g = u * sum_ci - s_load;
        f(dim - 2) = g.real();
        f(dim - 1) = g.imag();
        return f.cwiseAbs().maxCoeff();
    };

    Eigen::VectorXd f(dim), f_try(dim);
    Eigen::MatrixXd jac(dim, dim);
    double res = evaluate(xk, f);
    bool converged = false;
    int it = 0;
    int polish = 0;
    for (; it < opts.max_iterations; ++it) {
        if (!(xk(dim - 1) > collapse))
            throw PlantCollapseError(fmt::format("PCC voltage collapsed during equilibrium solve (iteration {})", it));
        if (!std::isfinite(res)) break;
        // One extra step after meeting tolerance drives the sharing identity to round-off.
        if (res <= tol && ++polish > 1) {
            converged = true;
            break;
        }

        const double u = xk(dim - 1);
        jac.setZero();
        Complex dg_du{0.0, 0.0};
        std::vector<double> dp_du(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const Complex ds_dd = j * s[i] - j * magnitudes[i] * magnitudes[i] * std::conj(adm.y[i]);
            if (i + 1 < n) jac(ii, ii) = droop_n[i] * ds_dd.real() / n_ref;
            if (i > 0) jac(ii - 1, ii) = -droop_n[i] * ds_dd.real() / n_ref;
            const Complex dg_dd = -j * u * std::conj(v[i] * adm.y[i]);
            jac(dim - 2, ii) = dg_dd.real();
            jac(dim - 1, ii) = dg_dd.imag();
            dp_du[i] = (-v[i] * std::conj(adm.y[i])).real();
            dg_du += std::conj(cur[i]) - u * std::conj(adm.y[i]);
        }
        for (std::size_t k = 0; k + 1 < n; ++k)
            jac(static_cast<Eigen::Index>(k), dim - 1) = (droop_n[k] * dp_du[k] - droop_n[k + 1] * dp_du[k + 1]) / n_ref;
        jac(dim - 2, dim - 1) = dg_du.real();
        jac(dim - 1, dim - 1) = dg_du.imag();

        const Eigen::VectorXd step = jac.partialPivLu().solve(-f);
        if (!step.allFinite()) break;

        // Backtracking keeps far-from-solution starts (large load steps) from overshooting.
        double lambda = 1.0;
        double res_try = 0.0;
        Eigen::VectorXd x_try(dim);
        for (int b = 0; b < 30; ++b) {
            x_try = xk + lambda * step;
            res_try = evaluate(x_try, f_try);
            if (std::isfinite(res_try) && (res_try < res || res <= tol)) break;
            lambda *= 0.5;
        }
        xk = x_try;
        res = evaluate(xk, f);
    }
    if (!converged)
        throw PlantConvergenceError(fmt::format(
            "equilibrium solve did not converge in {} iterations (residual {:.3g} VA, load {:.6g} W, {:.6g} var)",
            it, res, load.active, load.reactive));

    Equilibrium eq;
    eq.iterations = it;
    eq.angles.resize(n);
    std::vector<Phasor> sources(n);
    for (std::size_t i = 0; i < n; ++i) {
        eq.angles[i] = normalize_angle(xk(static_cast<Eigen::Index>(i)));
        sources[i] = Phasor::polar(magnitudes[i], eq.angles[i]);
    }
    eq.network = solve_network(sources, lines, load, opts);
    return eq;
}

double lowpass_step(double prev_filtered, double instantaneous, double tau, double dt) {
    if (!(tau > 0.0) || !(dt > 0.0))
        throw ValidationError("low-pass filter needs tau > 0 and dt > 0");
    const double k = dt / tau;
    return (prev_filtered + k * instantaneous) / (1.0 + k);
}

} // namespace mgsim
