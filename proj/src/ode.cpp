#include "airdyn/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace airdyn {

namespace {

const char* kModule = "ode";

// TR-BDF2 constants.
const double kGamma = 2.0 - std::sqrt(2.0);
const double kD = kGamma / 2.0;
const double kW = std::sqrt(2.0) / 4.0;
// Third-order quadrature weights on the nodes 0, gamma, 1.
const double kB1 = (1.0 - kW) / 3.0;
const double kB2 = (3.0 * kW + 1.0) / 3.0;
const double kB3 = kD / 3.0;

double scaled_rms(const Eigen::VectorXd& v, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  const IntegratorConfig& cfg) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double w = cfg.atol + cfg.rtol * std::max(std::abs(a(i)), std::abs(b(i)));
        acc += (v(i) / w) * (v(i) / w);
    }
    return std::sqrt(acc / static_cast<double>(v.size()));
}

// Solves z - dh * f(t, z) = rhs by full Newton. Returns false on failure.
bool newton_solve(const OdeSystem& sys, double t, double dh, const Eigen::VectorXd& rhs, Eigen::VectorXd& z,
                  const Eigen::VectorXd& scale_ref, const IntegratorConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(sys.dim);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 12; ++it) {
        const Eigen::VectorXd fz = sys.rhs(t, z);
        if (!fz.allFinite()) return false;
        const Eigen::VectorXd g = z - dh * fz - rhs;
        const Eigen::MatrixXd jac = eye - dh * sys.jacobian(t, z);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        const Eigen::VectorXd delta = lu.solve(g);
        if (!delta.allFinite()) return false;
        z -= delta;
        if (!z.allFinite()) return false;
        const double size = scaled_rms(delta, z, scale_ref, cfg);
        if (size <= 1e-6 || delta.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
            return true;
        }
        if (it >= 2 && size > 2.0 * prev) return false;
        prev = size;
    }
    return false;
}

void check_guard(const Eigen::VectorXd& f, double t, double eps) {
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        if (!std::isfinite(f(i)) || std::abs(f(i)) > eps) throw DerivativeBlowup(t, static_cast<int>(i), f(i));
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

Eigen::Vector2d evaluate_rhs(const QuadraticModel& model, const Eigen::Vector2d& y) {
    const auto row = quadratic_features(y(0), y(1));
    return model.coeffs * row.transpose();
}

Eigen::Matrix2d evaluate_jacobian(const QuadraticModel& model, const Eigen::Vector2d& y) {
    const auto& b = model.coeffs;
    Eigen::Matrix2d j;
    for (int i = 0; i < 2; ++i) {
        j(i, 0) = b(i, 1) + 2.0 * b(i, 3) * y(0) + b(i, 4) * y(1);
        j(i, 1) = b(i, 2) + b(i, 4) * y(0) + 2.0 * b(i, 5) * y(1);
    }
    return j;
}

OdeSystem as_system(const QuadraticModel& model) {
    OdeSystem sys;
    sys.dim = 2;
    sys.rhs = [model](double, const Eigen::VectorXd& y) -> Eigen::VectorXd {
        return evaluate_rhs(model, Eigen::Vector2d(y(0), y(1)));
    };
    sys.jacobian = [model](double, const Eigen::VectorXd& y) -> Eigen::MatrixXd {
        return evaluate_jacobian(model, Eigen::Vector2d(y(0), y(1)));
    };
    return sys;
}

void IntegratorConfig::validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw DataError(kModule, "rtol and atol must be positive");
    if (!(epsilon_guard > 0.0)) throw DataError(kModule, "derivative guard must be positive");
    if (max_steps <= 0) throw DataError(kModule, "max_steps must be positive");
}

DerivativeBlowup::DerivativeBlowup(double time, int component, double value)
    : IntegrationError("derivative blow-up: |dy" + std::to_string(component + 1) + "/dt| = " + fmt(std::abs(value)) +
                       " exceeds the guard at t = " + fmt(time)),
      time_(time),
      component_(component),
      value_(value) {}

Eigen::VectorXd Trajectory::sample(double t) const {
    if (times.empty()) throw DataError(kModule, "empty trajectory");
    const double span = times.back() - times.front();
    const double slack = 1e-12 * std::max(1.0, std::abs(span));
    if (t < times.front() - slack || t > times.back() + slack) {
        throw DataError(kModule, "sample time " + fmt(t) + " outside the integrated span");
    }
    if (times.size() == 1) return states.front();
    t = std::clamp(t, times.front(), times.back());
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = it == times.end() ? times.size() - 2 : static_cast<std::size_t>(it - times.begin()) - 1;
    i = std::min(i, times.size() - 2);
    const double h = times[i + 1] - times[i];
    const double u = (t - times[i]) / h;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * states[i] + (u3 - 2 * u2 + u) * h * slopes[i] + (-2 * u3 + 3 * u2) * states[i + 1] +
           (u3 - u2) * h * slopes[i + 1];
}

Trajectory integrate(const OdeSystem& sys, const Eigen::VectorXd& y0, double t0, double tf,
                     const IntegratorConfig& cfg) {
    cfg.validate();
    if (!(t0 < tf)) throw DataError(kModule, "integration span must satisfy t0 < tf");
    if (y0.size() != sys.dim || !y0.allFinite()) throw DataError(kModule, "initial state must be finite and match the system");

    Trajectory traj;
    double t = t0;
    Eigen::VectorXd y = y0;
    Eigen::VectorXd f = sys.rhs(t, y);
    check_guard(f, t, cfg.epsilon_guard);
    traj.times.push_back(t);
    traj.states.push_back(y);
    traj.slopes.push_back(f);

    const double span = tf - t0;
    const double max_step = cfg.max_step > 0.0 ? cfg.max_step : span;
    double h = cfg.initial_step;
    if (!(h > 0.0)) {
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(y.size());
        const double d0 = scaled_rms(y, y, zero, cfg);
        const double d1 = scaled_rms(f, y, zero, cfg);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
        h = std::min(h, 0.01 * span);
    }
    h = std::min(h, max_step);

    long attempts = 0;
    while (t < tf) {
        if (++attempts > cfg.max_steps) {
            throw StepLimitExceeded("step budget of " + std::to_string(cfg.max_steps) + " exhausted at t = " + fmt(t));
        }
        const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        bool last = false;
        if (t + h >= tf || tf - (t + h) < h_min) {
            h = tf - t;
            last = true;
        }

        // Stage 1: trapezoid to t + gamma*h.
        const double dh = kD * h;
        Eigen::VectorXd z = y + kGamma * h * f;
        bool ok = newton_solve(sys, t + kGamma * h, dh, y + dh * f, z, y, cfg);
        Eigen::VectorXd fz, y1, f1;
        if (ok) {
            fz = sys.rhs(t + kGamma * h, z);
            // Stage 2: BDF2 through y, z to t + h.
            const double c = 1.0 / (kGamma * (2.0 - kGamma));
            const Eigen::VectorXd rhs2 = c * z - (1.0 - kGamma) * (1.0 - kGamma) * c * y;
            y1 = y + (z - y) / kGamma;
            ok = newton_solve(sys, t + h, dh, rhs2, y1, y, cfg);
            if (ok) {
                f1 = sys.rhs(t + h, y1);
                ok = f1.allFinite();
            }
        }
        if (!ok) {
            ++traj.rejected_steps;
            h *= 0.25;
            if (h < h_min) {
                throw NewtonDivergence("Newton iterations failed to converge near t = " + fmt(t));
            }
            continue;
        }

        const Eigen::VectorXd err = y + h * (kB1 * f + kB2 * fz + kB3 * f1) - y1;
        const double e = scaled_rms(err, y, y1, cfg);
        const double factor = e > 0.0 ? 0.9 * std::pow(e, -1.0 / 3.0) : 5.0;
        if (e > 1.0) {
            ++traj.rejected_steps;
            h *= std::clamp(factor, 0.2, 0.9);
            if (h < h_min) throw StepLimitExceeded("step size underflow at t = " + fmt(t));
            continue;
        }

        t = last ? tf : t + h;
        y = y1;
        f = f1;
        check_guard(f, t, cfg.epsilon_guard);
        traj.times.push_back(t);
        traj.states.push_back(y);
        traj.slopes.push_back(f);
        h = std::min(h * std::clamp(factor, 0.2, 5.0), max_step);
    }
    return traj;
}

Trajectory integrate(const QuadraticModel& model, const Eigen::Vector2d& y0, double t0, double tf,
                     const IntegratorConfig& cfg) {
    if (!model.coeffs.allFinite()) throw DataError(kModule, "model coefficients must be finite");
    return integrate(as_system(model), Eigen::VectorXd(y0), t0, tf, cfg);
}

FeasibleSelection select_feasible_model(const std::array<ModelRanking, 2>& rankings, const Eigen::Vector2d& y0,
                                        std::pair<double, double> t_span, const IntegratorConfig& cfg,
                                        const std::array<NormParams, 2>& norm) {
    for (const auto& r : rankings) {
        if (r.fits.empty()) throw DataError(kModule, "empty model ranking");
        if (r.fits.front().beta.size() != kQuadraticTerms) {
            throw DataError(kModule, "rankings must come from the six-term quadratic library");
        }
    }
    const std::array<std::size_t, 2> available{rankings[0].feasible_count(), rankings[1].feasible_count()};

    // Counters l_i start at the top-ranked model; every failed attempt
    // advances l_1 and l_2 together (and the discard counter l).
    std::array<std::size_t, 2> l{1, 1};
    int discarded = 0;
    std::string last_failure = "no feasible regressions";
    while (l[0] <= available[0] && l[1] <= available[1]) {
        QuadraticModel model;
        model.norm = norm;
        for (int i = 0; i < 2; ++i) model.coeffs.row(i) = rankings[i].fits[l[i] - 1].beta.transpose();
        try {
            Trajectory traj = integrate(model, y0, t_span.first, t_span.second, cfg);
            FeasibleSelection sel;
            sel.model = model;
            sel.ranks = l;
            sel.fits = {rankings[0].fits[l[0] - 1], rankings[1].fits[l[1] - 1]};
            sel.discarded = discarded;
            sel.trajectory = std::move(traj);
            return sel;
        } catch (const IntegrationError& e) {
            last_failure = e.what();
            ++l[0];
            ++l[1];
            ++discarded;
        }
    }
    throw AllModelsInfeasible("every ranked model pair failed to integrate after " + std::to_string(discarded) +
                              " attempts (last: " + last_failure + ")");
}

}  // namespace airdyn
