#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airdyn/error.hpp"
#include "airdyn/regression.hpp"

namespace airdyn {

struct NormParams {
    double mu = 0.0;
    double sigma = 1.0;
};

/// Planar quadratic system; row i holds the six coefficients of species i in
/// canonical order (1, y1, y2, y1^2, y1*y2, y2^2).
struct QuadraticModel {
    Eigen::Matrix<double, 2, kQuadraticTerms> coeffs = Eigen::Matrix<double, 2, kQuadraticTerms>::Zero();
    std::array<NormParams, 2> norm{};

    QuadraticModel() = default;
    explicit QuadraticModel(const Eigen::Matrix<double, 2, kQuadraticTerms>& c) : coeffs(c) {}
};

Eigen::Vector2d evaluate_rhs(const QuadraticModel& model, const Eigen::Vector2d& y);
Eigen::Matrix2d evaluate_jacobian(const QuadraticModel& model, const Eigen::Vector2d& y);

/// Autonomous or time-dependent system with an analytic Jacobian.
struct OdeSystem {
    int dim = 0;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> rhs;
    std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> jacobian;
};

OdeSystem as_system(const QuadraticModel& model);

struct IntegratorConfig {
    double rtol = 1e-6;
    double atol = 1e-9;
    double epsilon_guard = 1e6;  // cap on any |dy_i/dt| at accepted steps
    long max_steps = 1'000'000;
    double initial_step = 0.0;   // 0 picks one automatically
    double max_step = 0.0;       // 0 means unbounded

    void validate() const;
};

/// Accepted steps of an integration with a cubic Hermite interpolant between them.
class Trajectory {
public:
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> slopes;
    long rejected_steps = 0;

    long accepted_steps() const { return times.empty() ? 0 : static_cast<long>(times.size()) - 1; }
    const Eigen::VectorXd& final_state() const { return states.back(); }
    /// Interpolated state at t inside [times.front(), times.back()].
    Eigen::VectorXd sample(double t) const;
};

class IntegrationError : public NumericError {
public:
    explicit IntegrationError(const std::string& what) : NumericError("ode", what) {}
};

class DerivativeBlowup : public IntegrationError {
public:
    DerivativeBlowup(double time, int component, double value);
    double time() const { return time_; }
    int component() const { return component_; }
    double value() const { return value_; }

private:
    double time_;
    int component_;
    double value_;
};

class StepLimitExceeded : public IntegrationError {
public:
    using IntegrationError::IntegrationError;
};

class NewtonDivergence : public IntegrationError {
public:
    using IntegrationError::IntegrationError;
};

/// Adaptive TR-BDF2 (trapezoid stage followed by BDF2, L-stable, second
/// order) with full Newton iterations on each implicit stage and an embedded
/// third-order error estimate.
Trajectory integrate(const OdeSystem& system, const Eigen::VectorXd& y0, double t0, double tf,
                     const IntegratorConfig& cfg = {});
Trajectory integrate(const QuadraticModel& model, const Eigen::Vector2d& y0, double t0, double tf,
                     const IntegratorConfig& cfg = {});

class AllModelsInfeasible : public NumericError {
public:
    explicit AllModelsInfeasible(const std::string& what) : NumericError("ode", what) {}
};

struct FeasibleSelection {
    QuadraticModel model;
    std::array<std::size_t, 2> ranks{};  // 1-based positions in each ranking
    std::array<RegressionFit, 2> fits;
    int discarded = 0;
    Trajectory trajectory;
};

/// Walks both rankings until the combined system integrates over `t_span`
/// without tripping the derivative guard.
FeasibleSelection select_feasible_model(const std::array<ModelRanking, 2>& rankings, const Eigen::Vector2d& y0,
                                        std::pair<double, double> t_span, const IntegratorConfig& cfg,
                                        const std::array<NormParams, 2>& norm = {});

}  // namespace airdyn
