#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airdyn/ode.hpp"

namespace airdyn {

enum class PointClass { StableNode, UnstableNode, Saddle, StableSpiral, UnstableSpiral, Degenerate };
std::string to_string(PointClass c);

using Complex = std::complex<double>;

struct Classification {
    PointClass cls = PointClass::Degenerate;
    std::array<Complex, 2> eigenvalues{};  // real pairs sorted descending
};

struct CriticalPoint {
    std::array<Complex, 2> z{};  // standardized coordinates
    bool is_real = false;
    std::array<Complex, 2> eigenvalues{};
    std::optional<PointClass> cls;            // real points only
    std::optional<Eigen::Vector2d> physical;  // real points only
    double residual = 0.0;                    // max(|P|, |Q|) at z

    Eigen::Vector2d real_part() const { return {z[0].real(), z[1].real()}; }
};

struct StabilityReport {
    std::vector<CriticalPoint> points;
    int multiplicity_total = 0;  // roots of the eliminant, with multiplicity
    std::map<PointClass, int> counts;

    std::size_t real_count() const;
    std::size_t complex_count() const { return points.size() - real_count(); }
};

class SharedComponent : public NumericError {
public:
    explicit SharedComponent(const std::string& what) : NumericError("stability", what) {}
};

class IllConditionedResultant : public NumericError {
public:
    IllConditionedResultant(const std::string& what, double condition)
        : NumericError("stability", what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

/// Univariate polynomial, ascending coefficients.
using Poly = std::vector<double>;

/// Resultant of P and Q with respect to y, as a polynomial in y1 (degree <= 4).
Poly resultant_in_y1(const QuadraticModel& model);
/// All complex roots via eigenvalues of the companion matrix, Newton-polished.
std::vector<Complex> polynomial_roots(const Poly& coeffs);

StabilityReport critical_points(const QuadraticModel& model);

Classification classify_jacobian(const Eigen::Matrix2d& jacobian);
Classification classify_point(const QuadraticModel& model, const Eigen::Vector2d& z);

/// mu + z * sigma per coordinate.
Eigen::Vector2d destandardize(const Eigen::Vector2d& z, const std::array<NormParams, 2>& norm);
Eigen::Vector2d standardize_point(const Eigen::Vector2d& y, const std::array<NormParams, 2>& norm);

/// The same dynamics written in physical coordinates y = mu + sigma * w.
QuadraticModel to_physical(const QuadraticModel& standardized);
/// Inverse of to_physical: expresses a physical-coordinate model in w = (y - mu) / sigma.
QuadraticModel to_standardized(const QuadraticModel& physical, const std::array<NormParams, 2>& norm);

}  // namespace airdyn
