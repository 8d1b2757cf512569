#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airdyn/error.hpp"
#include "airdyn/preprocess.hpp"

namespace airdyn {

/// Canonical monomial order: 1, y1, y2, y1^2, y1*y2, y2^2.
inline constexpr int kQuadraticTerms = 6;
std::vector<std::string> quadratic_labels(const std::string& y1 = "y1", const std::string& y2 = "y2");

/// Design matrix (intercept first) and per-species derivative targets.
class FeatureLibrary {
public:
    FeatureLibrary(Eigen::MatrixXd matrix, Eigen::MatrixXd targets, std::vector<std::string> labels);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const Eigen::MatrixXd& targets() const { return targets_; }
    const std::vector<std::string>& labels() const { return labels_; }
    Eigen::Index rows() const { return matrix_.rows(); }
    /// Number of non-intercept columns.
    int n() const { return static_cast<int>(matrix_.cols()) - 1; }
    int species_count() const { return static_cast<int>(targets_.cols()); }

private:
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd targets_;
    std::vector<std::string> labels_;
};

/// Quadratic library over two processed series; row j uses the states at the
/// grid point where derivative j ends.
FeatureLibrary build_library(const ProcessedSeries& y1, const ProcessedSeries& y2,
                             const std::string& name1 = "y1", const std::string& name2 = "y2");

/// Quadratic feature row for one state.
Eigen::Matrix<double, 1, kQuadraticTerms> quadratic_features(double y1, double y2);

/// Selection over the non-intercept columns; bit j-1 selects column j.
class SubsetMask {
public:
    SubsetMask(std::uint32_t bits, int n);
    static SubsetMask full(int n) { return SubsetMask((n >= 32 ? 0xFFFFFFFFu : ((1u << n) - 1u)), n); }

    bool selects(int column) const;  // column in 1..n
    int n() const { return n_; }
    int popcount() const;
    std::uint32_t bits() const { return bits_; }
    std::vector<bool> flags() const;
    /// Lexicographic over (column 1, ..., column n), false < true.
    bool lex_less(const SubsetMask& other) const;
    bool operator==(const SubsetMask&) const = default;

private:
    std::uint32_t bits_;
    int n_;
};

enum class Criterion { AIC, BIC, AdjR2 };
std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& s);

struct RegressionFit {
    SubsetMask mask{0, 0};
    bool feasible = true;
    Eigen::VectorXd beta;  // n + 1 entries, exact zeros where masked out
    double rss = 0.0;
    double r2 = 0.0;
    int k = 0;
    Eigen::Index m = 0;
    double aic = 0.0;
    double bic = 0.0;
    double adj_r2 = 0.0;

    double score(Criterion c) const;
};

/// rss floor applied before the logarithm.
double rss_floor(Eigen::Index m);
double aic_score(double rss, Eigen::Index m, int k);
double bic_score(double rss, Eigen::Index m, int k);
double adjusted_r2(double r2, Eigen::Index m, int k);

class RankDeficient : public NumericError {
public:
    explicit RankDeficient(const std::string& what) : NumericError("regression", what) {}
};

/// Least squares on the intercept plus the masked columns (Householder QR).
RegressionFit fit_subset(const FeatureLibrary& lib, int species, const SubsetMask& mask);

struct ModelRanking {
    Criterion criterion = Criterion::AIC;
    int species = 0;
    std::vector<RegressionFit> fits;  // best first; infeasible masks last

    const RegressionFit& best() const { return fits.front(); }
    std::size_t feasible_count() const;
};

/// Exhaustive evaluation of all 2^n masks, ranked by `criterion` with ties
/// broken by smaller k, then lexicographically smaller mask.
ModelRanking best_subset(const FeatureLibrary& lib, int species, Criterion criterion = Criterion::AIC);

/// True when a should be ranked ahead of b.
bool ranks_before(const RegressionFit& a, const RegressionFit& b, Criterion c);

struct LassoOptions {
    double tolerance = 1e-10;  // max coordinate change
    int max_sweeps = 1'000'000;
};

struct LassoResult {
    Eigen::VectorXd beta;
    int sweeps = 0;
    double kkt_residual = 0.0;
    int nonzeros() const;
};

class LassoNotConverged : public NumericError {
public:
    explicit LassoNotConverged(const std::string& what) : NumericError("regression", what) {}
};

/// Coordinate descent for 0.5*||y - F b||^2 + lambda*||b[1:]||_1 with an
/// unpenalized intercept.
LassoResult lasso(const FeatureLibrary& lib, int species, double lambda, const LassoOptions& opt = {},
                  const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);
/// Smallest lambda at which every penalized coefficient is zero.
double lasso_lambda_max(const FeatureLibrary& lib, int species);
/// Largest KKT violation of a candidate solution.
double lasso_kkt_residual(const FeatureLibrary& lib, int species, double lambda, const Eigen::VectorXd& beta);
double lasso_objective(const FeatureLibrary& lib, int species, double lambda, const Eigen::VectorXd& beta);

}  // namespace airdyn
