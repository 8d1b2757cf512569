#include "airdyn/regression.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace airdyn {

namespace {
const char* kModule = "regression";
}

std::vector<std::string> quadratic_labels(const std::string& y1, const std::string& y2) {
    return {"1", y1, y2, y1 + "^2", y1 + "*" + y2, y2 + "^2"};
}

Eigen::Matrix<double, 1, kQuadraticTerms> quadratic_features(double y1, double y2) {
    Eigen::Matrix<double, 1, kQuadraticTerms> row;
    row << 1.0, y1, y2, y1 * y1, y1 * y2, y2 * y2;
    return row;
}

FeatureLibrary::FeatureLibrary(Eigen::MatrixXd matrix, Eigen::MatrixXd targets, std::vector<std::string> labels)
    : matrix_(std::move(matrix)), targets_(std::move(targets)), labels_(std::move(labels)) {
    if (matrix_.cols() < 1) throw DataError(kModule, "feature library has no columns");
    if (matrix_.rows() != targets_.rows()) throw DataError(kModule, "targets and features differ in row count");
    if (static_cast<Eigen::Index>(labels_.size()) != matrix_.cols()) {
        throw DataError(kModule, "one label per feature column is required");
    }
    if (matrix_.rows() <= matrix_.cols() - 1) {
        throw DataError(kModule, "feature library needs more rows than candidate terms");
    }
    if (!(matrix_.col(0).array() == 1.0).all()) throw DataError(kModule, "first library column must be all ones");
    if (!matrix_.allFinite() || !targets_.allFinite()) throw DataError(kModule, "feature library has non-finite entries");
}

FeatureLibrary build_library(const ProcessedSeries& y1, const ProcessedSeries& y2, const std::string& name1,
                             const std::string& name2) {
    if (y1.grid != y2.grid) throw DataError(kModule, "processed series are on different grids");
    if (y1.y.size() < 2 || y1.dy.size() + 1 != y1.y.size() || y2.dy.size() + 1 != y2.y.size()) {
        throw DataError(kModule, "processed series lack derivatives");
    }
    const auto rows = static_cast<Eigen::Index>(y1.dy.size());
    Eigen::MatrixXd f(rows, kQuadraticTerms);
    Eigen::MatrixXd t(rows, 2);
    for (Eigen::Index j = 0; j < rows; ++j) {
        const auto g = static_cast<std::size_t>(j + 1);
        f.row(j) = quadratic_features(y1.y[g], y2.y[g]);
        t(j, 0) = y1.dy[g - 1];
        t(j, 1) = y2.dy[g - 1];
    }
    return FeatureLibrary(std::move(f), std::move(t), quadratic_labels(name1, name2));
}

SubsetMask::SubsetMask(std::uint32_t bits, int n) : bits_(bits), n_(n) {
    if (n < 0 || n > 32) throw DataError(kModule, "subset masks support up to 32 columns");
    if (n < 32 && (bits >> n) != 0u) throw DataError(kModule, "mask selects columns beyond n");
}

bool SubsetMask::selects(int column) const { return column >= 1 && column <= n_ && ((bits_ >> (column - 1)) & 1u); }

int SubsetMask::popcount() const { return std::popcount(bits_); }

std::vector<bool> SubsetMask::flags() const {
    std::vector<bool> f(static_cast<std::size_t>(n_));
    for (int j = 1; j <= n_; ++j) f[static_cast<std::size_t>(j - 1)] = selects(j);
    return f;
}

bool SubsetMask::lex_less(const SubsetMask& other) const {
    for (int j = 1; j <= std::max(n_, other.n_); ++j) {
        const bool a = selects(j), b = other.selects(j);
        if (a != b) return !a;
    }
    return false;
}

std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::AIC: return "aic";
        case Criterion::BIC: return "bic";
        case Criterion::AdjR2: return "adj_r2";
    }
    return "aic";
}

Criterion parse_criterion(const std::string& s) {
    if (s == "aic" || s == "AIC") return Criterion::AIC;
    if (s == "bic" || s == "BIC") return Criterion::BIC;
    if (s == "adj_r2" || s == "adjr2" || s == "ADJ_R2") return Criterion::AdjR2;
    throw UsageError("unknown criterion '" + s + "' (expected aic, bic or adj_r2)");
}

double RegressionFit::score(Criterion c) const {
    switch (c) {
        case Criterion::AIC: return aic;
        case Criterion::BIC: return bic;
        case Criterion::AdjR2: return adj_r2;
    }
    return aic;
}

double rss_floor(Eigen::Index m) { return 1e-12 * static_cast<double>(m); }

double aic_score(double rss, Eigen::Index m, int k) {
    const double md = static_cast<double>(m);
    return md * std::log(std::max(rss, rss_floor(m)) / md) + 2.0 * k;
}

double bic_score(double rss, Eigen::Index m, int k) {
    const double md = static_cast<double>(m);
    return md * std::log(std::max(rss, rss_floor(m)) / md) + std::log(md) * (k + 1);
}

double adjusted_r2(double r2, Eigen::Index m, int k) {
    const double md = static_cast<double>(m);
    return 1.0 - (1.0 - r2) * md / (md - k - 1.0);
}

RegressionFit fit_subset(const FeatureLibrary& lib, int species, const SubsetMask& mask) {
    if (species < 0 || species >= lib.species_count()) throw DataError(kModule, "species index out of range");
    if (mask.n() != lib.n()) throw DataError(kModule, "mask length does not match the library");

    const Eigen::Index m = lib.rows();
    const int k = mask.popcount();
    if (m <= k + 1) throw NumericError(kModule, "too few rows for the selected terms (m <= k + 1)");

    std::vector<Eigen::Index> cols{0};
    for (int j = 1; j <= lib.n(); ++j) {
        if (mask.selects(j)) cols.push_back(j);
    }
    Eigen::MatrixXd a(m, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) a.col(static_cast<Eigen::Index>(c)) = lib.matrix().col(cols[c]);
    const Eigen::VectorXd y = lib.targets().col(species);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < a.cols()) {
        throw RankDeficient("selected columns are rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                            std::to_string(a.cols()) + ")");
    }
    const Eigen::VectorXd sub = qr.solve(y);

    RegressionFit fit;
    fit.mask = mask;
    fit.k = k;
    fit.m = m;
    fit.beta = Eigen::VectorXd::Zero(lib.n() + 1);
    for (std::size_t c = 0; c < cols.size(); ++c) fit.beta(cols[c]) = sub(static_cast<Eigen::Index>(c));
    fit.rss = (y - a * sub).squaredNorm();
    const double tss = (y.array() - y.mean()).square().sum();
    fit.r2 = tss > 0.0 ? 1.0 - fit.rss / tss : 1.0;
    fit.aic = aic_score(fit.rss, m, k);
    fit.bic = bic_score(fit.rss, m, k);
    fit.adj_r2 = adjusted_r2(fit.r2, m, k);
    return fit;
}

bool ranks_before(const RegressionFit& a, const RegressionFit& b, Criterion c) {
    if (a.feasible != b.feasible) return a.feasible;
    if (a.feasible) {
        const double sa = a.score(c), sb = b.score(c);
        if (sa != sb) return c == Criterion::AdjR2 ? sa > sb : sa < sb;
        if (a.k != b.k) return a.k < b.k;
    }
    return a.mask.lex_less(b.mask);
}

std::size_t ModelRanking::feasible_count() const {
    return static_cast<std::size_t>(std::count_if(fits.begin(), fits.end(), [](const auto& f) { return f.feasible; }));
}

ModelRanking best_subset(const FeatureLibrary& lib, int species, Criterion criterion) {
    const int n = lib.n();
    if (n > 20) throw DataError(kModule, "exhaustive subset search limited to 20 candidate terms");
    ModelRanking ranking;
    ranking.criterion = criterion;
    ranking.species = species;
    const std::uint32_t total = 1u << n;
    ranking.fits.reserve(total);
    for (std::uint32_t bits = 0; bits < total; ++bits) {
        SubsetMask mask(bits, n);
        try {
            ranking.fits.push_back(fit_subset(lib, species, mask));
        } catch (const NumericError&) {
            RegressionFit bad;
            bad.mask = mask;
            bad.feasible = false;
            bad.k = mask.popcount();
            bad.m = lib.rows();
            bad.beta = Eigen::VectorXd::Zero(n + 1);
            ranking.fits.push_back(std::move(bad));
        }
    }
    std::sort(ranking.fits.begin(), ranking.fits.end(),
              [criterion](const RegressionFit& a, const RegressionFit& b) { return ranks_before(a, b, criterion); });
    return ranking;
}

int LassoResult::nonzeros() const {
    int c = 0;
    for (Eigen::Index j = 1; j < beta.size(); ++j) c += beta(j) != 0.0;
    return c;
}

double lasso_lambda_max(const FeatureLibrary& lib, int species) {
    const Eigen::VectorXd y = lib.targets().col(species);
    const Eigen::VectorXd centered = y.array() - y.mean();
    double best = 0.0;
    for (int j = 1; j <= lib.n(); ++j) best = std::max(best, std::abs(lib.matrix().col(j).dot(centered)));
    return best;
}

double lasso_objective(const FeatureLibrary& lib, int species, double lambda, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd r = lib.targets().col(species) - lib.matrix() * beta;
    return 0.5 * r.squaredNorm() + lambda * beta.tail(beta.size() - 1).lpNorm<1>();
}

double lasso_kkt_residual(const FeatureLibrary& lib, int species, double lambda, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd r = lib.targets().col(species) - lib.matrix() * beta;
    const Eigen::VectorXd g = lib.matrix().transpose() * r;
    double worst = std::abs(g(0));
    for (Eigen::Index j = 1; j < beta.size(); ++j) {
        const double v = beta(j) != 0.0 ? std::abs(g(j) - lambda * (beta(j) > 0 ? 1.0 : -1.0))
                                        : std::max(0.0, std::abs(g(j)) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

LassoResult lasso(const FeatureLibrary& lib, int species, double lambda, const LassoOptions& opt,
                  const std::optional<Eigen::VectorXd>& warm_start) {
    if (!(lambda >= 0.0)) throw DataError(kModule, "lambda must be nonnegative");
    if (species < 0 || species >= lib.species_count()) throw DataError(kModule, "species index out of range");
    const auto& f = lib.matrix();
    const Eigen::VectorXd y = lib.targets().col(species);
    const Eigen::Index p = f.cols();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (warm_start) {
        if (warm_start->size() != p) throw DataError(kModule, "warm start has the wrong length");
        beta = *warm_start;
    } else {
        beta(0) = y.mean();
    }
    Eigen::VectorXd r = y - f * beta;
    const Eigen::VectorXd col_sq = f.colwise().squaredNorm();
    const double m = static_cast<double>(f.rows());

    LassoResult out;
    if (lambda >= lasso_lambda_max(lib, species)) {
        // The intercept-only model is exact here; skip the sweeps so rounding
        // at the threshold cannot leave tiny nonzeros behind.
        out.beta = Eigen::VectorXd::Zero(p);
        out.beta(0) = y.mean();
        out.sweeps = 0;
        out.kkt_residual = lasso_kkt_residual(lib, species, lambda, out.beta);
        return out;
    }
    for (out.sweeps = 1; out.sweeps <= opt.max_sweeps; ++out.sweeps) {
        double max_change = 0.0;
        const double d0 = r.sum() / m;
        beta(0) += d0;
        r.array() -= d0;
        max_change = std::abs(d0);
        for (Eigen::Index j = 1; j < p; ++j) {
            if (col_sq(j) == 0.0) continue;
            const double rho = f.col(j).dot(r) + col_sq(j) * beta(j);
            const double shrunk = rho > lambda ? rho - lambda : (rho < -lambda ? rho + lambda : 0.0);
            const double updated = shrunk / col_sq(j);
            const double delta = updated - beta(j);
            if (delta != 0.0) {
                r -= delta * f.col(j);
                beta(j) = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change < opt.tolerance) break;
    }
    if (out.sweeps > opt.max_sweeps) {
        throw LassoNotConverged("coordinate descent did not converge in " + std::to_string(opt.max_sweeps) +
                                " sweeps (ill-conditioned features?)");
    }
    out.beta = std::move(beta);
    out.kkt_residual = lasso_kkt_residual(lib, species, lambda, out.beta);
    return out;
}

}  // namespace airdyn
