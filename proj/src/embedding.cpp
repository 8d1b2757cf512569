#include "airdyn/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace airdyn {

namespace {

const char* kModule = "embedding";
constexpr double kTwoPi = 2.0 * std::numbers::pi;

int bin_of(double v, double lo, double width, int bins) {
    if (width <= 0.0) return 0;
    const int b = static_cast<int>(std::floor((v - lo) / width));
    return std::clamp(b, 0, bins - 1);
}

// Loss as a quadratic in the first row r: r' G r - 2 r' h + c.
struct LossForm {
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    Eigen::Vector2d h = Eigen::Vector2d::Zero();
    double c = 0.0;

    double operator()(double theta, bool reflected) const {
        const Eigen::Vector2d r = orthogonal_matrix(theta, reflected).row(0).transpose();
        return std::max(0.0, r.dot(g * r) - 2.0 * r.dot(h) + c);
    }
};

double wrap(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;
    return t;
}

double golden_section(const LossForm& f, bool reflected, double lo, double hi, double tol) {
    const double inv = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv * (b - a), d = a + inv * (b - a);
    double fc = f(c, reflected), fd = f(d, reflected);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv * (b - a);
            fc = f(c, reflected);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv * (b - a);
            fd = f(d, reflected);
        }
    }
    return (a + b) / 2.0;
}

bool better(const CorrectionCandidate& a, const CorrectionCandidate& b) {
    const double tol = 1e-12 * (1.0 + std::min(a.loss, b.loss));
    if (std::abs(a.loss - b.loss) > tol) return a.loss < b.loss;
    if (a.reflected != b.reflected) return !a.reflected;
    return a.theta < b.theta;
}

}  // namespace

int default_bins(std::size_t m) {
    const int sturges = m > 1 ? static_cast<int>(std::ceil(std::log2(static_cast<double>(m)))) + 1 : 1;
    return std::max(8, sturges);
}

int default_tau_max(std::size_t m) { return static_cast<int>(m / 4); }

double ami(std::span<const double> series, int tau, int bins) {
    if (bins < 2) throw DataError(kModule, "AMI needs at least 2 bins");
    if (tau < 1 || static_cast<std::size_t>(tau) >= series.size()) {
        throw DataError(kModule, "lag " + std::to_string(tau) + " out of range for a series of length " +
                                     std::to_string(series.size()));
    }
    const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
    const double lo = *lo_it, width = (*hi_it - *lo_it) / bins;
    const std::size_t n = series.size() - static_cast<std::size_t>(tau);
    const auto nb = static_cast<std::size_t>(bins);
    std::vector<double> joint(nb * nb, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
        const auto a = static_cast<std::size_t>(bin_of(series[l], lo, width, bins));
        const auto b = static_cast<std::size_t>(bin_of(series[l + static_cast<std::size_t>(tau)], lo, width, bins));
        joint[a * nb + b] += 1.0;
    }
    std::vector<double> pa(nb, 0.0), pb(nb, 0.0);
    for (std::size_t a = 0; a < nb; ++a) {
        for (std::size_t b = 0; b < nb; ++b) {
            joint[a * nb + b] /= static_cast<double>(n);
            pa[a] += joint[a * nb + b];
            pb[b] += joint[a * nb + b];
        }
    }
    double out = 0.0;
    for (std::size_t a = 0; a < nb; ++a) {
        for (std::size_t b = 0; b < nb; ++b) {
            const double q = joint[a * nb + b];
            if (q > 0.0) out += q * std::log(q / (pa[a] * pb[b]));
        }
    }
    return out;
}

AmiCurve ami_curve(std::span<const double> series, int tau_max, int bins) {
    if (tau_max < 1 || static_cast<std::size_t>(tau_max) >= series.size()) {
        throw DataError(kModule, "tau_max must be in [1, length)");
    }
    AmiCurve c;
    for (int t = 1; t <= tau_max; ++t) {
        c.lags.push_back(t);
        c.ami.push_back(ami(series, t, bins));
    }
    return c;
}

LagSelection select_lag(std::span<const double> series, int tau_max, int bins) {
    if (tau_max == 0) tau_max = default_tau_max(series.size());
    if (bins == 0) bins = default_bins(series.size());
    LagSelection sel;
    sel.curve = ami_curve(series, tau_max, bins);
    const auto& v = sel.curve.ami;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i - 1] > v[i] && v[i] < v[i + 1]) {
            sel.tau = sel.curve.lags[i];
            return sel;
        }
    }
    sel.fallback = true;
    sel.tau = sel.curve.lags[static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin())];
    return sel;
}

DelayEmbedding delay_embed(std::span<const double> series, int tau) {
    if (tau < 1 || static_cast<std::size_t>(tau) >= series.size()) {
        throw DataError(kModule, "lag " + std::to_string(tau) + " too large for a series of length " +
                                     std::to_string(series.size()));
    }
    DelayEmbedding e;
    e.tau = tau;
    const std::size_t n = series.size() - static_cast<std::size_t>(tau);
    e.points.reserve(n);
    for (std::size_t j = 0; j < n; ++j) e.points.emplace_back(series[j], series[j + static_cast<std::size_t>(tau)]);
    return e;
}

Eigen::Matrix2d orthogonal_matrix(double theta, bool reflected) {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    if (!reflected) return r;
    Eigen::Matrix2d swap;
    swap << 0.0, 1.0, 1.0, 0.0;
    return swap * r;
}

double correction_loss(const DelayEmbedding& emb, std::span<const double> observed, const Eigen::Matrix2d& a) {
    if (observed.size() != emb.points.size()) throw DataError(kModule, "observed length differs from the embedding");
    double acc = 0.0;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        const double d = a.row(0).dot(emb.points[j]) - observed[j];
        acc += d * d;
    }
    return acc;
}

OrthogonalCorrection fit_orthogonal_correction(const DelayEmbedding& emb, std::span<const double> observed) {
    if (observed.size() != emb.points.size()) throw DataError(kModule, "observed length differs from the embedding");
    if (observed.empty()) throw DataError(kModule, "empty embedding");
    LossForm f;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        const auto& p = emb.points[j];
        f.g += p * p.transpose();
        f.h += p * observed[j];
        f.c += observed[j] * observed[j];
    }

    const double step = kTwoPi / kCorrectionGrid;
    std::vector<CorrectionCandidate> found;
    for (bool reflected : {false, true}) {
        std::vector<double> grid(kCorrectionGrid);
        for (int k = 0; k < kCorrectionGrid; ++k) grid[static_cast<std::size_t>(k)] = f(step * k, reflected);
        for (int k = 0; k < kCorrectionGrid; ++k) {
            const double prev = grid[static_cast<std::size_t>((k + kCorrectionGrid - 1) % kCorrectionGrid)];
            const double next = grid[static_cast<std::size_t>((k + 1) % kCorrectionGrid)];
            const double here = grid[static_cast<std::size_t>(k)];
            if (!(here <= prev && here < next)) continue;
            double theta = golden_section(f, reflected, step * (k - 1), step * (k + 1), 1e-8);
            if (f(theta, reflected) > here) theta = step * k;
            CorrectionCandidate c;
            c.theta = wrap(theta);
            c.reflected = reflected;
            c.matrix = orthogonal_matrix(c.theta, reflected);
            c.loss = correction_loss(emb, observed, c.matrix);
            if ((c.matrix - Eigen::Matrix2d::Identity()).norm() <= 1e-6) continue;
            found.push_back(c);
        }
    }
    if (found.empty()) throw NumericError(kModule, "no orthogonal correction other than the identity");
    std::sort(found.begin(), found.end(), better);
    OrthogonalCorrection out;
    static_cast<CorrectionCandidate&>(out) = found.front();
    out.candidates = std::move(found);
    return out;
}

std::vector<Eigen::Vector2d> reconstruct(const DelayEmbedding& emb, const Eigen::Matrix2d& correction) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(emb.points.size());
    for (const auto& p : emb.points) out.push_back(correction * p);
    return out;
}

}  // namespace airdyn
