#include "airdyn/stability.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace airdyn {

namespace {

const char* kModule = "stability";
constexpr double kImagTol = 1e-8;
constexpr double kDedupTol = 1e-8;
constexpr double kResidualTol = 1e-8;

void trim(Poly& p, double rel = 0.0) {
    double scale = 0.0;
    for (double c : p) scale = std::max(scale, std::abs(c));
    while (!p.empty() && std::abs(p.back()) <= rel * scale) p.pop_back();
}

Poly mul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

Poly add(const Poly& a, const Poly& b, double sign = 1.0) {
    Poly out(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += sign * b[i];
    return out;
}

template <typename T>
T horner(const Poly& p, T x) {
    T acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
    return acc;
}

// Coefficients in y of row `i` of the model, each a polynomial in y1:
// [y^0, y^1, y^2] = [b0 + b1 x + b3 x^2, b2 + b4 x, b5].
std::array<Poly, 3> in_y(const QuadraticModel& m, int i) {
    const auto& b = m.coeffs;
    std::array<Poly, 3> c{Poly{b(i, 0), b(i, 1), b(i, 3)}, Poly{b(i, 2), b(i, 4)}, Poly{b(i, 5)}};
    for (auto& p : c) trim(p);
    return c;
}

int degree_in_y(const std::array<Poly, 3>& c) {
    for (int k = 2; k >= 0; --k)
        if (!c[static_cast<std::size_t>(k)].empty()) return k;
    return -1;
}

Poly determinant(std::vector<std::vector<Poly>> m) {
    const std::size_t n = m.size();
    if (n == 1) return m[0][0];
    Poly det;
    for (std::size_t c = 0; c < n; ++c) {
        if (m[0][c].empty()) continue;
        std::vector<std::vector<Poly>> minor;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<Poly> row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != c) row.push_back(m[r][k]);
            minor.push_back(std::move(row));
        }
        det = add(det, mul(m[0][c], determinant(std::move(minor))), c % 2 == 0 ? 1.0 : -1.0);
    }
    return det;
}

std::array<Complex, 2> eig2(const Eigen::Matrix2cd& j) {
    const Complex tr = j(0, 0) + j(1, 1);
    const Complex det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    const Complex disc = std::sqrt(tr * tr - 4.0 * det);
    return {(tr + disc) / 2.0, (tr - disc) / 2.0};
}

struct ComplexPQ {
    const QuadraticModel& m;
    Eigen::Vector2cd f(const Eigen::Vector2cd& z) const {
        Eigen::Vector2cd out;
        for (int i = 0; i < 2; ++i) {
            const auto& b = m.coeffs;
            out(i) = b(i, 0) + b(i, 1) * z(0) + b(i, 2) * z(1) + b(i, 3) * z(0) * z(0) + b(i, 4) * z(0) * z(1) +
                     b(i, 5) * z(1) * z(1);
        }
        return out;
    }
    Eigen::Matrix2cd jac(const Eigen::Vector2cd& z) const {
        const auto& b = m.coeffs;
        Eigen::Matrix2cd j;
        for (int i = 0; i < 2; ++i) {
            j(i, 0) = b(i, 1) + 2.0 * b(i, 3) * z(0) + b(i, 4) * z(1);
            j(i, 1) = b(i, 2) + b(i, 4) * z(0) + 2.0 * b(i, 5) * z(1);
        }
        return j;
    }
};

Eigen::Vector2cd polish(const ComplexPQ& sys, Eigen::Vector2cd z) {
    for (int it = 0; it < 60; ++it) {
        const Eigen::Vector2cd fz = sys.f(z);
        const Eigen::Matrix2cd j = sys.jac(z);
        const Complex det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
        if (std::abs(det) == 0.0) break;
        Eigen::Matrix2cd inv;
        inv << j(1, 1), -j(0, 1), -j(1, 0), j(0, 0);
        const Eigen::Vector2cd step = inv * fz / det;
        if (!step.allFinite()) break;
        z -= step;
        if (step.norm() <= 1e-15 * (1.0 + z.norm())) break;
    }
    return z;
}

double residual_of(const ComplexPQ& sys, const Eigen::Vector2cd& z) {
    const Eigen::Vector2cd fz = sys.f(z);
    return std::max(std::abs(fz(0)), std::abs(fz(1)));
}

// Roots in y of c0 + c1 y + c2 y^2 with complex coefficients; empty if the
// polynomial vanishes identically.
std::vector<Complex> roots_in_y(const std::array<Complex, 3>& c, double scale) {
    const double tol = 1e-12 * std::max(scale, 1e-300);
    if (std::abs(c[2]) > tol) {
        const Complex disc = std::sqrt(c[1] * c[1] - 4.0 * c[2] * c[0]);
        // Avoid cancellation.
        const Complex q = -0.5 * (c[1] + (std::real(std::conj(c[1]) * disc) >= 0.0 ? disc : -disc));
        std::vector<Complex> r;
        r.push_back(q / c[2]);
        r.push_back(std::abs(q) > 0.0 ? c[0] / q : Complex(0.0));
        return r;
    }
    if (std::abs(c[1]) > tol) return {-c[0] / c[1]};
    return {};
}

bool vanishes(const std::array<Complex, 3>& c, double scale) {
    const double tol = 1e-10 * std::max(scale, 1e-300);
    return std::abs(c[0]) <= tol && std::abs(c[1]) <= tol && std::abs(c[2]) <= tol;
}

double model_scale(const QuadraticModel& m, int i) { return m.coeffs.row(i).cwiseAbs().maxCoeff(); }

// Residual tolerance, relaxed only for far-away points whose monomials are large.
double accept_tol(const QuadraticModel& m, const Eigen::Vector2cd& z) {
    const double s = std::max(model_scale(m, 0), model_scale(m, 1));
    const double r = 1.0 + z.norm();
    return kResidualTol * std::max(1.0, 1e-8 * s * r * r);
}

}  // namespace

std::string to_string(PointClass c) {
    switch (c) {
        case PointClass::StableNode: return "stable_node";
        case PointClass::UnstableNode: return "unstable_node";
        case PointClass::Saddle: return "saddle";
        case PointClass::StableSpiral: return "stable_spiral";
        case PointClass::UnstableSpiral: return "unstable_spiral";
        case PointClass::Degenerate: return "degenerate";
    }
    return "degenerate";
}

std::size_t StabilityReport::real_count() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return p.is_real; }));
}

Poly resultant_in_y1(const QuadraticModel& model) {
    const auto p = in_y(model, 0);
    const auto q = in_y(model, 1);
    const int dp = degree_in_y(p), dq = degree_in_y(q);
    if (dp < 0 || dq < 0) {
        // One equation vanishes identically: every zero of the other is critical.
        throw SharedComponent("one right-hand side is identically zero; critical points are not isolated");
    }
    if (dp == 0 && dq == 0) return {};  // no y dependence; handled by the caller
    const std::size_t n = static_cast<std::size_t>(dp + dq);
    std::vector<std::vector<Poly>> syl(n, std::vector<Poly>(n));
    for (int r = 0; r < dq; ++r)
        for (int k = 0; k <= dp; ++k)
            syl[static_cast<std::size_t>(r)][static_cast<std::size_t>(r + k)] = p[static_cast<std::size_t>(dp - k)];
    for (int r = 0; r < dp; ++r)
        for (int k = 0; k <= dq; ++k)
            syl[static_cast<std::size_t>(dq + r)][static_cast<std::size_t>(r + k)] = q[static_cast<std::size_t>(dq - k)];
    return determinant(std::move(syl));
}

std::vector<Complex> polynomial_roots(const Poly& coeffs) {
    Poly p = coeffs;
    trim(p, 1e-14);
    if (p.size() <= 1) return {};
    const std::size_t d = p.size() - 1;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 1; i < d; ++i) companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d - 1)) = -p[i] / p[d];
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    if (es.info() != Eigen::Success) throw NumericError(kModule, "companion eigenvalue computation failed");
    Poly dp(d);
    for (std::size_t i = 1; i <= d; ++i) dp[i - 1] = static_cast<double>(i) * p[i];
    std::vector<Complex> roots;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        Complex x = es.eigenvalues()(i);
        for (int it = 0; it < 5; ++it) {
            const Complex fx = horner<Complex>(p, x);
            const Complex dfx = horner<Complex>(dp, x);
            if (std::abs(dfx) == 0.0) break;
            const Complex nx = x - fx / dfx;
            if (!std::isfinite(nx.real()) || !std::isfinite(nx.imag())) break;
            if (std::abs(horner<Complex>(p, nx)) >= std::abs(fx)) break;
            x = nx;
        }
        roots.push_back(x);
    }
    return roots;
}

Classification classify_jacobian(const Eigen::Matrix2d& j) {
    const double scale = std::max(j.cwiseAbs().maxCoeff(), 1e-300);
    const double tr = j.trace();
    const double det = j.determinant();
    const double disc = tr * tr - 4.0 * det;
    const double disc_tol = 1e-12 * scale * scale;
    const double zero_tol = 1e-12 * scale;

    Classification out;
    if (std::abs(disc) <= disc_tol) {
        // Repeated real eigenvalue: star or improper node unless it is zero.
        const double l = tr / 2.0;
        out.eigenvalues = {Complex(l), Complex(l)};
        if (std::abs(l) <= zero_tol) {
            out.cls = PointClass::Degenerate;
        } else {
            out.cls = l < 0.0 ? PointClass::StableNode : PointClass::UnstableNode;
        }
        return out;
    }
    if (disc > 0.0) {
        const double root = std::sqrt(disc);
        const double q = 0.5 * (tr + (tr >= 0.0 ? root : -root));
        double l1 = q != 0.0 ? det / q : 0.0;
        double l2 = q;
        if (tr == 0.0) {
            l1 = root / 2.0;
            l2 = -root / 2.0;
        }
        if (l1 < l2) std::swap(l1, l2);
        out.eigenvalues = {Complex(l1), Complex(l2)};
        if (std::abs(l1) <= zero_tol || std::abs(l2) <= zero_tol) {
            out.cls = PointClass::Degenerate;
        } else if (l1 < 0.0) {
            out.cls = PointClass::StableNode;
        } else if (l2 > 0.0) {
            out.cls = PointClass::UnstableNode;
        } else {
            out.cls = PointClass::Saddle;
        }
        return out;
    }
    const double a = tr / 2.0;
    const double b = std::sqrt(-disc) / 2.0;
    out.eigenvalues = {Complex(a, b), Complex(a, -b)};
    if (std::abs(a) <= zero_tol) {
        out.cls = PointClass::Degenerate;
    } else {
        out.cls = a < 0.0 ? PointClass::StableSpiral : PointClass::UnstableSpiral;
    }
    return out;
}

Classification classify_point(const QuadraticModel& model, const Eigen::Vector2d& z) {
    return classify_jacobian(evaluate_jacobian(model, z));
}

StabilityReport critical_points(const QuadraticModel& model) {
    if (!model.coeffs.allFinite()) throw DataError(kModule, "model coefficients must be finite");
    const ComplexPQ sys{model};
    const auto p = in_y(model, 0);
    const auto q = in_y(model, 1);
    const int dp = degree_in_y(p), dq = degree_in_y(q);

    StabilityReport report;
    std::vector<Eigen::Vector2cd> found;
    auto add_point = [&](Eigen::Vector2cd z) {
        for (auto& f : found) {
            if ((f - z).cwiseAbs().maxCoeff() <= kDedupTol) {
                if (residual_of(sys, z) < residual_of(sys, f)) f = z;
                return;
            }
        }
        found.push_back(z);
    };

    if (dp == 0 && dq == 0 && !p[0].empty() && !q[0].empty()) {
        // P, Q depend on y1 only: a common zero gives a whole vertical line.
        for (const auto& x : polynomial_roots(p[0])) {
            if (std::abs(horner<Complex>(q[0], x)) <= 1e-10 * std::max(1.0, model_scale(model, 1))) {
                throw SharedComponent("P and Q share the line y1 = " + std::to_string(x.real()));
            }
        }
        return report;
    }

    Poly res = resultant_in_y1(model);
    double res_scale = 1.0;
    {
        const double sp = std::max(model_scale(model, 0), 1e-300), sq = std::max(model_scale(model, 1), 1e-300);
        res_scale = std::pow(sp, dq) * std::pow(sq, dp);
        double mx = 0.0;
        for (double c : res) mx = std::max(mx, std::abs(c));
        if (mx <= 1e-12 * res_scale) {
            throw SharedComponent("resultant vanishes identically: P and Q share a common component");
        }
    }
    trim(res, 1e-14);
    const auto xs = polynomial_roots(res);

    auto at_x = [&](const std::array<Poly, 3>& c, Complex x) {
        return std::array<Complex, 3>{horner<Complex>(c[0], x), horner<Complex>(c[1], x), horner<Complex>(c[2], x)};
    };
    int at_infinity = 0;
    for (const Complex& x : xs) {
        const auto py = at_x(p, x);
        const auto qy = at_x(q, x);
        const double sp = model_scale(model, 0) * (1.0 + std::abs(x) * std::abs(x));
        const double sq = model_scale(model, 1) * (1.0 + std::abs(x) * std::abs(x));
        const bool p_zero = vanishes(py, sp), q_zero = vanishes(qy, sq);
        if (p_zero && q_zero) throw SharedComponent("P and Q vanish on the whole line y1 = " + std::to_string(x.real()));

        std::vector<Complex> ys;
        if (!p_zero) {
            auto r = roots_in_y(py, sp);
            ys.insert(ys.end(), r.begin(), r.end());
        }
        if (!q_zero) {
            auto r = roots_in_y(qy, sq);
            ys.insert(ys.end(), r.begin(), r.end());
        }
        bool matched = false;
        for (const Complex& y : ys) {
            Eigen::Vector2cd z(x, y);
            z = polish(sys, z);
            if (z.allFinite() && residual_of(sys, z) <= accept_tol(model, z)) {
                add_point(z);
                matched = true;
            }
        }
        if (!matched) {
            const auto lead_p = py[static_cast<std::size_t>(std::max(dp, 0))];
            const auto lead_q = qy[static_cast<std::size_t>(std::max(dq, 0))];
            if (std::abs(lead_p) <= 1e-9 * sp && std::abs(lead_q) <= 1e-9 * sq) {
                ++at_infinity;  // both leading coefficients vanish: intersection at infinity
                continue;
            }
            const Eigen::Index d = static_cast<Eigen::Index>(res.size()) - 1;
            Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
            for (Eigen::Index i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
            for (Eigen::Index i = 0; i < d; ++i) companion(i, d - 1) = -res[static_cast<std::size_t>(i)] / res.back();
            Eigen::EigenSolver<Eigen::MatrixXd> es(companion, true);
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
            const auto sv = svd.singularValues();
            const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
            throw IllConditionedResultant(
                "resultant root y1 = " + std::to_string(x.real()) + " did not polish to a critical point", cond);
        }
    }
    report.multiplicity_total = static_cast<int>(xs.size()) - at_infinity;

    // Split into real points and conjugate pairs.
    std::vector<Eigen::Vector2cd> complex_pts;
    for (auto z : found) {
        if (std::abs(z(0).imag()) <= kImagTol && std::abs(z(1).imag()) <= kImagTol) {
            z(0) = z(0).real();
            z(1) = z(1).real();
            z = polish(sys, z);
            CriticalPoint cp;
            cp.z = {Complex(z(0).real()), Complex(z(1).real())};
            cp.is_real = true;
            const Eigen::Vector2d zr(z(0).real(), z(1).real());
            const auto cls = classify_point(model, zr);
            cp.eigenvalues = cls.eigenvalues;
            cp.cls = cls.cls;
            cp.physical = destandardize(zr, model.norm);
            cp.residual = residual_of(sys, Eigen::Vector2cd(cp.z[0], cp.z[1]));
            report.counts[cls.cls] += 1;
            report.points.push_back(cp);
        } else {
            complex_pts.push_back(z);
        }
    }
    std::vector<bool> used(complex_pts.size(), false);
    for (std::size_t i = 0; i < complex_pts.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        Eigen::Vector2cd z = complex_pts[i];
        if (z(0).imag() < 0.0 || (z(0).imag() == 0.0 && z(1).imag() < 0.0)) z = z.conjugate().eval();
        for (std::size_t k = i + 1; k < complex_pts.size(); ++k) {
            if (!used[k] && (complex_pts[k] - complex_pts[i].conjugate()).cwiseAbs().maxCoeff() <= 1e-6) {
                used[k] = true;
                break;
            }
        }
        for (const Eigen::Vector2cd& w : {z, Eigen::Vector2cd(z.conjugate())}) {
            CriticalPoint cp;
            cp.z = {w(0), w(1)};
            cp.is_real = false;
            cp.eigenvalues = eig2(sys.jac(w));
            cp.residual = residual_of(sys, w);
            report.points.push_back(cp);
        }
    }
    std::stable_sort(report.points.begin(), report.points.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.is_real != b.is_real) return a.is_real;
        if (a.z[0].real() != b.z[0].real()) return a.z[0].real() < b.z[0].real();
        if (a.z[1].real() != b.z[1].real()) return a.z[1].real() < b.z[1].real();
        return a.z[0].imag() > b.z[0].imag();
    });
    return report;
}

Eigen::Vector2d destandardize(const Eigen::Vector2d& z, const std::array<NormParams, 2>& norm) {
    for (const auto& n : norm)
        if (!(n.sigma > 0.0)) throw DataError(kModule, "standard deviations must be positive");
    return {norm[0].mu + z(0) * norm[0].sigma, norm[1].mu + z(1) * norm[1].sigma};
}

Eigen::Vector2d standardize_point(const Eigen::Vector2d& y, const std::array<NormParams, 2>& norm) {
    for (const auto& n : norm)
        if (!(n.sigma > 0.0)) throw DataError(kModule, "standard deviations must be positive");
    return {(y(0) - norm[0].mu) / norm[0].sigma, (y(1) - norm[1].mu) / norm[1].sigma};
}

namespace {

// Model in coordinates v where the old coordinates are u = p*v + q, with
// each equation multiplied by `outer[i]`.
QuadraticModel substitute(const QuadraticModel& m, const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                          const Eigen::Vector2d& outer) {
    QuadraticModel out;
    for (int i = 0; i < 2; ++i) {
        const auto b = m.coeffs.row(i);
        out.coeffs(i, 0) = b(0) + b(1) * q(0) + b(2) * q(1) + b(3) * q(0) * q(0) + b(4) * q(0) * q(1) + b(5) * q(1) * q(1);
        out.coeffs(i, 1) = p(0) * (b(1) + 2.0 * b(3) * q(0) + b(4) * q(1));
        out.coeffs(i, 2) = p(1) * (b(2) + b(4) * q(0) + 2.0 * b(5) * q(1));
        out.coeffs(i, 3) = b(3) * p(0) * p(0);
        out.coeffs(i, 4) = b(4) * p(0) * p(1);
        out.coeffs(i, 5) = b(5) * p(1) * p(1);
        out.coeffs.row(i) *= outer(i);
    }
    return out;
}

}  // namespace

QuadraticModel to_physical(const QuadraticModel& standardized) {
    const auto& n = standardized.norm;
    for (const auto& s : n)
        if (!(s.sigma > 0.0)) throw DataError(kModule, "standard deviations must be positive");
    // w = y / sigma - mu / sigma; dy/dt = sigma * F(w).
    QuadraticModel out = substitute(standardized, {1.0 / n[0].sigma, 1.0 / n[1].sigma},
                                    {-n[0].mu / n[0].sigma, -n[1].mu / n[1].sigma}, {n[0].sigma, n[1].sigma});
    out.norm = {NormParams{0.0, 1.0}, NormParams{0.0, 1.0}};
    return out;
}

QuadraticModel to_standardized(const QuadraticModel& physical, const std::array<NormParams, 2>& norm) {
    for (const auto& s : norm)
        if (!(s.sigma > 0.0)) throw DataError(kModule, "standard deviations must be positive");
    // y = mu + sigma * w; dw/dt = G(y) / sigma.
    QuadraticModel out = substitute(physical, {norm[0].sigma, norm[1].sigma}, {norm[0].mu, norm[1].mu},
                                    {1.0 / norm[0].sigma, 1.0 / norm[1].sigma});
    out.norm = norm;
    return out;
}

}  // namespace airdyn
