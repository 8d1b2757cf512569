#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "airdyn/error.hpp"

namespace airdyn {

/// max(8, ceil(log2 m) + 1).
int default_bins(std::size_t m);
/// floor(m / 4).
int default_tau_max(std::size_t m);

/// Average mutual information (nats) between x[l] and x[l + tau] from an
/// equal-width `bins` x `bins` histogram over the series range.
double ami(std::span<const double> series, int tau, int bins);

struct AmiCurve {
    std::vector<int> lags;  // 1..tau_max
    std::vector<double> ami;
};

AmiCurve ami_curve(std::span<const double> series, int tau_max, int bins);

struct LagSelection {
    int tau = 1;
    bool fallback = false;  // no interior local minimum; tau is the global argmin
    AmiCurve curve;
};

/// First tau with ami(tau-1) > ami(tau) < ami(tau+1). Zero arguments pick the defaults.
LagSelection select_lag(std::span<const double> series, int tau_max = 0, int bins = 0);

struct DelayEmbedding {
    int tau = 1;
    int d = 2;
    std::vector<Eigen::Vector2d> points;  // (x[j], x[j + tau])
};

DelayEmbedding delay_embed(std::span<const double> series, int tau);

struct CorrectionCandidate {
    double theta = 0.0;  // [0, 2*pi)
    bool reflected = false;
    Eigen::Matrix2d matrix = Eigen::Matrix2d::Identity();
    double loss = 0.0;
};

/// Rotation R(theta) = [[cos, -sin], [sin, cos]] or reflection S * R(theta)
/// with S = [[0, 1], [1, 0]].
Eigen::Matrix2d orthogonal_matrix(double theta, bool reflected);

struct OrthogonalCorrection : CorrectionCandidate {
    /// Every refined local minimum on both branches, best first, identity
    /// neighbours removed.
    std::vector<CorrectionCandidate> candidates;
};

inline constexpr int kCorrectionGrid = 3600;

/// sum_j ((A p_j)_1 - observed_j)^2.
double correction_loss(const DelayEmbedding& emb, std::span<const double> observed, const Eigen::Matrix2d& a);

/// Minimizes the first-coordinate mismatch over O(2), excluding matrices within
/// Frobenius distance 1e-6 of the identity.
OrthogonalCorrection fit_orthogonal_correction(const DelayEmbedding& emb, std::span<const double> observed);

std::vector<Eigen::Vector2d> reconstruct(const DelayEmbedding& emb, const Eigen::Matrix2d& correction);

}  // namespace airdyn
