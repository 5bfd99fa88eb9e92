#pragma once

// Per-frame least-squares ego-velocity estimation and the first-order
// covariance of that estimate.

#include <autosar/errors.hpp>
#include <autosar/radar_model.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace autosar {

/// Smaller/larger singular value ratio below which G is treated as rank 1.
inline constexpr double kRankTolerance = 1e-10;

struct VelocityEstimate {
    Vec2 v_hat = Vec2::Zero();
    /// Filled by callers that also evaluate the analytical covariance.
    Mat2 covariance = Mat2::Zero();
    double residual_norm = 0.0;  // Hz
};

/// Covariance split into its Doppler-noise and angle-noise parts.
struct VelocityCovarianceTerms {
    Mat2 doppler = Mat2::Zero();  // sigma_f^2 Gamma
    Mat2 angle = Mat2::Zero();    // sigma_phi^2 Gamma G^T D^2 G Gamma

    Mat2 total() const { return doppler + angle; }
};

namespace detail {

inline void require_full_rank(const Eigen::JacobiSVD<Eigen::MatrixX2d>& svd) {
    const auto& s = svd.singularValues();
    if (!(s[1] >= kRankTolerance * s[0]) || s[0] == 0.0)
        throw SingularGeometry("reflector geometry is rank deficient (all angles coincide)");
}

}  // namespace detail

/// v_T(theta) = v_x cos(theta) - v_y sin(theta).
inline double tangential_velocity(const Vec2& v, double theta) noexcept {
    return v.dot(steering_derivative(theta));
}

/// argmin 0.5 ||G(phi_meas) v - f||^2 via an SVD of G.
inline VelocityEstimate estimate_velocity(const FrameDetections& det, double wavelength) {
    if (det.angles.size() != det.dopplers.size())
        throw DimensionMismatch("detections: angle and Doppler vectors differ in length");
    if (det.angles.size() < 2) throw InsufficientDetections("velocity estimation needs at least two detections");

    const Eigen::MatrixX2d g = doppler_matrix(det.angles, wavelength);
    Eigen::JacobiSVD<Eigen::MatrixX2d> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    detail::require_full_rank(svd);

    VelocityEstimate est;
    est.v_hat = svd.solve(det.dopplers);
    est.residual_norm = (g * est.v_hat - det.dopplers).norm();
    return est;
}

/// First-order covariance of estimate_velocity around the true geometry:
/// sigma_f^2 Gamma + sigma_phi^2 Gamma G^T D^2 G Gamma, Gamma = (G^T G)^-1,
/// D = (2/lambda) diag(p'(phi_i)^T v).
inline VelocityCovarianceTerms velocity_covariance_terms(const Eigen::VectorXd& true_angles, const Vec2& v,
                                                         const RadarConfig& config) {
    if (true_angles.size() < 2) throw InsufficientDetections("velocity covariance needs at least two reflectors");
    const double lambda = config.wavelength();
    const Eigen::MatrixX2d g = doppler_matrix(true_angles, lambda);
    detail::require_full_rank(Eigen::JacobiSVD<Eigen::MatrixX2d>(g));

    const Mat2 gamma = (g.transpose() * g).inverse();

    // G^T D^2 G accumulated row by row; D is diagonal so no K x K matrix is formed.
    Mat2 gdg = Mat2::Zero();
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const double d = 2.0 / lambda * tangential_velocity(v, true_angles[i]);
        const Vec2 row = g.row(i).transpose();
        gdg += d * d * row * row.transpose();
    }

    VelocityCovarianceTerms terms;
    terms.doppler = config.sigma_f_hz * config.sigma_f_hz * gamma;
    terms.angle = config.sigma_phi_rad * config.sigma_phi_rad * gamma * gdg * gamma;
    // Symmetrize away round-off.
    terms.doppler = 0.5 * (terms.doppler + terms.doppler.transpose()).eval();
    terms.angle = 0.5 * (terms.angle + terms.angle.transpose()).eval();
    return terms;
}

inline Mat2 velocity_covariance_analytical(const Eigen::VectorXd& true_angles, const Vec2& v,
                                           const RadarConfig& config) {
    return velocity_covariance_terms(true_angles, v, config).total();
}

}  // namespace autosar
