#pragma once

// Closed-form SAR angle-error machinery: the u vector, omega(N), the full
// angle-variance formula, its constant-velocity / large-K simplification and
// the exact lemma polynomials.
//
// L_N (lower-triangular ones) and Phi_N (mean removal) are never formed as
// dense matrices: L x is a prefix sum, L^T x a suffix sum, Phi x subtracts
// the mean. Everything below is O(N).

#include <autosar/ego_velocity.hpp>
#include <autosar/errors.hpp>
#include <autosar/radar_model.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

namespace autosar {

struct AngleErrorPrediction {
    double variance = 0.0;      // rad^2
    double doppler_term = 0.0;  // part proportional to sigma_f^2
    double angle_term = 0.0;    // part proportional to sigma_phi^2

    double rmse() const { return std::sqrt(variance); }
};

struct LemmaReport {
    std::int64_t n = 0;
    double norm4_direct = 0.0;       // ||Phi L 1||^4 from the explicit vector
    double norm4_closed_form = 0.0;  // N^2 (N^2 - 1)^2 / 144
    double norm2_direct = 0.0;       // ||L^T Phi L 1||^2 from suffix sums
    double norm2_closed_form = 0.0;  // from elements (N - i + 1)(i - 1) / 2
    double omega = 0.0;
    bool elements_exact = false;     // suffix sums equal the element identity bit for bit
};

/// L x.
inline Eigen::VectorXd prefix_sums(const Eigen::VectorXd& x) {
    Eigen::VectorXd out(x.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = acc += x[i];
    return out;
}

/// L^T x.
inline Eigen::VectorXd suffix_sums(const Eigen::VectorXd& x) {
    Eigen::VectorXd out(x.size());
    double acc = 0.0;
    for (Eigen::Index i = x.size() - 1; i >= 0; --i) out[i] = acc += x[i];
    return out;
}

/// Phi x.
inline Eigen::VectorXd remove_mean(const Eigen::VectorXd& x) {
    if (x.size() == 0) return x;
    return (x.array() - x.mean()).matrix();
}

/// Phi_N L_N 1_N, i.e. entries i - (N + 1)/2 for i = 1..N.
inline Eigen::VectorXd centered_ramp(std::int64_t n) {
    Eigen::VectorXd out(n);
    const double mid = (static_cast<double>(n) + 1.0) / 2.0;
    for (std::int64_t i = 0; i < n; ++i) out[i] = static_cast<double>(i + 1) - mid;
    return out;
}

/// u = Phi_N L_N V p'(theta). (An N-vector; it is indexed by frame.)
inline Eigen::VectorXd u_vector(const VelocityTrack& v_track, double theta) {
    return remove_mean(prefix_sums(v_track * steering_derivative(theta)));
}

/// omega(N) = ||Phi L 1||^4 / ||L^T Phi L 1||^2, the Theta(N) frame factor.
inline double omega(std::int64_t n) {
    if (n < 2) throw UndefinedForN1("omega(N) requires N >= 2");
    const Eigen::VectorXd ramp = centered_ramp(n);
    const double norm2 = ramp.squaredNorm();
    return norm2 * norm2 / suffix_sums(ramp).squaredNorm();
}

/// u^T L L^T u / ||u||^4: maps per-frame velocity error variance along p(theta)
/// to angle error variance.
inline double angle_error_factor(const VelocityTrack& v_track, double theta) {
    const Eigen::Index n = v_track.rows();
    if (n < 2) throw UndefinedForN1("angle error needs at least two frames");
    const Eigen::VectorXd u = u_vector(v_track, theta);
    const double unorm2 = u.squaredNorm();

    // Scale-aware zero test: ||u|| <= ||Phi L 1|| * max speed * 1e-12.
    const double max_speed = v_track.rowwise().norm().maxCoeff();
    const double ramp_norm = std::sqrt(static_cast<double>(n) * (static_cast<double>(n) * n - 1.0) / 12.0);
    const double tol = 1e-12 * ramp_norm * max_speed;
    if (max_speed == 0.0 || std::sqrt(unorm2) <= tol)
        throw ZeroTangentialVelocity("u vector vanishes: no tangential velocity at this angle");
    return suffix_sums(u).squaredNorm() / (unorm2 * unorm2);
}

/// var(dtheta) ~= factor * p^T Cov(dv) p for i.i.d. per-frame velocity errors.
inline AngleErrorPrediction angle_variance_general(const VelocityTrack& v_track, double theta,
                                                   const VelocityCovarianceTerms& cov) {
    const double factor = angle_error_factor(v_track, theta);
    const Vec2 p = steering_vector(theta);
    AngleErrorPrediction out;
    out.doppler_term = factor * p.dot(cov.doppler * p);
    out.angle_term = factor * p.dot(cov.angle * p);
    out.variance = out.doppler_term + out.angle_term;
    return out;
}

inline AngleErrorPrediction angle_variance_general(const VelocityTrack& v_track, double theta, const Mat2& cov) {
    VelocityCovarianceTerms terms;
    terms.doppler = cov;
    // An unsplit covariance is reported entirely as doppler_term.
    return angle_variance_general(v_track, theta, terms);
}

/// Full analytical SAR angle variance: velocity covariance of the LS estimator
/// for the given reflectors, propagated through the u-vector link.
inline AngleErrorPrediction angle_variance_full(const VelocityTrack& v_track, double theta,
                                                const Eigen::VectorXd& true_angles, const Vec2& v,
                                                const RadarConfig& config) {
    return angle_variance_general(v_track, theta, velocity_covariance_terms(true_angles, v, config));
}

/// Constant velocity, K reflectors uniform over [-pi/2, pi/2] in the large-K limit:
///
///   var = p^T (sigma_f^2 lambda^2 I + sigma_phi^2 M) p / (2 K omega(N) v_T^2),
///   M = [[vx^2 + 3 vy^2, -2 vx vy], [-2 vx vy, 3 vx^2 + vy^2]].
inline AngleErrorPrediction angle_variance_asymptotic(double theta, const Vec2& v, std::int64_t k, std::int64_t n,
                                                      const RadarConfig& config) {
    if (k < 1) throw InsufficientDetections("asymptotic formula needs K >= 1");
    const double vt = tangential_velocity(v, theta);
    if (std::abs(vt) <= 1e-12 * v.norm() || v.norm() == 0.0)
        throw ZeroTangentialVelocity("tangential velocity vanishes at this angle");

    const double lambda = config.wavelength();
    const double vx = v.x();
    const double vy = v.y();
    Mat2 m;
    m << vx * vx + 3 * vy * vy, -2 * vx * vy, -2 * vx * vy, 3 * vx * vx + vy * vy;
    const Vec2 p = steering_vector(theta);
    const double denom = 2.0 * static_cast<double>(k) * omega(n) * vt * vt;

    AngleErrorPrediction out;
    out.doppler_term = config.sigma_f_hz * config.sigma_f_hz * lambda * lambda / denom;  // p^T p = 1
    out.angle_term = config.sigma_phi_rad * config.sigma_phi_rad * p.dot(m * p) / denom;
    out.variance = out.doppler_term + out.angle_term;
    return out;
}

/// Closed-form elements (N - i + 1)(i - 1)/2 of L^T Phi L 1, i = 1..N.
inline Eigen::VectorXd lemma_elements_closed_form(std::int64_t n) {
    Eigen::VectorXd out(n);
    for (std::int64_t i = 1; i <= n; ++i)
        out[i - 1] = static_cast<double>(n - i + 1) * static_cast<double>(i - 1) / 2.0;
    return out;
}

inline LemmaReport lemma_polynomials(std::int64_t n) {
    if (n < 2) throw UndefinedForN1("lemma polynomials need N >= 2");
    const Eigen::VectorXd ramp = centered_ramp(n);
    const Eigen::VectorXd direct = suffix_sums(ramp);
    const Eigen::VectorXd closed = lemma_elements_closed_form(n);
    const double nd = static_cast<double>(n);

    LemmaReport r;
    r.n = n;
    const double norm2 = ramp.squaredNorm();
    r.norm4_direct = norm2 * norm2;
    r.norm4_closed_form = nd * nd * (nd * nd - 1.0) * (nd * nd - 1.0) / 144.0;
    r.norm2_direct = direct.squaredNorm();
    r.norm2_closed_form = closed.squaredNorm();
    r.omega = omega(n);
    r.elements_exact = (direct.array() == closed.array()).all();
    return r;
}

}  // namespace autosar
