#pragma once

// Sensor and scene model: direction vectors, the Doppler measurement matrix
// and the noisy per-frame detection simulator.

#include <autosar/errors.hpp>
#include <autosar/rng.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>

namespace autosar {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / kPi; }

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Per-frame ego velocities, one row [v_x, v_y] per frame (m/s).
using VelocityTrack = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Fixed sensor model. Angles are radians; degrees only appear at the
/// CLI/CSV boundary.
struct RadarConfig {
    double carrier_frequency_hz = 77e9;
    double frame_duration_s = 0.02;
    double sigma_phi_rad = deg2rad(1.0);
    double sigma_f_hz = 50.0;
    /// Per-frame matched-filter output SNR. +inf disables phasor noise.
    double snr_db = 20.0;
    double fov_min_rad = -kPi / 2;
    double fov_max_rad = kPi / 2;

    double wavelength() const noexcept { return kSpeedOfLight / carrier_frequency_hz; }

    /// Complex noise power per matched-filter sample, relative to unit signal.
    double noise_power() const noexcept {
        return std::isinf(snr_db) && snr_db > 0 ? 0.0 : std::pow(10.0, -snr_db / 10.0);
    }

    void validate() const {
        if (!(carrier_frequency_hz > 0) || !std::isfinite(carrier_frequency_hz))
            throw ConfigInvalid("carrier frequency must be positive");
        if (!(frame_duration_s > 0) || !std::isfinite(frame_duration_s))
            throw ConfigInvalid("frame duration must be positive");
        if (!(sigma_phi_rad >= 0) || !(sigma_f_hz >= 0))
            throw ConfigInvalid("measurement noise levels must be non-negative");
        if (std::isnan(snr_db)) throw ConfigInvalid("snr_db is NaN");
        constexpr double eps = 1e-12;
        if (!(fov_min_rad < fov_max_rad) || fov_min_rad < -kPi / 2 - eps || fov_max_rad > kPi / 2 + eps)
            throw ConfigInvalid("field of view must be a nonempty sub-interval of [-pi/2, pi/2]");
    }
};

/// Static reflectors used for ego-velocity estimation plus the SAR target.
struct Scene {
    Eigen::VectorXd reflector_angles;
    /// Only needed for imaging.
    std::optional<Eigen::VectorXd> reflector_ranges;
    double target_angle = 0.0;
    double target_range = 0.0;

    Eigen::Index size() const noexcept { return reflector_angles.size(); }
};

/// Noisy Doppler/angle measurements of the K static reflectors in one frame.
struct FrameDetections {
    Eigen::VectorXd dopplers;  // Hz
    Eigen::VectorXd angles;    // rad
};

/// p(theta) = [sin theta, cos theta]: unit vector from boresight towards theta.
inline Vec2 steering_vector(double theta) noexcept { return {std::sin(theta), std::cos(theta)}; }

/// p'(theta) = [cos theta, -sin theta], orthogonal to p(theta).
inline Vec2 steering_derivative(double theta) noexcept { return {std::cos(theta), -std::sin(theta)}; }

/// G(phi): row i is (2/lambda) p(phi_i)^T, so noiseless Dopplers are G v.
inline Eigen::MatrixX2d doppler_matrix(const Eigen::VectorXd& angles, double wavelength) {
    const double scale = 2.0 / wavelength;
    Eigen::MatrixX2d g(angles.size(), 2);
    for (Eigen::Index i = 0; i < angles.size(); ++i) {
        g(i, 0) = scale * std::sin(angles[i]);
        g(i, 1) = scale * std::cos(angles[i]);
    }
    return g;
}

/// Track with the same velocity in each of `frames` frames.
inline VelocityTrack constant_track(const Vec2& v, Eigen::Index frames) {
    VelocityTrack track(frames, 2);
    track.rowwise() = v.transpose();
    return track;
}

/// Velocity vector of magnitude `speed` heading `heading` rad from the y axis
/// towards x (heading 0 is pure y motion).
inline Vec2 velocity_from_heading(double speed, double heading) noexcept {
    return speed * steering_vector(heading);
}

/// One frame of detections: f_i = (2/lambda) p(phi_i)^T v + N(0, sigma_f^2)
/// and measured angle phi_i + N(0, sigma_phi^2).
///
/// Measured angles are not clamped to the field of view. The stream is
/// consumed as K Doppler draws followed by K angle draws.
template <std::uniform_random_bit_generator Rng>
FrameDetections simulate_frame_detections(const Eigen::VectorXd& angles, const Vec2& v, const RadarConfig& config,
                                          Rng& rng) {
    const Eigen::Index k = angles.size();
    FrameDetections det{doppler_matrix(angles, config.wavelength()) * v, angles};
    std::normal_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index i = 0; i < k; ++i) det.dopplers[i] += config.sigma_f_hz * unit(rng);
    for (Eigen::Index i = 0; i < k; ++i) det.angles[i] += config.sigma_phi_rad * unit(rng);
    return det;
}

template <std::uniform_random_bit_generator Rng>
FrameDetections simulate_frame_detections(const Scene& scene, const Vec2& v, const RadarConfig& config, Rng& rng) {
    return simulate_frame_detections(scene.reflector_angles, v, config, rng);
}

/// K reflector angles drawn uniformly over the field of view.
template <std::uniform_random_bit_generator Rng>
Eigen::VectorXd uniform_scene_angles(Eigen::Index k, const RadarConfig& config, Rng& rng) {
    std::uniform_real_distribution<double> uni(config.fov_min_rad, config.fov_max_rad);
    Eigen::VectorXd angles(k);
    for (Eigen::Index i = 0; i < k; ++i) angles[i] = uni(rng);
    return angles;
}

/// K angles at the midpoints of K equal cells spanning the field of view.
inline Eigen::VectorXd spread_scene_angles(Eigen::Index k, const RadarConfig& config) {
    Eigen::VectorXd angles(k);
    const double width = config.fov_max_rad - config.fov_min_rad;
    for (Eigen::Index i = 0; i < k; ++i)
        angles[i] = config.fov_min_rad + (static_cast<double>(i) + 0.5) * width / static_cast<double>(k);
    return angles;
}

}  // namespace autosar
