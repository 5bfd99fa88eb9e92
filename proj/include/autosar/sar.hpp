#pragma once

// SAR coherent integration at the matched-filter phasor level: range
// migration, per-frame phasor synthesis, the coherent sum over N frames,
// angle scans with peak refinement, 3 dB beamwidth and range-angle images.
//
// Sign convention: synthesized phasors carry exp(+j 4 pi r_n / lambda) and
// integration compensates with exp(-j 4 pi r~_n / lambda).

#include <autosar/ego_velocity.hpp>
#include <autosar/errors.hpp>
#include <autosar/radar_model.hpp>

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace autosar {

using Complex = std::complex<double>;

/// How a frame's matched-filter output responds to a hypothesis.
enum class FrameModel {
    /// The frame is integrated coherently over its duration at the
    /// hypothesized Doppler: a range-rate mismatch dr between echo and
    /// hypothesis attenuates the output by sinc(2 pi dr T_f / lambda) and
    /// moves its phase reference to mid-frame. Suppresses the grating lobes
    /// spaced lambda / (2 v T_f sin theta) that a one-sample-per-frame sum has.
    integrated,
    /// One unit phasor per frame; the plain frame sum with no Doppler response.
    point,
};

inline std::string_view to_string(FrameModel m) noexcept {
    return m == FrameModel::point ? "point" : "integrated";
}

inline FrameModel parse_frame_model(std::string_view s) {
    if (s == "integrated") return FrameModel::integrated;
    if (s == "point") return FrameModel::point;
    throw ConfigInvalid(fmt::format("unknown frame model '{}'", s));
}

/// Matched-filter outputs of the N frames at the true target parameters.
struct FramePhasors {
    std::vector<Complex> signal;  // exp(+j 4 pi r_n / lambda)
    std::vector<Complex> noise;   // circular Gaussian, power noise_scale^2
    /// Range rate p(theta)^T v_n of the echo within each frame (m/s).
    Eigen::VectorXd range_rates;
    double noise_scale = 0.0;

    std::size_t size() const noexcept { return signal.size(); }

    std::vector<Complex> values() const {
        std::vector<Complex> out(signal.size());
        for (std::size_t n = 0; n < out.size(); ++n) out[n] = signal[n] + noise[n];
        return out;
    }
};

/// Range-migration hypothesis: r~_n (end of frame n) and the per-frame rates.
struct MigrationHypothesis {
    Eigen::VectorXd ranges;
    Eigen::VectorXd rates;
};

struct AngleGrid {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;

    Eigen::Index count() const {
        if (!(step > 0) || !(stop >= start)) throw ConfigInvalid("angle grid needs step > 0 and stop >= start");
        return static_cast<Eigen::Index>(std::floor((stop - start) / step + 1e-9)) + 1;
    }
    double at(Eigen::Index i) const { return start + static_cast<double>(i) * step; }
};

struct SarScanResult {
    Eigen::VectorXd grid_angles;
    Eigen::VectorXd intensities;
    double peak_angle = 0.0;      // parabolically refined
    double peak_intensity = 0.0;  // max(intensities)
    Eigen::Index peak_index = 0;
};

/// Range-angle intensity image in dB; rows follow range_axis, columns angle_axis.
struct SarImage {
    Eigen::VectorXd range_axis;  // m
    Eigen::VectorXd angle_axis;  // rad
    Eigen::MatrixXd intensity_db;
};

struct ImageOptions {
    double range_resolution = 0.3;  // m
    double floor_db = -120.0;
    FrameModel model = FrameModel::integrated;
};

/// r_n = T_f sum_{k<=n} p(theta)^T v_k.
inline MigrationHypothesis migration_hypothesis(const VelocityTrack& v_track, double theta, double frame_duration) {
    MigrationHypothesis h;
    h.rates = v_track * steering_vector(theta);
    h.ranges.resize(h.rates.size());
    double acc = 0.0;
    for (Eigen::Index n = 0; n < h.rates.size(); ++n) h.ranges[n] = acc += frame_duration * h.rates[n];
    return h;
}

inline Eigen::VectorXd range_migration(const VelocityTrack& v_track, double theta, double frame_duration) {
    return migration_hypothesis(v_track, theta, frame_duration).ranges;
}

template <std::uniform_random_bit_generator Rng>
FramePhasors synthesize_frame_phasors(const VelocityTrack& v_true, double theta, const RadarConfig& config, Rng& rng) {
    const MigrationHypothesis truth = migration_hypothesis(v_true, theta, config.frame_duration_s);
    const double k = 4.0 * kPi / config.wavelength();
    const double power = config.noise_power();

    FramePhasors ph;
    ph.range_rates = truth.rates;
    ph.noise_scale = std::sqrt(power);
    ph.signal.resize(static_cast<std::size_t>(truth.ranges.size()));
    ph.noise.assign(ph.signal.size(), Complex{});
    const double sd = std::sqrt(power / 2.0);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t n = 0; n < ph.signal.size(); ++n) {
        ph.signal[n] = std::polar(1.0, k * truth.ranges[static_cast<Eigen::Index>(n)]);
        if (power > 0) {
            const double re = unit(rng);
            const double im = unit(rng);
            ph.noise[n] = {sd * re, sd * im};
        }
    }
    return ph;
}

/// Noiseless phasors (no random draws).
inline FramePhasors synthesize_frame_phasors(const VelocityTrack& v_true, double theta, const RadarConfig& config) {
    RadarConfig quiet = config;
    quiet.snr_db = std::numeric_limits<double>::infinity();
    RngStream unused(0);
    return synthesize_frame_phasors(v_true, theta, quiet, unused);
}

/// Frame response to a range-rate mismatch dr (echo minus hypothesis):
/// exp(-j x) sin(x)/x with x = 2 pi dr T_f / lambda.
inline Complex integrated_frame_response(double rate_mismatch, double frame_duration, double wavelength) {
    const double x = 2.0 * kPi * rate_mismatch * frame_duration / wavelength;
    const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
    return std::polar(sinc, -x);
}

/// (1/N) |sum_n y_n(hypothesis) exp(-j 4 pi r~_n / lambda)|.
inline double coherent_sum(const FramePhasors& ph, const MigrationHypothesis& hyp, const RadarConfig& config,
                           FrameModel model = FrameModel::integrated) {
    const auto n_frames = static_cast<Eigen::Index>(ph.size());
    if (hyp.ranges.size() != n_frames || hyp.rates.size() != n_frames || ph.range_rates.size() != n_frames)
        throw DimensionMismatch(fmt::format("coherent sum: {} phasors vs {} hypothesis frames", n_frames,
                                            hyp.ranges.size()));
    if (n_frames == 0) throw DimensionMismatch("coherent sum over zero frames");

    const double lambda = config.wavelength();
    const double k = 4.0 * kPi / lambda;
    Complex acc{};
    for (Eigen::Index n = 0; n < n_frames; ++n) {
        const auto i = static_cast<std::size_t>(n);
        Complex y = ph.signal[i];
        if (model == FrameModel::integrated)
            y *= integrated_frame_response(ph.range_rates[n] - hyp.rates[n], config.frame_duration_s, lambda);
        acc += (y + ph.noise[i]) * std::polar(1.0, -k * hyp.ranges[n]);
    }
    return std::abs(acc) / static_cast<double>(n_frames);
}

inline double coherent_sum(const FramePhasors& ph, const VelocityTrack& v_hyp, double theta_hyp,
                           const RadarConfig& config, FrameModel model = FrameModel::integrated) {
    if (static_cast<std::size_t>(v_hyp.rows()) != ph.size())
        throw DimensionMismatch(fmt::format("coherent sum: {} phasors vs {} hypothesis frames", ph.size(),
                                            v_hyp.rows()));
    return coherent_sum(ph, migration_hypothesis(v_hyp, theta_hyp, config.frame_duration_s), config, model);
}

/// Small-error form: (1/N) |sum_n exp(-j 4 pi (r~_n - r_n) / lambda)|.
inline double migration_mismatch_response(const Eigen::VectorXd& r_true, const Eigen::VectorXd& r_hyp,
                                          double wavelength) {
    if (r_true.size() != r_hyp.size() || r_true.size() == 0)
        throw DimensionMismatch("range vectors differ in length");
    const double k = 4.0 * kPi / wavelength;
    Complex acc{};
    for (Eigen::Index n = 0; n < r_true.size(); ++n) acc += std::polar(1.0, -k * (r_hyp[n] - r_true[n]));
    return std::abs(acc) / static_cast<double>(r_true.size());
}

/// Closed-form main-lobe width lambda / (2 T_f |sum_n v_T,n|), used to size
/// scan grids and to seed the numeric beamwidth search.
inline double beamwidth_estimate(const VelocityTrack& v_track, double theta, const RadarConfig& config) {
    const double tangential_aperture =
        config.frame_duration_s * std::abs((v_track * steering_derivative(theta)).sum());
    const double speed_scale = config.frame_duration_s * v_track.rowwise().norm().sum();
    if (!(tangential_aperture > 1e-12 * speed_scale) || speed_scale == 0.0)
        throw DegenerateGeometry("no tangential motion at this angle: SAR main lobe is unbounded");
    return config.wavelength() / (2.0 * tangential_aperture);
}

/// Scan window around `center`: +/- max(5 deg, 20 beamwidths) clamped to the
/// field of view, step beamwidth / 20.
inline AngleGrid default_scan_grid(const VelocityTrack& v_track, double center, const RadarConfig& config) {
    const double bw = beamwidth_estimate(v_track, center, config);
    const double half = std::max(deg2rad(5.0), 20.0 * bw);
    AngleGrid g;
    g.start = std::max(config.fov_min_rad, center - half);
    g.stop = std::min(config.fov_max_rad, center + half);
    g.step = bw / 20.0;
    return g;
}

/// Vertex offset (in grid steps, within [-0.5, 0.5]) of the parabola through
/// three samples around a discrete maximum.
inline double parabolic_offset(double left, double mid, double right) noexcept {
    const double denom = left - 2.0 * mid + right;
    if (!(denom < 0.0)) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

inline SarScanResult angle_scan(const FramePhasors& ph, const VelocityTrack& v_hyp, const AngleGrid& grid,
                                const RadarConfig& config, FrameModel model = FrameModel::integrated) {
    const Eigen::Index m = grid.count();
    SarScanResult res;
    res.grid_angles.resize(m);
    res.intensities.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        res.grid_angles[i] = grid.at(i);
        res.intensities[i] = coherent_sum(ph, v_hyp, res.grid_angles[i], config, model);
    }
    res.peak_intensity = res.intensities.maxCoeff(&res.peak_index);
    res.peak_angle = res.grid_angles[res.peak_index];
    if (res.peak_index > 0 && res.peak_index + 1 < m) {
        const double off = parabolic_offset(res.intensities[res.peak_index - 1], res.peak_intensity,
                                            res.intensities[res.peak_index + 1]);
        res.peak_angle += off * grid.step;
    }
    return res;
}

/// One Monte-Carlo trial: detections and an LS velocity estimate per frame,
/// noisy target phasors, then the SAR peak angle under the estimated velocities.
///
/// The stream is consumed frame by frame for detections, then for phasor noise.
template <std::uniform_random_bit_generator Rng>
double estimate_sar_angle(const Scene& scene, const VelocityTrack& v_true, const RadarConfig& config, Rng& rng,
                          FrameModel model = FrameModel::integrated) {
    if (scene.size() < 2) throw InsufficientDetections("SAR pipeline needs at least two static reflectors");
    const double lambda = config.wavelength();
    VelocityTrack v_est(v_true.rows(), 2);
    for (Eigen::Index n = 0; n < v_true.rows(); ++n) {
        const Vec2 v = v_true.row(n).transpose();
        const FrameDetections det = simulate_frame_detections(scene, v, config, rng);
        v_est.row(n) = estimate_velocity(det, lambda).v_hat.transpose();
    }
    const FramePhasors ph = synthesize_frame_phasors(v_true, scene.target_angle, config, rng);
    const AngleGrid grid = default_scan_grid(v_true, scene.target_angle, config);
    return angle_scan(ph, v_est, grid, config, model).peak_angle;
}

/// Full width of the noiseless, known-velocity main lobe around theta where
/// the coherent sum stays >= 1/sqrt(2) of its peak (3 dB in power).
inline double beamwidth_3db(const VelocityTrack& v_true, double theta, const RadarConfig& config,
                            FrameModel model = FrameModel::integrated) {
    const double bw0 = beamwidth_estimate(v_true, theta, config);
    const FramePhasors ph = synthesize_frame_phasors(v_true, theta, config);
    auto response = [&](double a) { return coherent_sum(ph, v_true, a, config, model); };
    const double threshold = response(theta) / std::sqrt(2.0);

    auto edge = [&](double dir) {
        const double step = bw0 / 4.0;
        double inside = theta;
        double outside = theta + dir * step;
        while (response(outside) >= threshold) {
            inside = outside;
            outside += dir * step;
            if (std::abs(outside - theta) > kPi / 2)
                throw DegenerateGeometry("main lobe does not drop by 3 dB within 90 degrees");
        }
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (inside + outside);
            (response(mid) >= threshold ? inside : outside) = mid;
        }
        return 0.5 * (inside + outside);
    };
    return edge(+1.0) - edge(-1.0);
}

/// Range-angle image of the scene's reflectors. Each reflector contributes a
/// separable response: the SAR angular power (coherent sum squared, true
/// velocities in the data, `v_hyp` in the integration) times a normalized
/// sinc^2 range kernel. Contributions add in power.
inline SarImage sar_image(const Scene& scene, const VelocityTrack& v_true, const VelocityTrack& v_hyp,
                          const RadarConfig& config, const Eigen::VectorXd& range_axis,
                          const Eigen::VectorXd& angle_axis, const ImageOptions& opts = {}) {
    if (!scene.reflector_ranges) throw MissingRanges("imaging needs reflector ranges");
    const Eigen::VectorXd& ranges = *scene.reflector_ranges;
    if (ranges.size() != scene.size()) throw DimensionMismatch("reflector ranges and angles differ in length");
    if (v_true.rows() != v_hyp.rows()) throw DimensionMismatch("true and hypothesis tracks differ in length");
    if (!(opts.range_resolution > 0)) throw ConfigInvalid("range resolution must be positive");

    Eigen::MatrixXd power = Eigen::MatrixXd::Zero(range_axis.size(), angle_axis.size());
    for (Eigen::Index i = 0; i < scene.size(); ++i) {
        const FramePhasors ph = synthesize_frame_phasors(v_true, scene.reflector_angles[i], config);
        Eigen::RowVectorXd angular(angle_axis.size());
        for (Eigen::Index a = 0; a < angle_axis.size(); ++a) {
            const double c = coherent_sum(ph, v_hyp, angle_axis[a], config, opts.model);
            angular[a] = c * c;
        }
        Eigen::VectorXd radial(range_axis.size());
        for (Eigen::Index r = 0; r < range_axis.size(); ++r) {
            const double x = kPi * (range_axis[r] - ranges[i]) / opts.range_resolution;
            const double s = std::abs(x) < 1e-8 ? 1.0 : std::sin(x) / x;
            radial[r] = s * s;
        }
        power += radial * angular;
    }

    SarImage img{range_axis, angle_axis, Eigen::MatrixXd(power.rows(), power.cols())};
    const double floor_power = std::pow(10.0, opts.floor_db / 10.0);
    img.intensity_db = power.unaryExpr([&](double p) { return 10.0 * std::log10(std::max(p, floor_power)); });
    return img;
}

struct ImagePeak {
    double range = 0.0;
    double angle = 0.0;
    double intensity_db = 0.0;
};

inline ImagePeak image_peak(const SarImage& img) {
    Eigen::Index r = 0;
    Eigen::Index a = 0;
    const double v = img.intensity_db.maxCoeff(&r, &a);
    return {img.range_axis[r], img.angle_axis[a], v};
}

/// CSV grid: header row = angle axis in degrees, first column = range in m,
/// cells in dB, 9 significant digits.
inline void write_image_csv(std::ostream& os, const SarImage& img) {
    os << "range_m";
    for (Eigen::Index a = 0; a < img.angle_axis.size(); ++a) os << fmt::format(",{:.9g}", rad2deg(img.angle_axis[a]));
    os << '\n';
    for (Eigen::Index r = 0; r < img.range_axis.size(); ++r) {
        os << fmt::format("{:.9g}", img.range_axis[r]);
        for (Eigen::Index a = 0; a < img.angle_axis.size(); ++a) os << fmt::format(",{:.9g}", img.intensity_db(r, a));
        os << '\n';
    }
}

}  // namespace autosar
