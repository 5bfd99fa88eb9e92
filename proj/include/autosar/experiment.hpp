#pragma once

// Config-driven Monte-Carlo experiments and their CSV tables.
//
// Every trial draws from its own stream keyed by (seed, experiment tag, sweep
// index, theta index, trial index), and reductions run in index order after
// all trials finish, so output is byte-identical for any worker count.

#include <autosar/ego_velocity.hpp>
#include <autosar/error_analysis.hpp>
#include <autosar/errors.hpp>
#include <autosar/radar_model.hpp>
#include <autosar/rng.hpp>
#include <autosar/sar.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#ifndef AUTOSAR_VERSION
#define AUTOSAR_VERSION "1.0.0"
#endif

namespace autosar {

inline constexpr std::string_view kVersion = AUTOSAR_VERSION;

enum class SceneMode { spread, random };

struct Sweep {
    std::string name;  // sigma_phi_deg | speed_mps | num_targets | num_frames | aperture_m
    std::vector<double> values;
};

struct ImageSettings {
    double target_range_m = 28.0;
    double target_angle_deg = 6.0;
    /// Extra reflectors as (range m, angle deg); the target alone when empty.
    std::vector<std::pair<double, double>> reflectors;
    double velocity_error_mps = 0.0;  // added to v_y of every hypothesis frame
    double range_min_m = 24.0;
    double range_max_m = 32.0;
    double range_step_m = 0.05;
    double angle_min_deg = -4.0;
    double angle_max_deg = 16.0;
    double angle_step_deg = 0.01;
    double range_resolution_m = 0.3;
};

struct ExperimentConfig {
    RadarConfig radar;
    double speed_mps = 10.0;
    double heading_deg = 0.0;
    std::int64_t num_targets = 5;
    std::int64_t num_frames = 5;
    double theta_start_deg = 5.0;
    double theta_stop_deg = 85.0;
    double theta_step_deg = 5.0;
    std::int64_t trials = 1000;
    std::uint64_t seed = 1;
    std::optional<Sweep> sweep;

    std::int64_t analysis_scenes = 100;
    bool freeze_scene = false;
    FrameModel frame_model = FrameModel::integrated;
    SceneMode gain_scene = SceneMode::spread;

    std::vector<double> apertures_m{1.0, 2.5, 3.0};

    std::vector<double> velcov_sigma_phi_deg{1.0, 3.0, 10.0};
    std::vector<double> velcov_speeds_mps{3.0, 10.0, 25.0};
    std::vector<double> velcov_num_targets{5.0, 10.0};
    std::int64_t velcov_trials = 10000;

    std::vector<double> lemma_n_values{2, 3, 4, 5, 10, 11, 51, 101, 1000, 1001};

    ImageSettings image;

    Vec2 velocity() const { return velocity_from_heading(speed_mps, deg2rad(heading_deg)); }
    VelocityTrack track() const { return constant_track(velocity(), num_frames); }

    std::vector<double> theta_grid_rad() const {
        std::vector<double> out;
        const auto count = static_cast<std::int64_t>(std::floor((theta_stop_deg - theta_start_deg) / theta_step_deg + 1e-9));
        for (std::int64_t i = 0; i <= count; ++i)
            out.push_back(deg2rad(theta_start_deg + static_cast<double>(i) * theta_step_deg));
        return out;
    }

    void validate() const {
        radar.validate();
        if (trials < 1) throw ConfigInvalid("trials must be >= 1");
        if (!(theta_step_deg > 0)) throw ConfigInvalid("theta_step_deg must be > 0");
        if (theta_stop_deg < theta_start_deg) throw ConfigInvalid("theta_stop_deg < theta_start_deg");
        if (!(speed_mps > 0)) throw ConfigInvalid("speed_mps must be > 0");
        if (num_targets < 1) throw ConfigInvalid("num_targets must be >= 1");
        if (num_frames < 1) throw ConfigInvalid("num_frames must be >= 1");
        if (analysis_scenes < 1) throw ConfigInvalid("analysis_scenes must be >= 1");
        if (sweep) {
            static constexpr std::string_view names[] = {"sigma_phi_deg", "speed_mps", "num_targets", "num_frames",
                                                          "aperture_m"};
            if (std::find(std::begin(names), std::end(names), sweep->name) == std::end(names))
                throw ConfigInvalid(fmt::format("unknown sweep parameter '{}'", sweep->name));
            if (sweep->values.empty()) throw ConfigInvalid("sweep.values is empty");
            for (double v : sweep->values) {
                const bool ok = sweep->name == "sigma_phi_deg" ? v >= 0 : v > 0;
                if (!ok || !std::isfinite(v)) throw ConfigInvalid(fmt::format("invalid {} value {}", sweep->name, v));
            }
        }
    }

    /// Canonical text of every field that affects results (not threads).
    std::string canonical() const {
        std::string s;
        auto add = [&](std::string_view key, auto value) { s += fmt::format("{}={}\n", key, value); };
        auto addd = [&](std::string_view key, double value) { s += fmt::format("{}={:.17g}\n", key, value); };
        auto addv = [&](std::string_view key, const std::vector<double>& v) {
            s += fmt::format("{}={:.17g}\n", key, fmt::join(v, ","));
        };
        addd("carrier_hz", radar.carrier_frequency_hz);
        addd("frame_duration_s", radar.frame_duration_s);
        addd("sigma_phi_rad", radar.sigma_phi_rad);
        addd("sigma_f_hz", radar.sigma_f_hz);
        addd("snr_db", radar.snr_db);
        addd("fov_min_rad", radar.fov_min_rad);
        addd("fov_max_rad", radar.fov_max_rad);
        addd("speed_mps", speed_mps);
        addd("heading_deg", heading_deg);
        add("num_targets", num_targets);
        add("num_frames", num_frames);
        addd("theta_start_deg", theta_start_deg);
        addd("theta_stop_deg", theta_stop_deg);
        addd("theta_step_deg", theta_step_deg);
        add("trials", trials);
        add("seed", seed);
        if (sweep) {
            add("sweep.name", sweep->name);
            addv("sweep.values", sweep->values);
        }
        add("analysis_scenes", analysis_scenes);
        add("freeze_scene", freeze_scene);
        add("frame_model", to_string(frame_model));
        add("gain_scene", gain_scene == SceneMode::spread ? "spread" : "random");
        addv("apertures_m", apertures_m);
        addv("velcov.sigma_phi_deg", velcov_sigma_phi_deg);
        addv("velcov.speeds_mps", velcov_speeds_mps);
        addv("velcov.num_targets", velcov_num_targets);
        add("velcov.trials", velcov_trials);
        addv("lemma.n_values", lemma_n_values);
        addd("image.target_range_m", image.target_range_m);
        addd("image.target_angle_deg", image.target_angle_deg);
        for (const auto& [r, a] : image.reflectors) s += fmt::format("image.reflector={:.17g}@{:.17g}\n", r, a);
        addd("image.velocity_error_mps", image.velocity_error_mps);
        addd("image.range_min_m", image.range_min_m);
        addd("image.range_max_m", image.range_max_m);
        addd("image.range_step_m", image.range_step_m);
        addd("image.angle_min_deg", image.angle_min_deg);
        addd("image.angle_max_deg", image.angle_max_deg);
        addd("image.angle_step_deg", image.angle_step_deg);
        addd("image.range_resolution_m", image.range_resolution_m);
        return s;
    }

    /// FNV-1a 64 of canonical().
    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }
};

// ---------------------------------------------------------------------------
// Config file parsing: `key = value` lines, `#` comments, comma-separated lists.

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view key, std::string_view text) {
    const std::string t(trim(text));
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigInvalid(fmt::format("{}: '{}' is not a number", key, t));
    }
    if (used != t.size()) throw ConfigInvalid(fmt::format("{}: '{}' is not a number", key, t));
    return v;
}

inline std::int64_t parse_int(std::string_view key, std::string_view text) {
    const std::string_view t = trim(text);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ConfigInvalid(fmt::format("{}: '{}' is not an integer", key, t));
    return v;
}

inline std::uint64_t parse_u64(std::string_view key, std::string_view text) {
    const std::string_view t = trim(text);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ConfigInvalid(fmt::format("{}: '{}' is not an unsigned integer", key, t));
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        const std::string_view item = trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (!item.empty()) out.push_back(item);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<double> parse_list(std::string_view key, std::string_view text) {
    std::vector<double> out;
    for (auto item : split(text, ',')) out.push_back(parse_double(key, item));
    return out;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
    const std::string_view t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigInvalid(fmt::format("{}: '{}' is not a boolean", key, t));
}

}  // namespace detail

inline void apply_config_entry(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    using namespace detail;
    auto& r = cfg.radar;
    auto& im = cfg.image;
    if (key == "carrier_hz") r.carrier_frequency_hz = parse_double(key, value);
    else if (key == "frame_duration_s") r.frame_duration_s = parse_double(key, value);
    else if (key == "sigma_phi_deg") r.sigma_phi_rad = deg2rad(parse_double(key, value));
    else if (key == "sigma_f_hz") r.sigma_f_hz = parse_double(key, value);
    else if (key == "snr_db") r.snr_db = parse_double(key, value);
    else if (key == "fov_min_deg") r.fov_min_rad = deg2rad(parse_double(key, value));
    else if (key == "fov_max_deg") r.fov_max_rad = deg2rad(parse_double(key, value));
    else if (key == "speed_mps") cfg.speed_mps = parse_double(key, value);
    else if (key == "heading_deg") cfg.heading_deg = parse_double(key, value);
    else if (key == "num_targets") cfg.num_targets = parse_int(key, value);
    else if (key == "num_frames") cfg.num_frames = parse_int(key, value);
    else if (key == "theta_start_deg") cfg.theta_start_deg = parse_double(key, value);
    else if (key == "theta_stop_deg") cfg.theta_stop_deg = parse_double(key, value);
    else if (key == "theta_step_deg") cfg.theta_step_deg = parse_double(key, value);
    else if (key == "trials") cfg.trials = parse_int(key, value);
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "sweep.name") {
        if (!cfg.sweep) cfg.sweep.emplace();
        cfg.sweep->name = std::string(trim(value));
    } else if (key == "sweep.values") {
        if (!cfg.sweep) cfg.sweep.emplace();
        cfg.sweep->values = parse_list(key, value);
    } else if (key == "analysis_scenes") cfg.analysis_scenes = parse_int(key, value);
    else if (key == "freeze_scene") cfg.freeze_scene = parse_bool(key, value);
    else if (key == "frame_model") cfg.frame_model = parse_frame_model(trim(value));
    else if (key == "gain_scene") {
        const auto v = trim(value);
        if (v == "spread") cfg.gain_scene = SceneMode::spread;
        else if (v == "random") cfg.gain_scene = SceneMode::random;
        else throw ConfigInvalid(fmt::format("gain_scene: '{}' is not spread|random", v));
    } else if (key == "apertures_m") cfg.apertures_m = parse_list(key, value);
    else if (key == "velcov.sigma_phi_deg") cfg.velcov_sigma_phi_deg = parse_list(key, value);
    else if (key == "velcov.speeds_mps") cfg.velcov_speeds_mps = parse_list(key, value);
    else if (key == "velcov.num_targets") cfg.velcov_num_targets = parse_list(key, value);
    else if (key == "velcov.trials") cfg.velcov_trials = parse_int(key, value);
    else if (key == "lemma.n_values") cfg.lemma_n_values = parse_list(key, value);
    else if (key == "image.target_range_m") im.target_range_m = parse_double(key, value);
    else if (key == "image.target_angle_deg") im.target_angle_deg = parse_double(key, value);
    else if (key == "image.reflectors") {
        im.reflectors.clear();
        for (auto item : split(value, ',')) {
            const auto parts = split(item, '@');
            if (parts.size() != 2) throw ConfigInvalid(fmt::format("image.reflectors: '{}' is not range@angle", item));
            im.reflectors.emplace_back(parse_double(key, parts[0]), parse_double(key, parts[1]));
        }
    } else if (key == "image.velocity_error_mps") im.velocity_error_mps = parse_double(key, value);
    else if (key == "image.range_min_m") im.range_min_m = parse_double(key, value);
    else if (key == "image.range_max_m") im.range_max_m = parse_double(key, value);
    else if (key == "image.range_step_m") im.range_step_m = parse_double(key, value);
    else if (key == "image.angle_min_deg") im.angle_min_deg = parse_double(key, value);
    else if (key == "image.angle_max_deg") im.angle_max_deg = parse_double(key, value);
    else if (key == "image.angle_step_deg") im.angle_step_deg = parse_double(key, value);
    else if (key == "image.range_resolution_m") im.range_resolution_m = parse_double(key, value);
    else throw ConfigInvalid(fmt::format("unknown config key '{}'", key));
}

inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig cfg = {}) {
    std::size_t line_no = 0;
    for (auto raw : detail::split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigInvalid(fmt::format("config line {}: expected key = value", line_no));
        apply_config_entry(cfg, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid(fmt::format("cannot open config file '{}'", path));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

/// N = round(aperture / (speed T_f)), at least 1.
inline std::int64_t frames_for_aperture(double aperture_m, const ExperimentConfig& cfg) {
    return std::max<std::int64_t>(1, std::llround(aperture_m / (cfg.speed_mps * cfg.radar.frame_duration_s)));
}

/// Copy of `cfg` with one sweep parameter set to `value`.
inline ExperimentConfig apply_sweep(const ExperimentConfig& cfg, std::string_view name, double value) {
    ExperimentConfig out = cfg;
    if (name == "sigma_phi_deg") out.radar.sigma_phi_rad = deg2rad(value);
    else if (name == "speed_mps") out.speed_mps = value;
    else if (name == "num_targets") out.num_targets = std::llround(value);
    else if (name == "num_frames") out.num_frames = std::llround(value);
    else if (name == "aperture_m") out.num_frames = frames_for_aperture(value, out);
    else throw ConfigInvalid(fmt::format("unknown sweep parameter '{}'", name));
    return out;
}

/// (sweep value, config) pairs; a single NaN-labelled point without a sweep.
inline std::vector<std::pair<double, ExperimentConfig>> sweep_points(const ExperimentConfig& cfg) {
    std::vector<std::pair<double, ExperimentConfig>> out;
    if (!cfg.sweep) {
        out.emplace_back(std::numeric_limits<double>::quiet_NaN(), cfg);
        return out;
    }
    for (double v : cfg.sweep->values) out.emplace_back(v, apply_sweep(cfg, cfg.sweep->name, v));
    return out;
}

// ---------------------------------------------------------------------------
// Parallel map with index-ordered results.

template <class F>
auto parallel_map(std::size_t count, unsigned threads, F&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using T = decltype(fn(std::size_t{}));
    std::vector<T> out(count);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        out[i] = fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = count;
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

// ---------------------------------------------------------------------------
// Experiments.

/// Stream tags keep experiments from sharing random draws.
enum class StreamTag : std::uint64_t { rmse_trial = 1, rmse_analysis = 2, frozen_scene = 3, velcov = 4, gain = 5 };

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

struct RmseRow {
    double sweep_value = 0.0;
    double theta_deg = 0.0;
    double rmse_sim_deg = 0.0;
    double rmse_analysis_deg = 0.0;
    double rmse_asymptotic_deg = 0.0;
    std::int64_t trials_used = 0;
    std::int64_t failed_trials = 0;
};

struct MonteCarloResult {
    std::vector<RmseRow> rows;
};

struct ResolutionRow {
    double theta_deg = 0.0;
    double aperture_m = 0.0;
    double beamwidth_deg = 0.0;  // +inf when the lobe is unbounded
};

struct GainRow {
    double theta_deg = 0.0;
    double sweep_value = 0.0;
    double gain_ratio = 0.0;
    double degradation_ratio = 0.0;
};

struct VelocityCovRow {
    double sigma_phi_deg = 0.0;
    double speed_mps = 0.0;
    std::int64_t num_targets = 0;
    double std_sim_mps = 0.0;
    double std_analysis_mps = 0.0;
    std::int64_t trials_used = 0;
};

struct PredictRow {
    double theta_deg = 0.0;
    double rmse_full_deg = 0.0;  // full formula on the evenly spread scene
    double rmse_asymptotic_deg = 0.0;
    double asymptotic_doppler_term = 0.0;  // rad^2
    double asymptotic_angle_term = 0.0;    // rad^2
    double beamwidth_deg = 0.0;
};

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline Eigen::VectorXd frozen_scene(const ExperimentConfig& cfg, std::size_t sweep_index) {
    auto rng = make_stream(cfg.seed, {tag(StreamTag::frozen_scene), sweep_index});
    return uniform_scene_angles(cfg.num_targets, cfg.radar, rng);
}

/// Mean of angle_variance_full over `scenes` random scenes; NaN if none usable.
inline double mean_full_variance(const ExperimentConfig& cfg, const VelocityTrack& track, double theta,
                                 std::uint64_t t, std::size_t si, std::size_t ti,
                                 const std::optional<Eigen::VectorXd>& frozen) {
    const Vec2 v = cfg.velocity();
    double sum = 0.0;
    std::int64_t used = 0;
    const std::int64_t scenes = frozen ? 1 : cfg.analysis_scenes;
    for (std::int64_t j = 0; j < scenes; ++j) {
        Eigen::VectorXd angles;
        if (frozen) {
            angles = *frozen;
        } else {
            auto rng = make_stream(cfg.seed, {t, si, ti, static_cast<std::uint64_t>(j)});
            angles = uniform_scene_angles(cfg.num_targets, cfg.radar, rng);
        }
        try {
            sum += angle_variance_full(track, theta, angles, v, cfg.radar).variance;
            ++used;
        } catch (const SingularGeometry&) {
        } catch (const InsufficientDetections&) {
        }
    }
    return used > 0 ? sum / static_cast<double>(used) : kNaN;
}

}  // namespace detail

/// RMSE of the SAR peak angle vs truth per (sweep value, theta), alongside the
/// scene-averaged full analytical prediction and the large-K asymptotic one.
inline MonteCarloResult run_rmse_sweep(const ExperimentConfig& base, unsigned threads = 1) {
    base.validate();
    MonteCarloResult result;
    const auto points = sweep_points(base);
    const auto thetas = base.theta_grid_rad();
    for (std::size_t si = 0; si < points.size(); ++si) {
        const auto& [sweep_value, cfg] = points[si];
        cfg.validate();
        if (cfg.num_targets < 2) throw ConfigInvalid("rmse sweep needs num_targets >= 2");
        const VelocityTrack track = cfg.track();
        std::optional<Eigen::VectorXd> frozen;
        if (cfg.freeze_scene) frozen = detail::frozen_scene(cfg, si);

        for (std::size_t ti = 0; ti < thetas.size(); ++ti) {
            const double theta = thetas[ti];
            struct Trial {
                bool ok = false;
                double error = 0.0;
            };
            const auto trials = parallel_map(static_cast<std::size_t>(cfg.trials), threads, [&](std::size_t k) {
                auto rng = make_stream(cfg.seed, {tag(StreamTag::rmse_trial), si, ti, k});
                Scene scene;
                scene.reflector_angles = frozen ? *frozen : uniform_scene_angles(cfg.num_targets, cfg.radar, rng);
                scene.target_angle = theta;
                try {
                    return Trial{true, estimate_sar_angle(scene, track, cfg.radar, rng, cfg.frame_model) - theta};
                } catch (const SingularGeometry&) {
                } catch (const InsufficientDetections&) {
                } catch (const DegenerateGeometry&) {
                }
                return Trial{};
            });

            RmseRow row;
            row.sweep_value = sweep_value;
            row.theta_deg = rad2deg(theta);
            double sq = 0.0;
            for (const Trial& t : trials) {
                if (t.ok) {
                    sq += t.error * t.error;
                    ++row.trials_used;
                } else {
                    ++row.failed_trials;
                }
            }
            row.rmse_sim_deg =
                row.trials_used > 0 ? rad2deg(std::sqrt(sq / static_cast<double>(row.trials_used))) : detail::kNaN;

            try {
                row.rmse_analysis_deg = rad2deg(
                    std::sqrt(detail::mean_full_variance(cfg, track, theta, tag(StreamTag::rmse_analysis), si, ti, frozen)));
            } catch (const ZeroTangentialVelocity&) {
                row.rmse_analysis_deg = detail::kNaN;
            }
            try {
                row.rmse_asymptotic_deg = rad2deg(
                    angle_variance_asymptotic(theta, cfg.velocity(), cfg.num_targets, cfg.num_frames, cfg.radar).rmse());
            } catch (const Error&) {
                row.rmse_asymptotic_deg = detail::kNaN;
            }
            result.rows.push_back(row);
        }
    }
    return result;
}

/// Noiseless 3 dB beamwidth over the theta grid for each synthetic aperture.
inline std::vector<ResolutionRow> run_resolution_sweep(const std::vector<double>& apertures_m,
                                                       const ExperimentConfig& cfg, unsigned threads = 1) {
    cfg.validate();
    for (double a : apertures_m)
        if (!(a > 0)) throw ConfigInvalid("apertures must be > 0");
    const auto thetas = cfg.theta_grid_rad();
    std::vector<std::pair<double, double>> cells;
    for (double a : apertures_m)
        for (double t : thetas) cells.emplace_back(a, t);

    return parallel_map(cells.size(), threads, [&](std::size_t i) {
        const auto [aperture, theta] = cells[i];
        const VelocityTrack track = constant_track(cfg.velocity(), frames_for_aperture(aperture, cfg));
        ResolutionRow row{rad2deg(theta), aperture, std::numeric_limits<double>::infinity()};
        try {
            row.beamwidth_deg = rad2deg(beamwidth_3db(track, theta, cfg.radar, cfg.frame_model));
        } catch (const DegenerateGeometry&) {
        }
        return row;
    });
}

/// Analytical SAR RMSE for the configured scene convention.
inline double analysis_variance(const ExperimentConfig& cfg, const VelocityTrack& track, double theta,
                                std::size_t si, std::size_t ti) {
    if (cfg.gain_scene == SceneMode::spread)
        return angle_variance_full(track, theta, spread_scene_angles(cfg.num_targets, cfg.radar), cfg.velocity(),
                                   cfg.radar)
            .variance;
    return detail::mean_full_variance(cfg, track, theta, tag(StreamTag::gain), si, ti, std::nullopt);
}

/// gain = sigma_phi / SAR RMSE; degradation = SAR RMSE / known-velocity beamwidth.
inline std::vector<GainRow> run_gain_report(const ExperimentConfig& base, unsigned threads = 1) {
    base.validate();
    const auto points = sweep_points(base);
    const auto thetas = base.theta_grid_rad();
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t si = 0; si < points.size(); ++si) {
        if (!(points[si].second.radar.sigma_phi_rad > 0)) throw ConfigInvalid("gain report needs sigma_phi > 0");
        if (points[si].second.num_targets < 2) throw ConfigInvalid("gain report needs num_targets >= 2");
        for (std::size_t ti = 0; ti < thetas.size(); ++ti) cells.emplace_back(si, ti);
    }
    return parallel_map(cells.size(), threads, [&](std::size_t i) {
        const auto [si, ti] = cells[i];
        const auto& [sweep_value, cfg] = points[si];
        const double theta = thetas[ti];
        const VelocityTrack track = cfg.track();
        GainRow row{rad2deg(theta), sweep_value, detail::kNaN, detail::kNaN};
        try {
            const double rmse = std::sqrt(analysis_variance(cfg, track, theta, si, ti));
            row.gain_ratio = cfg.radar.sigma_phi_rad / rmse;
            row.degradation_ratio = rmse / beamwidth_3db(track, theta, cfg.radar, cfg.frame_model);
        } catch (const ZeroTangentialVelocity&) {
        } catch (const DegenerateGeometry&) {
        }
        return row;
    });
}

/// Single-frame velocity error: Monte-Carlo std (sqrt of the trace of the
/// sample covariance) vs the analytical covariance, on paired random scenes.
inline std::vector<VelocityCovRow> run_velocity_cov_report(const ExperimentConfig& cfg, unsigned threads = 1) {
    cfg.validate();
    std::vector<double> sigmas = cfg.velcov_sigma_phi_deg;
    if (cfg.sweep && cfg.sweep->name == "sigma_phi_deg") sigmas = cfg.sweep->values;
    std::vector<VelocityCovRow> rows;
    for (std::size_t a = 0; a < sigmas.size(); ++a) {
        for (std::size_t b = 0; b < cfg.velcov_speeds_mps.size(); ++b) {
            for (std::size_t c = 0; c < cfg.velcov_num_targets.size(); ++c) {
                RadarConfig radar = cfg.radar;
                radar.sigma_phi_rad = deg2rad(sigmas[a]);
                const double speed = cfg.velcov_speeds_mps[b];
                const auto k = std::llround(cfg.velcov_num_targets[c]);
                if (k < 2) throw ConfigInvalid("velocity covariance needs num_targets >= 2");
                const Vec2 v = velocity_from_heading(speed, deg2rad(cfg.heading_deg));

                struct Trial {
                    bool ok = false;
                    Vec2 error = Vec2::Zero();
                    double trace = 0.0;
                };
                const auto trials =
                    parallel_map(static_cast<std::size_t>(cfg.velcov_trials), threads, [&](std::size_t t) {
                        auto rng = make_stream(cfg.seed, {tag(StreamTag::velcov), a, b, c, t});
                        const Eigen::VectorXd angles = uniform_scene_angles(k, radar, rng);
                        try {
                            const double trace = velocity_covariance_analytical(angles, v, radar).trace();
                            const auto det = simulate_frame_detections(angles, v, radar, rng);
                            return Trial{true, estimate_velocity(det, radar.wavelength()).v_hat - v, trace};
                        } catch (const SingularGeometry&) {
                            return Trial{};
                        }
                    });

                Vec2 mean = Vec2::Zero();
                double trace_sum = 0.0;
                std::int64_t used = 0;
                for (const auto& t : trials) {
                    if (!t.ok) continue;
                    mean += t.error;
                    trace_sum += t.trace;
                    ++used;
                }
                VelocityCovRow row{sigmas[a], speed, k, detail::kNaN, detail::kNaN, used};
                if (used > 0) {
                    mean /= static_cast<double>(used);
                    double ss = 0.0;
                    for (const auto& t : trials)
                        if (t.ok) ss += (t.error - mean).squaredNorm();
                    row.std_sim_mps = std::sqrt(ss / static_cast<double>(used));
                    row.std_analysis_mps = std::sqrt(trace_sum / static_cast<double>(used));
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

inline std::vector<LemmaReport> run_lemma_check(const std::vector<std::int64_t>& n_values) {
    std::vector<LemmaReport> out;
    for (auto n : n_values) {
        if (n < 2) throw ConfigInvalid("lemma check needs N >= 2");
        out.push_back(lemma_polynomials(n));
    }
    return out;
}

inline std::vector<PredictRow> run_predict(const ExperimentConfig& cfg) {
    cfg.validate();
    const VelocityTrack track = cfg.track();
    std::vector<PredictRow> rows;
    for (double theta : cfg.theta_grid_rad()) {
        PredictRow row{rad2deg(theta), detail::kNaN, detail::kNaN, detail::kNaN, detail::kNaN, detail::kNaN};
        try {
            if (cfg.num_targets >= 2)
                row.rmse_full_deg = rad2deg(std::sqrt(
                    angle_variance_full(track, theta, spread_scene_angles(cfg.num_targets, cfg.radar), cfg.velocity(),
                                        cfg.radar)
                        .variance));
            const auto asym = angle_variance_asymptotic(theta, cfg.velocity(), cfg.num_targets, cfg.num_frames, cfg.radar);
            row.rmse_asymptotic_deg = rad2deg(asym.rmse());
            row.asymptotic_doppler_term = asym.doppler_term;
            row.asymptotic_angle_term = asym.angle_term;
            row.beamwidth_deg = rad2deg(beamwidth_3db(track, theta, cfg.radar, cfg.frame_model));
        } catch (const ZeroTangentialVelocity&) {
        } catch (const DegenerateGeometry&) {
        } catch (const UndefinedForN1&) {
        }
        rows.push_back(row);
    }
    return rows;
}

/// Scene, tracks and axes for the image command.
inline SarImage run_image(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto& im = cfg.image;
    Scene scene;
    std::vector<std::pair<double, double>> pts{{im.target_range_m, im.target_angle_deg}};
    pts.insert(pts.end(), im.reflectors.begin(), im.reflectors.end());
    scene.reflector_angles.resize(static_cast<Eigen::Index>(pts.size()));
    Eigen::VectorXd ranges(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ranges[static_cast<Eigen::Index>(i)] = pts[i].first;
        scene.reflector_angles[static_cast<Eigen::Index>(i)] = deg2rad(pts[i].second);
    }
    scene.reflector_ranges = ranges;
    scene.target_angle = deg2rad(im.target_angle_deg);
    scene.target_range = im.target_range_m;

    const VelocityTrack v_true = cfg.track();
    VelocityTrack v_hyp = v_true;
    v_hyp.col(1).array() += im.velocity_error_mps;

    auto axis = [](double lo, double hi, double step) {
        AngleGrid g{lo, hi, step};
        Eigen::VectorXd out(g.count());
        for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = g.at(i);
        return out;
    };
    const Eigen::VectorXd ranges_axis = axis(im.range_min_m, im.range_max_m, im.range_step_m);
    const Eigen::VectorXd angles_axis =
        axis(deg2rad(im.angle_min_deg), deg2rad(im.angle_max_deg), deg2rad(im.angle_step_deg));
    ImageOptions opts;
    opts.range_resolution = im.range_resolution_m;
    opts.model = cfg.frame_model;
    return sar_image(scene, v_true, v_hyp, cfg.radar, ranges_axis, angles_axis, opts);
}

// ---------------------------------------------------------------------------
// CSV output. All floating-point values use 9 significant digits.

inline std::string csv_header_comment(std::string_view command, const ExperimentConfig& cfg) {
    return fmt::format("# autosar {} command={} config_hash={:016x} seed={}\n", kVersion, command, cfg.hash(),
                       cfg.seed);
}

inline void write_rmse_csv(std::ostream& os, const MonteCarloResult& res) {
    os << "sweep_value,theta_deg,rmse_sim_deg,rmse_analysis_deg,rmse_asymptotic_deg,trials_used,failed_trials\n";
    for (const auto& r : res.rows)
        os << fmt::format("{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{},{}\n", r.sweep_value, r.theta_deg, r.rmse_sim_deg,
                          r.rmse_analysis_deg, r.rmse_asymptotic_deg, r.trials_used, r.failed_trials);
}

inline void write_resolution_csv(std::ostream& os, const std::vector<ResolutionRow>& rows) {
    os << "theta_deg,aperture_m,beamwidth_deg\n";
    for (const auto& r : rows) os << fmt::format("{:.9g},{:.9g},{:.9g}\n", r.theta_deg, r.aperture_m, r.beamwidth_deg);
}

inline void write_gain_csv(std::ostream& os, const std::vector<GainRow>& rows) {
    os << "theta_deg,sweep_value,gain_ratio,degradation_ratio\n";
    for (const auto& r : rows)
        os << fmt::format("{:.9g},{:.9g},{:.9g},{:.9g}\n", r.theta_deg, r.sweep_value, r.gain_ratio,
                          r.degradation_ratio);
}

inline void write_velcov_csv(std::ostream& os, const std::vector<VelocityCovRow>& rows) {
    os << "sigma_phi_deg,speed_mps,num_targets,std_sim_mps,std_analysis_mps\n";
    for (const auto& r : rows)
        os << fmt::format("{:.9g},{:.9g},{},{:.9g},{:.9g}\n", r.sigma_phi_deg, r.speed_mps, r.num_targets,
                          r.std_sim_mps, r.std_analysis_mps);
}

inline void write_lemma_csv(std::ostream& os, const std::vector<LemmaReport>& rows) {
    os << "N,norm4_direct,norm4_closed_form,norm2_direct,omega\n";
    for (const auto& r : rows)
        os << fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g}\n", r.n, r.norm4_direct, r.norm4_closed_form, r.norm2_direct,
                          r.omega);
}

inline void write_predict_csv(std::ostream& os, const std::vector<PredictRow>& rows) {
    os << "theta_deg,rmse_full_deg,rmse_asymptotic_deg,asymptotic_doppler_term_rad2,asymptotic_angle_term_rad2,"
          "beamwidth_deg\n";
    for (const auto& r : rows)
        os << fmt::format("{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", r.theta_deg, r.rmse_full_deg,
                          r.rmse_asymptotic_deg, r.asymptotic_doppler_term, r.asymptotic_angle_term, r.beamwidth_deg);
}

}  // namespace autosar
