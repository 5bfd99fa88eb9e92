// Acceptance gate. `acceptance N` checks one criterion, `acceptance` runs all.
// Each criterion prints one PASS/FAIL line; the exit status is nonzero on FAIL.

#include <autosar/autosar.hpp>

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace autosar;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig baseline() {
    ExperimentConfig cfg;  // 1 deg, 50 Hz, 20 dB, 10 m/s heading 0, K = 5, N = 5, 20 ms
    cfg.seed = 20240611;
    return cfg;
}

// 1. |sim - analysis| / analysis <= 0.25 for theta = 10..80 deg, 1000 trials.
Outcome criterion1() {
    auto cfg = baseline();
    cfg.theta_start_deg = 10;
    cfg.theta_stop_deg = 80;
    cfg.theta_step_deg = 5;
    cfg.trials = 1000;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_rmse_sweep(cfg, 1);
    const double elapsed = seconds_since(t0);

    Outcome out;
    double worst = 0.0, worst_theta = 0.0;
    for (const auto& r : res.rows) {
        const double rel = std::abs(r.rmse_sim_deg - r.rmse_analysis_deg) / r.rmse_analysis_deg;
        if (!(rel <= 0.25)) out.pass = false;
        if (!(rel <= worst)) worst = rel, worst_theta = r.theta_deg;
    }
    if (elapsed > 120.0) out.pass = false;
    out.detail = fmt::format("max |sim-analysis|/analysis = {:.3f} at {:g} deg (tol 0.25); {:.1f} s single-thread (limit 120 s)",
                             worst, worst_theta, elapsed);
    return out;
}

// 2. Speed reduction factors of the simulated RMSE, mean of per-theta ratios
//    over theta = 20..70 deg: RMSE(3)/RMSE(10) in [1.6, 2.4], RMSE(10)/RMSE(25) in [1.05, 1.35].
Outcome criterion2() {
    auto cfg = baseline();
    cfg.theta_start_deg = 20;
    cfg.theta_stop_deg = 70;
    cfg.theta_step_deg = 5;
    cfg.trials = 1000;
    cfg.sweep = Sweep{"speed_mps", {3, 10, 25}};
    const auto res = run_rmse_sweep(cfg, workers());

    std::map<double, std::map<double, double>> by_speed;
    for (const auto& r : res.rows) by_speed[r.sweep_value][r.theta_deg] = r.rmse_sim_deg;
    double low = 0, high = 0;
    int count = 0;
    for (const auto& [theta, rmse10] : by_speed[10]) {
        low += by_speed[3][theta] / rmse10;
        high += rmse10 / by_speed[25][theta];
        ++count;
    }
    low /= count;
    high /= count;
    Outcome out;
    out.pass = low >= 1.6 && low <= 2.4 && high >= 1.05 && high <= 1.35;
    out.detail = fmt::format("RMSE(3)/RMSE(10) = {:.3f} (tol [1.6, 2.4]); RMSE(10)/RMSE(25) = {:.3f} (tol [1.05, 1.35])",
                             low, high);
    return out;
}

// 3. Gain: > 1 for theta >= 20, in [2.1, 3.9] for theta in [40, 85];
//    < 1.3 at 10 deg for v = 3 m/s, K = 2 and N = 2.
Outcome criterion3() {
    auto cfg = baseline();
    cfg.theta_start_deg = 20;
    cfg.theta_stop_deg = 85;
    cfg.theta_step_deg = 5;
    Outcome out;
    double min_above20 = 1e9, min_band = 1e9, max_band = 0;
    for (const auto& r : run_gain_report(cfg)) {
        min_above20 = std::min(min_above20, r.gain_ratio);
        if (r.theta_deg >= 40 - 1e-9) {
            min_band = std::min(min_band, r.gain_ratio);
            max_band = std::max(max_band, r.gain_ratio);
        }
    }
    out.pass = min_above20 > 1.0 && min_band >= 2.1 && max_band <= 3.9;

    std::vector<std::string> low;
    for (const auto& [name, value] : std::vector<std::pair<std::string, double>>{
             {"speed_mps", 3}, {"num_targets", 2}, {"num_frames", 2}}) {
        auto c = apply_sweep(baseline(), name, value);
        c.theta_start_deg = c.theta_stop_deg = 10;
        const double g = run_gain_report(c).front().gain_ratio;
        if (!(g < 1.3)) out.pass = false;
        low.push_back(fmt::format("{}={:g}: {:.3f}", name, value, g));
    }
    out.detail = fmt::format("min gain theta>=20 = {:.3f} (>1); gain 40..85 in [{:.3f}, {:.3f}] (tol [2.1, 3.9]); "
                             "at 10 deg {} (tol <1.3)",
                             min_above20, min_band, max_band, fmt::join(low, ", "));
    return out;
}

// 4. Frame-count polynomial identities.
Outcome criterion4() {
    Outcome out;
    double worst_norm4 = 0;
    bool elements = true;
    for (std::int64_t n = 3; n <= 101; n += 2) {
        const auto r = lemma_polynomials(n);
        worst_norm4 = std::max(worst_norm4, std::abs(r.norm4_direct / r.norm4_closed_form - 1));
        elements = elements && r.elements_exact;
    }
    const double n1001 = 1001;
    const double lead = lemma_polynomials(1001).norm2_direct * 120 / std::pow(n1001, 5);
    const double slope = omega(1000) * 6 / (5.0 * 1000);
    out.pass = worst_norm4 <= 1e-9 && elements && lead >= 0.99 && lead <= 1.01 && slope >= 0.98 && slope <= 1.02;
    out.detail = fmt::format("odd N 3..101: max norm4 rel err {:.2e} (tol 1e-9), elements exact {}; "
                             "N=1001 norm2*120/N^5 = {:.5f} (tol [0.99, 1.01]); omega(1000)*6/5000 = {:.5f} (tol [0.98, 1.02])",
                             worst_norm4, elements, lead, slope);
    return out;
}

// 5. Velocity error std, simulation within 10% of analysis, 1e4 trials per setting.
Outcome criterion5() {
    auto cfg = baseline();
    cfg.velcov_sigma_phi_deg = {1, 3};
    cfg.velcov_speeds_mps = {3, 10, 25};
    cfg.velcov_num_targets = {5, 10};
    cfg.velcov_trials = 10000;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = run_velocity_cov_report(cfg, workers());
    const double elapsed = seconds_since(t0);
    Outcome out;
    double worst = 0;
    std::string where;
    for (const auto& r : rows) {
        const double rel = std::abs(r.std_sim_mps / r.std_analysis_mps - 1);
        if (!(rel <= 0.10)) out.pass = false;
        if (!(rel <= worst)) {
            worst = rel;
            where = fmt::format("sigma={:g} v={:g} K={}", r.sigma_phi_deg, r.speed_mps, r.num_targets);
        }
    }
    if (elapsed > 30.0) out.pass = false;
    out.detail = fmt::format("max |sim/analysis - 1| = {:.3f} at {} (tol 0.10); {:.1f} s (limit 30 s)", worst, where,
                             elapsed);
    return out;
}

// 6. Closed-form reductions.
Outcome criterion6() {
    Outcome out;
    RadarConfig c;
    c.sigma_phi_rad = 0;
    auto rng = make_stream(6, {});
    const auto a = uniform_scene_angles(8, c, rng);
    const auto g = doppler_matrix(a, c.wavelength());
    const Mat2 gamma = c.sigma_f_hz * c.sigma_f_hz * (g.transpose() * g).inverse();
    const double cov_err = (velocity_covariance_analytical(a, Vec2(0, 10), c) - gamma).norm() / gamma.norm();

    RadarConfig d;
    const Vec2 v(0, 10);
    // Mean over 20 scenes of 500 angles drawn uniformly over the field of view.
    double worst_k = 0;
    for (double deg = 10; deg <= 80; deg += 10) {
        const double th = deg2rad(deg);
        double full = 0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            auto scene_rng = make_stream(66, {s});
            full += angle_variance_full(constant_track(v, 5), th, uniform_scene_angles(500, d, scene_rng), v, d).variance;
        }
        full /= 20;
        worst_k = std::max(worst_k, std::abs(full / angle_variance_asymptotic(th, v, 500, 5, d).variance - 1));
    }

    double worst_scale = 0;
    const double ref = angle_variance_asymptotic(0.7, v, 5, 5, d).variance;
    for (double s : {0.5, 2.0, 10.0}) {
        RadarConfig e = d;
        e.sigma_f_hz *= s;
        worst_scale = std::max(worst_scale, std::abs(angle_variance_asymptotic(0.7, s * v, 5, 5, e).variance / ref - 1));
    }
    out.pass = cov_err <= 1e-12 && worst_k <= 0.05 && worst_scale <= 1e-12;
    out.detail = fmt::format("sigma_phi=0 cov vs sigma_f^2 Gamma rel err {:.1e} (tol 1e-12); K=500 uniform, full (20-scene mean) vs "
                             "asymptotic max rel diff {:.4f} (tol 0.05); joint scaling max rel diff {:.1e} (tol 1e-12)",
                             cov_err, worst_k, worst_scale);
    return out;
}

// 7. 28 m / 6 deg target, 15 frames, v_y error 0.03 m/s: peak within 1 dB of
//    the zero-error peak at a nonzero offset; zero-error pipeline returns 6 deg.
Outcome criterion7() {
    ExperimentConfig cfg = baseline();
    cfg.num_frames = 15;
    cfg.radar.sigma_phi_rad = 0;
    cfg.radar.sigma_f_hz = 0;
    cfg.radar.snr_db = std::numeric_limits<double>::infinity();
    cfg.image.angle_step_deg = 0.005;
    const auto ref = image_peak(run_image(cfg));
    cfg.image.velocity_error_mps = 0.03;
    const auto off = image_peak(run_image(cfg));

    const auto track = cfg.track();
    const double theta = deg2rad(6);
    const double bw = beamwidth_3db(track, theta, cfg.radar);
    Scene scene;
    scene.reflector_angles = spread_scene_angles(5, cfg.radar);
    scene.target_angle = theta;
    auto rng = make_stream(cfg.seed, {7});
    const double recovered = estimate_sar_angle(scene, track, cfg.radar, rng);

    const double drop = ref.intensity_db - off.intensity_db;
    const double offset = rad2deg(off.angle - ref.angle);
    const double miss = std::abs(recovered - theta);
    Outcome out;
    out.pass = drop <= 1.0 && std::abs(offset) >= 0.1 && miss <= 0.01 * bw;
    out.detail = fmt::format("perturbed peak {:.3f} dB below reference (tol 1 dB) at offset {:+.3f} deg (need >= 0.1); "
                             "zero-error estimate {:.6f} deg, error {:.2e} rad (tol {:.2e} = 1% of 3 dB beamwidth)",
                             drop, offset, rad2deg(recovered), miss, 0.01 * bw);
    return out;
}

// 8. Beamwidth monotone in theta and aperture; 3 m at 90 deg within 15% of lambda/(2L).
Outcome criterion8() {
    auto cfg = baseline();
    cfg.theta_start_deg = 10;
    cfg.theta_stop_deg = 90;
    cfg.theta_step_deg = 5;
    const std::vector<double> apertures{1.0, 2.5, 3.0};
    const auto rows = run_resolution_sweep(apertures, cfg, workers());
    std::map<double, std::map<double, double>> bw;
    for (const auto& r : rows) bw[r.aperture_m][r.theta_deg] = r.beamwidth_deg;

    bool mono_theta = true, mono_aperture = true;
    for (const auto& [a, curve] : bw) {
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& [t, w] : curve) {
            mono_theta = mono_theta && w < prev;
            prev = w;
        }
    }
    for (const auto& [t, w1] : bw[1.0]) mono_aperture = mono_aperture && bw[2.5][t] < w1 && bw[3.0][t] < bw[2.5][t];
    const double oracle = rad2deg(cfg.radar.wavelength() / (2 * 3.0));
    const double rel = bw[3.0][90.0] / oracle - 1;
    Outcome out;
    out.pass = mono_theta && mono_aperture && std::abs(rel) <= 0.15;
    out.detail = fmt::format("monotone in theta {}, in aperture {}; L=3 m at 90 deg {:.5f} deg vs lambda/(2L) {:.5f} deg "
                             "({:+.1f}%, tol 15%)",
                             mono_theta, mono_aperture, bw[3.0][90.0], oracle, 100 * rel);
    return out;
}

// 9. Byte-identical CSV output with 1 and 8 workers.
Outcome criterion9() {
    auto cfg = baseline();
    cfg.trials = 100;
    cfg.theta_step_deg = 10;
    cfg.analysis_scenes = 20;
    cfg.sweep = Sweep{"num_targets", {2, 5}};
    cfg.velcov_trials = 1000;

    auto render_all = [&](unsigned threads) {
        std::ostringstream os;
        os << csv_header_comment("rmse", cfg);
        write_rmse_csv(os, run_rmse_sweep(cfg, threads));
        os << csv_header_comment("velcov", cfg);
        write_velcov_csv(os, run_velocity_cov_report(cfg, threads));
        os << csv_header_comment("gain", cfg);
        write_gain_csv(os, run_gain_report(cfg, threads));
        os << csv_header_comment("resolution", cfg);
        write_resolution_csv(os, run_resolution_sweep(cfg.apertures_m, cfg, threads));
        return os.str();
    };
    const std::string one = render_all(1);
    const std::string eight = render_all(8);
    const std::string again = render_all(1);
    Outcome out;
    out.pass = one == eight && one == again;
    out.detail = fmt::format("{} bytes of rmse/velcov/gain/resolution CSV; 1 vs 8 workers identical {}, rerun identical {}",
                             one.size(), one == eight, one == again);
    return out;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> kCriteria{
    {"analysis vs simulation RMSE", criterion1},
    {"speed ratios", criterion2},
    {"gain over physical array", criterion3},
    {"frame-count polynomial identities", criterion4},
    {"velocity covariance vs Monte-Carlo", criterion5},
    {"closed-form reductions", criterion6},
    {"velocity-angle ambiguity", criterion7},
    {"resolution curves", criterion8},
    {"determinism across workers", criterion9},
};

bool run(std::size_t index) {
    const auto& [name, fn] = kCriteria[index];
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, fmt::format("exception: {}", e.what())};
    }
    std::cout << fmt::format("[{}] criterion {}: {}: {}", o.pass ? "PASS" : "FAIL", index + 1, name, o.detail)
              << std::endl;
    return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
    bool ok = true;
    if (argc > 1) {
        for (int i = 1; i < argc; ++i) {
            const int n = std::atoi(argv[i]);
            if (n < 1 || n > static_cast<int>(kCriteria.size())) {
                std::cerr << "usage: acceptance [1-9 ...]\n";
                return 2;
            }
            ok = run(static_cast<std::size_t>(n - 1)) && ok;
        }
    } else {
        for (std::size_t i = 0; i < kCriteria.size(); ++i) ok = run(i) && ok;
    }
    return ok ? 0 : 1;
}
