// autosar: runs the Monte-Carlo experiments and closed-form reports, writes CSV.

#include <autosar/autosar.hpp>

#include <CLI11.hpp>

#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out = "-";
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> trials;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::string> frame_model;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "key = value config file");
    cmd->add_option("--out", o.out, "output CSV path ('-' for stdout)");
    cmd->add_option("--seed", o.seed, "base seed (u64)");
    cmd->add_option("--trials", o.trials, "Monte-Carlo trials per point")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--frame-model", o.frame_model, "integrated | point");
}

autosar::ExperimentConfig resolve(const CommonOptions& o) {
    autosar::ExperimentConfig cfg = o.config_path.empty() ? autosar::ExperimentConfig{} : autosar::load_config(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) {
        cfg.trials = *o.trials;
        cfg.velcov_trials = *o.trials;
    }
    if (o.frame_model) cfg.frame_model = autosar::parse_frame_model(*o.frame_model);
    cfg.validate();
    return cfg;
}

template <class Writer>
void emit(const CommonOptions& o, std::string_view command, const autosar::ExperimentConfig& cfg, Writer&& write) {
    const std::string header = autosar::csv_header_comment(command, cfg);
    if (o.out == "-") {
        std::cout << header;
        write(std::cout);
        return;
    }
    std::ofstream file(o.out, std::ios::binary);
    if (!file) throw autosar::ConfigInvalid(fmt::format("cannot write '{}'", o.out));
    file << header;
    write(file);
    if (!file) throw autosar::Error(fmt::format("write to '{}' failed", o.out));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAR angle-error analysis with radar-estimated ego velocity"};
    app.set_version_flag("--version", std::string(autosar::kVersion));
    app.require_subcommand(1);

    CommonOptions o;
    std::vector<double> apertures;
    std::vector<std::int64_t> lemma_n;
    std::optional<double> theta_deg;

    auto* rmse = app.add_subcommand("rmse", "SAR angle RMSE: simulation vs analysis per sweep value and angle");
    auto* resolution = app.add_subcommand("resolution", "3 dB beamwidth per angle and synthetic aperture");
    auto* gain = app.add_subcommand("gain", "gain over the physical array and degradation vs resolution");
    auto* velcov = app.add_subcommand("velcov", "single-frame velocity error std: simulation vs analysis");
    auto* lemma = app.add_subcommand("lemma", "frame-count polynomial identities and omega(N)");
    auto* image = app.add_subcommand("image", "range-angle intensity image in dB");
    auto* predict = app.add_subcommand("predict", "closed-form RMSE predictions and beamwidth");
    for (auto* cmd : {rmse, resolution, gain, velcov, lemma, image, predict}) add_common(cmd, o);
    resolution->add_option("--apertures", apertures, "apertures in m (overrides config)");
    lemma->add_option("--n", lemma_n, "frame counts (overrides config)");
    predict->add_option("--theta-deg", theta_deg, "single target angle instead of the config grid");

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = resolve(o);
        if (rmse->parsed()) {
            const auto res = autosar::run_rmse_sweep(cfg, o.threads);
            emit(o, "rmse", cfg, [&](std::ostream& os) { autosar::write_rmse_csv(os, res); });
        } else if (resolution->parsed()) {
            if (!apertures.empty()) cfg.apertures_m = apertures;
            const auto rows = autosar::run_resolution_sweep(cfg.apertures_m, cfg, o.threads);
            emit(o, "resolution", cfg, [&](std::ostream& os) { autosar::write_resolution_csv(os, rows); });
        } else if (gain->parsed()) {
            const auto rows = autosar::run_gain_report(cfg, o.threads);
            emit(o, "gain", cfg, [&](std::ostream& os) { autosar::write_gain_csv(os, rows); });
        } else if (velcov->parsed()) {
            const auto rows = autosar::run_velocity_cov_report(cfg, o.threads);
            emit(o, "velcov", cfg, [&](std::ostream& os) { autosar::write_velcov_csv(os, rows); });
        } else if (lemma->parsed()) {
            if (!lemma_n.empty()) cfg.lemma_n_values.assign(lemma_n.begin(), lemma_n.end());
            std::vector<std::int64_t> ns;
            for (double n : cfg.lemma_n_values) ns.push_back(std::llround(n));
            const auto rows = autosar::run_lemma_check(ns);
            emit(o, "lemma", cfg, [&](std::ostream& os) { autosar::write_lemma_csv(os, rows); });
        } else if (image->parsed()) {
            const auto img = autosar::run_image(cfg);
            emit(o, "image", cfg, [&](std::ostream& os) { autosar::write_image_csv(os, img); });
        } else if (predict->parsed()) {
            if (theta_deg) {
                cfg.theta_start_deg = cfg.theta_stop_deg = *theta_deg;
            }
            const auto rows = autosar::run_predict(cfg);
            emit(o, "predict", cfg, [&](std::ostream& os) { autosar::write_predict_csv(os, rows); });
        }
    } catch (const autosar::Error& e) {
        std::cerr << "autosar: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
