// cirlab command-line driver: one verb per experiment mode.
//
//   cirlab <verb> [--config FILE] [--out DIR] [--seed N] [--workers N]
//
// Flags may also come from CIRLAB_CONFIG, CIRLAB_OUT, CIRLAB_SEED and
// CIRLAB_WORKERS; an explicit flag wins over the environment, which wins over
// the config file.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "cirlab/cirlab.hpp"

namespace fs = std::filesystem;
using namespace cirlab;
using json = nlohmann::json;

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string error_type(const std::exception& ex) {
    const std::string w = ex.what();
    const auto colon = w.find(':');
    if (dynamic_cast<const Error*>(&ex) && colon != std::string::npos) return w.substr(0, colon);
    return "InternalError";
}

std::string axis_column(SweepAxis a) { return std::string(to_string(a)); }

class Runner {
public:
    Runner(const ExperimentConfig& cfg, const fs::path& out) : cfg_(cfg), out_(out) {}

    std::vector<std::string> files;

    void run() {
        switch (cfg_.mode) {
        case Mode::ClassicalSweep: classical_sweep(); break;
        case Mode::QuantumSweep: quantum_sweep(); break;
        case Mode::FreespaceTheta: freespace_theta(); break;
        case Mode::DensityMap: density(); break;
        case Mode::Convergence: convergence(); break;
        case Mode::BohrSommerfeld: bohr(); break;
        case Mode::ScatteringLength: scattering_length_sweep(); break;
        }
    }

private:
    std::string path(const std::string& name) {
        files.push_back(name);
        return (out_ / name).string();
    }

    void classical_sweep() {
        const auto axis = cfg_.sweep.axis;
        CsvWriter w(path("transmission.csv"),
                    {{axis_column(axis), std::string(axis_unit(axis))},
                     {"T", "1"},
                     {"stderr", "1"},
                     {"n_trans", "count"},
                     {"n_refl", "count"},
                     {"n_excluded", "count"},
                     {"mean_theta", "rad"},
                     {"max_energy_drift", "hbar*omega"},
                     {"error", ""}});
        const auto curve = sweep_transmission(cfg_.ensemble(), axis, cfg_.sweep.grid(), cfg_.workers,
                                              [&](const CurvePoint& p) {
                                                  if (p.estimate) {
                                                      const auto& e = *p.estimate;
                                                      w.write(p.value, e.t, e.std_error, e.n_trans, e.n_refl,
                                                              e.n_excluded, e.mean_theta, e.max_energy_drift, "");
                                                  } else {
                                                      w.write(p.value, p.t, p.std_error, 0, 0, 0, NAN, NAN, p.error);
                                                  }
                                              });
        write_tmin(curve);
    }

    void write_tmin(const TransmissionCurve& curve, std::optional<TminResult> given = std::nullopt) {
        if (curve.axis != SweepAxis::V0) return;
        CsvWriter w(path("tmin.csv"), {{"v0_star", "hbar*omega"},
                                       {"v0_star_stderr", "hbar*omega"},
                                       {"t_min", "1"},
                                       {"t_min_stderr", "1"},
                                       {"bracket_lo", "hbar*omega"},
                                       {"bracket_hi", "hbar*omega"},
                                       {"error", ""}});
        try {
            const auto r = given ? *given : locate_tmin(curve);
            w.write(r.v0_star, r.v0_star_stderr, r.t_min, r.t_min_stderr, r.bracket_lo, r.bracket_hi, "");
        } catch (const Error& ex) {
            w.write(NAN, NAN, NAN, NAN, NAN, NAN, ex.what());
        }
    }

    void quantum_sweep() {
        const auto axis = cfg_.sweep.axis;
        CsvWriter w(path("quantum.csv"), {{axis_column(axis), std::string(axis_unit(axis))},
                                          {"T", "1"},
                                          {"R", "1"},
                                          {"unitarity_defect", "1"},
                                          {"n_open", "count"},
                                          {"condition", "1"},
                                          {"tail_potential", "hbar*omega"},
                                          {"error", ""}});
        const auto sw = sweep_quantum(cfg_.params, cfg_.potential, axis, cfg_.sweep.grid(), cfg_.quantum, cfg_.workers,
                                      [&](const QuantumPoint& q) {
                                          if (q.solution) {
                                              const auto& s = *q.solution;
                                              w.write(q.value, s.t, s.r, s.unitarity_defect(), s.channels.n_open(),
                                                      s.condition, s.tail_potential, "");
                                          } else {
                                              w.write(q.value, NAN, NAN, NAN, 0, NAN, NAN, q.error);
                                          }
                                      });
        if (axis != SweepAxis::V0) return;
        std::optional<TminResult> refined;
        try {
            refined = refine_quantum_tmin(cfg_.params, cfg_.potential, sw.curve, cfg_.quantum);
        } catch (const Error&) {
        }
        write_tmin(sw.curve, refined);
    }

    void freespace_theta() {
        CsvWriter w(path("theta.csv"), {{"v0", "hbar*omega"}, {"theta", "rad"}, {"singular_flag", ""}, {"error", ""}});
        for (const auto& p : theta_vs_v0(cfg_.potential, cfg_.freespace.s, cfg_.freespace.energy, cfg_.sweep.grid()))
            w.write(p.v0, p.theta, p.singular, p.error);
        CsvWriter o(path("orbiting.csv"), {{"s", "a_ho"}, {"energy", "hbar*omega"}, {"v0_star", "hbar*omega"},
                                           {"r_star", "a_ho"}, {"error", ""}});
        try {
            const auto op = orbiting_threshold(cfg_.potential, cfg_.freespace.s, cfg_.freespace.energy);
            o.write(cfg_.freespace.s, cfg_.freespace.energy, op.v0, op.r, "");
        } catch (const Error& ex) {
            o.write(cfg_.freespace.s, cfg_.freespace.energy, NAN, NAN, ex.what());
        }
    }

    void density() {
        const auto& d = cfg_.density;
        CsvWriter summary(path("density_summary.csv"),
                          {{"v0", "hbar*omega"}, {"central_fraction", "1"}, {"central_half", "a_ho"}, {"error", ""}});
        for (double v0 : d.v0_values) {
            try {
                const auto h = density_map(cfg_.ensemble(), v0, Histogram2D(-d.x_half, d.x_half, d.nx, -d.z_half, d.z_half, d.nz),
                                           cfg_.workers);
                CsvWriter m(path("density_v0_" + csv_cell(v0) + ".csv"),
                            {{"x", "a_ho"}, {"z", "a_ho"}, {"density", "1/cell"}});
                for (int i = 0; i < h.na; ++i)
                    for (int j = 0; j < h.nb; ++j) m.write(h.a_center(i), h.b_center(j), h.at(i, j));
                summary.write(v0, central_mass_fraction(h, d.central_half, d.central_half), d.central_half, "");
            } catch (const Error& ex) {
                summary.write(v0, NAN, d.central_half, ex.what());
            }
        }
        if (!d.theta_sweep) return;
        CsvWriter t(path("theta_confined.csv"), {{"v0", "hbar*omega"},
                                                 {"mean_theta", "rad"},
                                                 {"theta_stderr", "rad"},
                                                 {"n_theta", "count"},
                                                 {"n_unresolved", "count"},
                                                 {"T", "1"},
                                                 {"stderr", "1"},
                                                 {"error", ""}});
        theta_vs_v0_confined(cfg_.ensemble(), cfg_.sweep.grid(), cfg_.workers, [&](const ThetaPoint& p) {
            if (p.estimate)
                t.write(p.v0, p.mean_theta, p.theta_stderr, p.n_theta, p.n_unresolved, p.estimate->t,
                        p.estimate->std_error, "");
            else
                t.write(p.v0, NAN, NAN, 0, 0, NAN, NAN, p.error);
        });
    }

    void convergence() {
        CsvWriter w(path("convergence.csv"), {{"v0", "hbar*omega"},
                                              {"N", "count"},
                                              {"mean_T", "1"},
                                              {"stderr", "1"},
                                              {"sd", "1"},
                                              {"repeats", "count"},
                                              {"stderr_ratio", "1"},
                                              {"error", ""}});
        std::vector<std::size_t> sizes;
        for (double s : cfg_.convergence.sizes) sizes.push_back(std::size_t(s));
        for (double v0 : cfg_.convergence.v0_values) {
            try {
                auto spec = cfg_.ensemble();
                spec.potential.v0 = v0;
                const auto rows = convergence_study(spec, sizes, std::size_t(cfg_.convergence.repeats), cfg_.workers);
                for (std::size_t k = 0; k < rows.size(); ++k) {
                    const double ratio = k == 0 || rows[k - 1].stats.std_error == 0.0
                                             ? NAN
                                             : rows[k].stats.std_error / rows[k - 1].stats.std_error;
                    w.write(v0, rows[k].n, rows[k].stats.mean, rows[k].stats.std_error, rows[k].stats.sd,
                            cfg_.convergence.repeats, ratio, "");
                }
            } catch (const Error& ex) {
                w.write(v0, 0, NAN, NAN, NAN, cfg_.convergence.repeats, NAN, ex.what());
            }
        }
    }

    void bohr() {
        CsvWriter w(path("levels.csv"), {{"n", "count"},
                                         {"lz", "hbar"},
                                         {"energy", "hbar*omega"},
                                         {"exact", "hbar*omega"},
                                         {"rel_error", "1"}});
        const auto levels = bohr_sommerfeld_levels(cfg_.bohr.n_max, cfg_.bohr.lz, cfg_.units);
        for (int n = 0; n <= cfg_.bohr.n_max; ++n) {
            const double exact = transverse_energy(n, cfg_.bohr.lz, cfg_.units);
            w.write(n, cfg_.bohr.lz, levels[n], exact, std::abs(levels[n] - exact) / exact);
        }
    }

    void scattering_length_sweep() {
        CsvWriter w(path("scattering_length.csv"), {{"v0", "hbar*omega"},
                                                    {"a_s", "a_ho"},
                                                    {"divergence_flag", ""},
                                                    {"nodes", "count"},
                                                    {"error", ""}});
        for (double v0 : cfg_.sweep.grid()) {
            try {
                const auto s = scattering_length_detail(cfg_.potential.with_v0(v0));
                w.write(v0, s.divergent ? NAN : s.a_s, s.divergent, s.nodes, "");
            } catch (const Error& ex) {
                w.write(v0, NAN, false, 0, ex.what());
            }
        }
    }

    const ExperimentConfig& cfg_;
    fs::path out_;
};

json versions() {
    return {{"cirlab", cirlab::version},
            {"compiler", __VERSION__},
            {"cplusplus", long(__cplusplus)},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"cli11", CLI11_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cirlab: classical and quantum scattering under 2D harmonic confinement"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    app.add_option("--config", config_path, "configuration file (key = value with [sections])")->envname("CIRLAB_CONFIG");
    app.add_option("--out", out_dir, "output directory (overrides run.output)")->envname("CIRLAB_OUT");
    app.add_option("--seed", seed, "master seed (overrides run.master_seed)")->envname("CIRLAB_SEED");
    app.add_option("--workers", workers, "worker threads, 0 = all cores (overrides run.workers)")
        ->envname("CIRLAB_WORKERS");
    app.fallthrough();
    const std::pair<Mode, const char*> verbs[] = {
        {Mode::ClassicalSweep, "Monte Carlo T(axis) over complexified orbits, with the located minimum"},
        {Mode::QuantumSweep, "coupled-channel T and R over the sweep axis"},
        {Mode::FreespaceTheta, "free-space deflection angle over V0 and the orbiting threshold"},
        {Mode::DensityMap, "time-weighted real-orbit density in the x-z plane"},
        {Mode::Convergence, "stderr of T against ensemble size over repeated batches"},
        {Mode::BohrSommerfeld, "quantized transverse levels against 2n+|lz|+1"},
        {Mode::ScatteringLength, "zero-energy free-space scattering length over V0"},
    };
    for (const auto& [m, help] : verbs) app.add_subcommand(std::string(to_string(m)), help);
    CLI11_PARSE(app, argc, argv);

    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    json manifest;
    manifest["started"] = started;
    manifest["versions"] = versions();
    manifest["argv"] = std::vector<std::string>(argv, argv + argc);

    ExperimentConfig cfg;
    fs::path out;
    std::string config_text;
    auto finish = [&](int code, const json& error) {
        manifest["finished"] = utc_now();
        manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest["status"] = code == 0 ? "ok" : "error";
        if (!error.is_null()) manifest["error"] = error;
        if (out.empty()) {
            std::cout << manifest.dump(2) << "\n";
            return code;
        }
        std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";
        if (!error.is_null()) std::ofstream(out / "error.json") << error.dump(2) << "\n";
        return code;
    };

    try {
        if (!config_path.empty()) config_text = read_file(config_path);
        cfg = parse_config(config_text);
        cfg.mode = parse_mode(app.get_subcommands().front()->get_name());
        if (!out_dir.empty()) cfg.output = out_dir;
        if (seed) cfg.master_seed = *seed;
        if (workers) cfg.workers = *workers;
        validate_config(cfg);
        out = cfg.output;
        fs::create_directories(out);
        std::ofstream(out / "config.ini") << serialize(cfg);
        if (!config_path.empty()) std::ofstream(out / "config.input.ini") << config_text;
        manifest["mode"] = std::string(to_string(cfg.mode));
        manifest["master_seed"] = cfg.master_seed;
        manifest["workers"] = resolve_workers(cfg.workers);
        manifest["config"] = serialize(cfg);
        manifest["config_source"] = config_path.empty() ? "defaults" : config_path;

        Runner runner(cfg, out);
        try {
            runner.run();
        } catch (...) {
            manifest["files"] = runner.files;
            throw;
        }
        manifest["files"] = runner.files;
        return finish(0, nullptr);
    } catch (const ParseError& ex) {
        std::cerr << ex.what() << "\n";
        return finish(2, {{"type", "ParseError"}, {"message", ex.what()}, {"line", ex.line()}});
    } catch (const std::exception& ex) {
        std::cerr << ex.what() << "\n";
        return finish(2, {{"type", error_type(ex)}, {"message", ex.what()}});
    }
}
