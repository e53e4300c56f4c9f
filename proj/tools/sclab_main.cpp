#include <CLI11.hpp>
#include <iostream>

#include "sclab/harness.hpp"

namespace {

struct Overrides {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    std::string format;
    std::size_t max_points = 0;
    bool max_points_set = false;
};

void add_overrides(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--seed", ov.seed, "Solver seed")->each([&ov](const std::string&) {
        ov.seed_set = true;
    });
    cmd->add_option("--out", ov.out, "Output directory");
    cmd->add_option("--format", ov.format, "Report format: csv, json or both");
    cmd->add_option("--max-points", ov.max_points, "Grid point budget")
        ->each([&ov](const std::string&) { ov.max_points_set = true; });
}

sclab::ScenarioConfig load_with_overrides(const std::string& path, const Overrides& ov) {
    sclab::ScenarioConfig cfg = sclab::load_scenario(path);
    if (ov.seed_set) cfg.solver.seed = ov.seed;
    if (!ov.out.empty()) cfg.out_dir = ov.out;
    if (!ov.format.empty()) {
        if (ov.format != "csv" && ov.format != "json" && ov.format != "both")
            throw sclab::config_error("--format must be csv, json or both");
        cfg.format = ov.format;
    }
    if (ov.max_points_set) cfg.policy.max_points = ov.max_points;
    return cfg;
}

void print_summaries(const sclab::ScenarioReport& rep) {
    for (const std::string& e : rep.hbar_errors) std::cout << "note: " << e << "\n";
    for (const sclab::CheckSummary& s : rep.checks) {
        std::cout << "check " << s.name << ": " << s.status;
        if (!s.detail.empty()) std::cout << " (" << s.detail << ")";
        std::cout << "\n";
    }
    std::cout << rep.rows.size() << " report rows\n";
}

int run_and_write(const sclab::ScenarioConfig& cfg) {
    sclab::ScenarioReport rep = sclab::run_scenario(cfg);
    sclab::write_outputs(rep, cfg.out_dir, cfg.format);
    print_summaries(rep);
    std::cout << "wrote " << cfg.out_dir << "\n";
    return rep.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiclassical bound-state laboratory"};
    app.require_subcommand(1);

    std::string config_path, report_dir;
    Overrides ov;

    CLI::App* sweep = app.add_subcommand("sweep", "Run the full hbar sweep for a scenario");
    sweep->add_option("config", config_path, "Scenario config file")->required();
    add_overrides(sweep, ov);

    CLI::App* virial =
        app.add_subcommand("verify-virial", "Run the sweep with only the virial identity check");
    virial->add_option("config", config_path, "Scenario config file")->required();
    add_overrides(virial, ov);

    CLI::App* conditions = app.add_subcommand(
        "check-conditions", "Evaluate hypothesis constants and stability without eigensolves");
    conditions->add_option("config", config_path, "Scenario config file")->required();
    add_overrides(conditions, ov);

    CLI::App* separable =
        app.add_subcommand("separable", "Tensor-product balance tables and cross-validation");
    separable->add_option("config", config_path, "Scenario config file")->required();
    add_overrides(separable, ov);

    CLI::App* report =
        app.add_subcommand("report", "Re-emit reports from serialized pairs in a directory");
    report->add_option("dir", report_dir, "Output directory of a previous run")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) {
            return run_and_write(load_with_overrides(config_path, ov));
        }
        if (virial->parsed()) {
            sclab::ScenarioConfig cfg = load_with_overrides(config_path, ov);
            cfg.checks = sclab::CheckSet{};
            cfg.checks.virial = true;
            return run_and_write(cfg);
        }
        if (conditions->parsed()) {
            sclab::ScenarioConfig cfg = load_with_overrides(config_path, ov);
            sclab::ConditionsReport rep = sclab::check_conditions(cfg);
            std::filesystem::create_directories(cfg.out_dir);
            sclab::write_text(cfg.out_dir + "/conditions.json",
                              sclab::conditions_json(rep).dump(2) + "\n");
            std::cout << "stability: " << rep.stability.message << "\n";
            std::cout << "c0 " << sclab::format_double(rep.constants.c0) << ", c1 "
                      << sclab::format_double(rep.constants.c1) << ", c_pred "
                      << sclab::format_double(rep.constants.c_pred) << ", c0_dual "
                      << sclab::format_double(rep.c0_dual) << "\n";
            std::cout << (rep.constants.hypothesis_ok ? "hypothesis holds"
                                                      : rep.constants.note)
                      << "\n";
            std::cout << "wrote " << cfg.out_dir << "/conditions.json\n";
            return rep.exit_code();
        }
        if (separable->parsed()) {
            sclab::ScenarioConfig cfg = load_with_overrides(config_path, ov);
            if (!cfg.has_separable)
                throw sclab::config_error("config has no 'separable' section");
            cfg.checks = sclab::CheckSet{};
            cfg.checks.separable = true;
            cfg.hbars = {cfg.hbars.front()};
            sclab::PotentialModel model = sclab::build_potential(cfg);
            std::vector<sclab::HbarOutcome> outcomes;
            if (model.name == "separable_power") outcomes = sclab::solve_sweep(cfg, model);
            sclab::ScenarioReport rep =
                sclab::assemble_report(cfg, model, std::move(outcomes));
            sclab::write_outputs(rep, cfg.out_dir, cfg.format);
            print_summaries(rep);
            std::cout << "wrote " << cfg.out_dir << "\n";
            return rep.exit_code();
        }
        if (report->parsed()) {
            sclab::ScenarioReport rep = sclab::reemit_report(report_dir);
            sclab::write_text(report_dir + "/report.csv", sclab::report_csv(rep));
            print_summaries(rep);
            std::cout << "rewrote " << report_dir << "/report.csv\n";
            return rep.exit_code();
        }
    } catch (const sclab::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
