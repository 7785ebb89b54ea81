#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cusppinn/errors.hpp"
#include "cusppinn/runconfig.hpp"

using namespace cusppinn;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int trials = -1;
    std::string format;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required = true) {
    auto* opt = cmd->add_option("--config", f.config_path, "path to a JSON run config");
    if (config_required) opt->required();
    cmd->add_option("--out", f.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", f.seed, "base seed (overrides config)");
    cmd->add_option("--trials", f.trials, "trial count (overrides config)");
    cmd->add_option("--format", f.format, "output format: csv or json (overrides config)");
}

cli::RunConfig load_with_overrides(const CommonFlags& f) {
    cli::RunConfig cfg = cli::load_config(f.config_path);
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    if (f.seed >= 0) cfg.seed = static_cast<uint64_t>(f.seed);
    if (f.trials > 0) cfg.trials = f.trials;
    if (!f.format.empty()) {
        if (f.format != "csv" && f.format != "json")
            throw config_error("--format must be csv or json");
        cfg.formats = {f.format};
    }
    return cfg;
}

void apply_thread_env() {
#ifdef _OPENMP
    if (const char* t = std::getenv("CUSPPINN_THREADS")) {
        const int n = std::atoi(t);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mesh-free solver for elliptic interface problems with a "
                 "cusp-enforced level-set network input"};
    app.require_subcommand(1);

    CommonFlags run_f, sweep_f, compare_f, export_f;
    auto* run_cmd = app.add_subcommand("run", "train one configuration and report errors");
    add_common(run_cmd, run_f);
    auto* sweep_cmd =
        app.add_subcommand("sweep", "cartesian sweep over neurons N and grid size M0");
    add_common(sweep_cmd, sweep_f);
    auto* compare_cmd = app.add_subcommand(
        "compare", "matched-seed comparison of optimizers or augmented inputs");
    add_common(compare_cmd, compare_f);
    std::string compare_mode_flag;
    compare_cmd->add_option("--mode", compare_mode_flag,
                            "optimizers or augmentation (overrides config)");
    auto* list_cmd = app.add_subcommand("list-examples", "print the built-in problems");
    auto* export_cmd =
        app.add_subcommand("export-points", "write the collocation set of trial 0 as CSV");
    add_common(export_cmd, export_f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitConfigError;
    }

    apply_thread_env();
    try {
        if (run_cmd->parsed()) return cli::run_command(load_with_overrides(run_f));
        if (sweep_cmd->parsed()) return cli::sweep_command(load_with_overrides(sweep_f));
        if (compare_cmd->parsed()) {
            auto cfg = load_with_overrides(compare_f);
            if (!compare_mode_flag.empty()) {
                if (compare_mode_flag != "optimizers" && compare_mode_flag != "augmentation")
                    throw config_error("--mode must be 'optimizers' or 'augmentation'");
                cfg.compare_mode = compare_mode_flag;
            }
            return cli::compare_command(cfg);
        }
        if (list_cmd->parsed()) {
            cli::list_examples(std::cout);
            return cli::kExitOk;
        }
        if (export_cmd->parsed())
            return cli::export_points_command(load_with_overrides(export_f));
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitConfigError;
    } catch (const numerics_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return cli::kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return cli::kExitConfigError;
}
