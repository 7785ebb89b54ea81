#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cusppinn/bench.hpp"

namespace cusppinn::cli {

/// One experiment description; the file form is JSON with these fields as
/// keys. Unset optionals fall back to the example's built-in defaults.
struct RunConfig {
    std::string example = "ex1";
    std::optional<bench::Arch> arch;
    std::optional<int> m0;
    std::optional<geometry::CollocationCounts> counts;
    bench::ExampleKnobs knobs;

    std::string optimizer = "lm"; // lm | adam
    optim::LMConfig lm;
    optim::AdamConfig adam;
    bool loss_threshold_set = false; // false: use the example's default

    std::string augmentation = "phi_abs";
    int trials = 5;
    uint64_t seed = 0;
    std::string out_dir = "results";
    std::vector<std::string> formats = {"csv", "json"};

    // sweep / compare sections
    std::vector<int> sweep_n;
    std::vector<int> sweep_m0;
    std::string compare_mode;         // "optimizers" | "augmentation"
    std::optional<int> none_neurons;  // width of the unaugmented comparison run

    bool operator==(const RunConfig& other) const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

/// Resolved pieces ready to run: example spec, architecture, counts and the
/// optimizer choice with the example's loss threshold filled in.
struct ResolvedRun {
    bench::ExampleSpec spec;
    bench::Arch arch;
    geometry::CollocationCounts counts;
    bench::OptimizerChoice opt;
    problem::Augmentation mode;
};

ResolvedRun resolve(const RunConfig& cfg);

// exit-code taxonomy of the command-line tool
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDivergence = 3;

int run_command(const RunConfig& cfg);
int sweep_command(const RunConfig& cfg);
int compare_command(const RunConfig& cfg);
int export_points_command(const RunConfig& cfg);
void list_examples(std::ostream& os);

} // namespace cusppinn::cli
