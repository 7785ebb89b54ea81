#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cusppinn/dual2.hpp"
#include "cusppinn/geometry.hpp"
#include "cusppinn/jumplift.hpp"
#include "cusppinn/optim.hpp"
#include "cusppinn/problem.hpp"

namespace cusppinn::bench {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Hidden-layer count and width; every hidden layer has the same width.
struct Arch {
    int hidden_layers = 1;
    int neurons = 20;
    bool operator==(const Arch&) const = default;
};

std::vector<int> layer_sizes_for(const Arch& arch, int input_width);
int param_count_for(const Arch& arch, int input_width);

/// Seed derivation used by the trial runner, exposed so collocation sets can
/// be reproduced outside of training (point export, post-hoc probes).
uint64_t trial_seed(uint64_t base_seed, int trial);
uint64_t collocation_seed(uint64_t trial_seed_value);

/// Two-sided closed-form solution evaluated through second-order duals, so
/// gradient and Hessian are exact derivatives of the embedded formula.
struct ExactSolution {
    std::function<Dual2(const std::vector<Dual2>&, int side)> eval;

    double value(const VectorXd& x, int side) const;
    VectorXd gradient(const VectorXd& x, int side) const;
    MatrixXd hessian(const VectorXd& x, int side) const;
};

struct JumpFitSpec {
    int neurons = 100;
    int points = 1000;
    int epochs = 1000;
};

/// Tuning knobs exposed by the built-in problems; every field has a built-in
/// default, so an empty knob set reproduces the reference setup.
struct ExampleKnobs {
    std::optional<double> eta;     // coefficient contrast beta-/beta+
    std::optional<double> gamma;   // outer-solution amplitude (2-D piecewise case)
    std::optional<double> alpha;   // reaction coefficient
    std::optional<double> b;       // outer coefficient of the 3-D variable case
    std::optional<double> x_gamma; // interface location of the 1-D case
    std::optional<bool> mixed_bc;  // Dirichlet x-faces + Neumann y-faces (2-D box)
};

struct ExampleSpec {
    std::string id;
    std::string title;
    int dim = 1;
    problem::InterfaceProblem prob;
    ExactSolution exact;
    geometry::CollocationCounts default_counts;
    std::optional<int> default_m0;
    std::function<geometry::CollocationCounts(int)> counts_from_m0;
    Arch default_arch;
    double eps_theta = 1e-10;
    bool discontinuous = false;
    std::optional<JumpFitSpec> jump_fit;
    std::vector<Arch> table_archs;
};

/// Built-in problem specifications ex1..ex7 with hand-derived sources.
ExampleSpec make_example(const std::string& id, const ExampleKnobs& knobs = {});
std::vector<std::string> example_ids();

geometry::CollocationCounts counts_for(const ExampleSpec& spec, std::optional<int> m0,
                                       std::optional<geometry::CollocationCounts> explicit_counts);

struct ErrorReport {
    double rel_linf = 0.0;
    double rel_l2 = 0.0;
    double rel_grad_linf = 0.0; // per-component Linf norms averaged over d
    double abs_linf = 0.0;
    int m_test = 0;
    double final_loss = 0.0;
};

using SolutionEvaluator = std::function<problem::Prediction(const VectorXd&)>;

/// Relative Linf and L2 errors of the evaluator against the exact solution
/// over the given test points, normalizers computed over the same points.
ErrorReport relative_errors(const SolutionEvaluator& u_n, const ExactSolution& exact,
                            const geometry::LevelSet& ls, const MatrixXd& test_points);

struct OptimizerChoice {
    enum class Kind { LM, Adam };
    Kind kind = Kind::LM;
    optim::LMConfig lm;
    optim::AdamConfig adam;
};

struct TrialResult {
    ErrorReport errors;
    optim::TrainReport train;
    std::optional<jumplift::JumpLift> lift; // present for discontinuous solutions
    bool diverged = false;
};

struct TrialsReport {
    std::vector<TrialResult> trials;
    ErrorReport mean; // arithmetic mean over non-divergent trials
    int n_divergent = 0;
};

/// Runs n independent trials (fresh collocation, initialization and test set
/// per trial, all derived from base_seed) and averages the error metrics.
/// Test sets use 100x the training point count, sampled like interior points.
TrialsReport run_trials(const ExampleSpec& spec, const Arch& arch,
                        const geometry::CollocationCounts& counts,
                        const OptimizerChoice& opt, problem::Augmentation mode,
                        int n_trials, uint64_t base_seed);

/// Matched-seed comparison across augmentation modes: identical collocation
/// sets and, where the architecture agrees, identical initializations.
std::vector<std::pair<problem::Augmentation, TrialsReport>> compare_augmentation(
    const ExampleSpec& spec, const geometry::CollocationCounts& counts,
    const OptimizerChoice& opt,
    const std::vector<std::pair<problem::Augmentation, Arch>>& modes, int n_trials,
    uint64_t base_seed);

/// Largest residual magnitude over sampled points when the exact solution is
/// substituted into the interior, interface and boundary conditions; the
/// primary oracle validating each hand-derived f, rho, g (and lambda).
struct ManufacturedCheck {
    double interior = 0.0;
    double interface = 0.0;
    double boundary = 0.0;
    double max() const { return std::max({interior, interface, boundary}); }
};
ManufacturedCheck manufactured_residuals(const ExampleSpec& spec, int points_per_block,
                                         uint64_t seed);

void write_errors_csv(const TrialsReport& rep, const std::string& path);

} // namespace cusppinn::bench
