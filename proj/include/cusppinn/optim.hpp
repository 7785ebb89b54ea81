#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cusppinn/net.hpp"
#include "cusppinn/problem.hpp"

namespace cusppinn::optim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Levenberg-Marquardt damping schedule and stopping rules.
struct LMConfig {
    double mu0 = 1e-3;
    double mu_decrease = 1.0 / 3.0; // on accepted step
    double mu_increase = 2.0;       // on rejected step
    double mu_min = 1e-12;
    double mu_max = 1e10;
    int max_epochs = 3000;
    double loss_threshold = 1e-10;
    int max_rejections = 20; // consecutive rejections before stagnation
    uint64_t seed = 0;
};

struct AdamConfig {
    double lr = 1e-3;
    int epochs = 3000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double loss_threshold = 0.0;
    uint64_t seed = 0;
};

enum class Termination { Threshold, EpochCap, Stagnation, Divergence };
std::string termination_name(Termination t);

struct TrainReport {
    net::NetworkParams params;
    std::vector<double> loss_history; // entry 0 is the initial loss
    std::vector<double> mu_history;   // damping after each epoch (LM only)
    std::vector<int> accepted_flags;  // 1 when the epoch improved the loss
    int accepted = 0;
    int rejected = 0;
    int epochs = 0;
    Termination reason = Termination::EpochCap;
    double seconds = 0.0;
    double final_loss = 0.0;
};

/// Solves (J^T J + mu I) delta = -J^T r by Cholesky. Empty on factorization
/// failure, which callers treat as a rejected step.
std::optional<VectorXd> lm_step(const VectorXd& r, const MatrixXd& J, double mu);

/// Generic interfaces so the same loop trains PDE networks and supervised fits.
using AssembleFn = std::function<problem::ResidualSystem(const net::NetworkParams&)>;
using LossFn = std::function<double(const net::NetworkParams&)>;

TrainReport train_lm_core(const AssembleFn& assemble, const LossFn& loss_only,
                          const net::NetworkParams& theta0, const LMConfig& cfg);

TrainReport train_lm(const problem::AssemblyContext& ctx, const net::NetworkParams& theta0,
                     const LMConfig& cfg,
                     problem::ExecPolicy policy = problem::ExecPolicy::Parallel);

/// Full-batch Adam on loss = |r|^2, gradient 2 J^T r from the assembled system.
TrainReport train_adam_core(const AssembleFn& assemble, const net::NetworkParams& theta0,
                            const AdamConfig& cfg);

TrainReport train_adam(const problem::AssemblyContext& ctx, const net::NetworkParams& theta0,
                       const AdamConfig& cfg,
                       problem::ExecPolicy policy = problem::ExecPolicy::Parallel);

/// CSV: epoch, loss, mu, accepted.
void write_history_csv(const TrainReport& rep, const std::string& path);

} // namespace cusppinn::optim
