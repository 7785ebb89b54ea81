#include "cusppinn/optim.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cusppinn/errors.hpp"

namespace cusppinn::optim {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// J^T J (lower triangle) and J^T r. Blocked over row ranges so threads can
/// each reduce a partial product; partials are summed in block order, which
/// keeps the result deterministic for a fixed thread count.
struct NormalEquations {
    MatrixXd jtj; // lower triangle valid
    VectorXd jtr;
};

NormalEquations form_normal_equations(const MatrixXd& J, const VectorXd& r) {
    const Eigen::Index m = J.rows(), n = J.cols();
    NormalEquations ne;
    ne.jtj = MatrixXd::Zero(n, n);
    ne.jtr = VectorXd::Zero(n);

#ifdef _OPENMP
    const int nthreads = omp_get_max_threads();
#else
    const int nthreads = 1;
#endif
    const Eigen::Index min_rows_per_block = 64;
    const int nblocks = static_cast<int>(
        std::max<Eigen::Index>(1, std::min<Eigen::Index>(nthreads, m / min_rows_per_block)));
    if (nblocks == 1) {
        ne.jtj.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
        ne.jtr.noalias() = J.transpose() * r;
        return ne;
    }

    std::vector<MatrixXd> jtj_part(nblocks, MatrixXd::Zero(n, n));
    std::vector<VectorXd> jtr_part(nblocks, VectorXd::Zero(n));
    const Eigen::Index chunk = (m + nblocks - 1) / nblocks;
#pragma omp parallel for schedule(static) num_threads(nblocks)
    for (int b = 0; b < nblocks; ++b) {
        const Eigen::Index lo = b * chunk;
        const Eigen::Index len = std::min(chunk, m - lo);
        if (len <= 0) continue;
        const auto Jb = J.middleRows(lo, len);
        jtj_part[b].selfadjointView<Eigen::Lower>().rankUpdate(Jb.transpose());
        jtr_part[b].noalias() = Jb.transpose() * r.segment(lo, len);
    }
    for (int b = 0; b < nblocks; ++b) {
        ne.jtj.triangularView<Eigen::Lower>() += jtj_part[b];
        ne.jtr += jtr_part[b];
    }
    return ne;
}

std::optional<VectorXd> solve_damped(const NormalEquations& ne, double mu) {
    MatrixXd A = ne.jtj;
    A.diagonal().array() += mu;
    Eigen::LLT<MatrixXd, Eigen::Lower> llt(A);
    if (llt.info() != Eigen::Success) return std::nullopt;
    VectorXd delta = llt.solve(-ne.jtr);
    if (!delta.allFinite()) return std::nullopt;
    return delta;
}

} // namespace

std::string termination_name(Termination t) {
    switch (t) {
        case Termination::Threshold: return "threshold";
        case Termination::EpochCap: return "epoch-cap";
        case Termination::Stagnation: return "stagnation";
        case Termination::Divergence: return "divergence";
    }
    return "epoch-cap";
}

std::optional<VectorXd> lm_step(const VectorXd& r, const MatrixXd& J, double mu) {
    if (!(mu >= 0.0)) throw config_error("lm_step needs mu >= 0");
    if (!J.allFinite()) return std::nullopt;
    return solve_damped(form_normal_equations(J, r), mu);
}

TrainReport train_lm_core(const AssembleFn& assemble, const LossFn& loss_only,
                          const net::NetworkParams& theta0, const LMConfig& cfg) {
    if (!(cfg.mu_decrease > 0.0 && cfg.mu_decrease < 1.0 && cfg.mu_increase > 1.0))
        throw config_error("LM damping factors must satisfy 0 < decrease < 1 < increase");
    if (!(cfg.mu_min <= cfg.mu0 && cfg.mu0 <= cfg.mu_max))
        throw config_error("LM damping bounds must be ordered around mu0");

    const auto t0 = Clock::now();
    TrainReport rep;
    rep.params = theta0;
    net::NetworkParams& params = rep.params;
    VectorXd theta = net::flatten(params);

    problem::ResidualSystem sys = assemble(params);
    double loss = sys.loss;
    if (!std::isfinite(loss)) {
        rep.reason = Termination::Divergence;
        rep.final_loss = loss;
        rep.loss_history.push_back(loss);
        rep.seconds = elapsed_seconds(t0);
        return rep;
    }
    rep.loss_history.push_back(loss);

    double mu = cfg.mu0;
    rep.reason = Termination::EpochCap;
    if (loss <= cfg.loss_threshold) rep.reason = Termination::Threshold;

    net::NetworkParams trial = params;
    for (int epoch = 1; epoch <= cfg.max_epochs && rep.reason == Termination::EpochCap;
         ++epoch) {
        const NormalEquations ne = form_normal_equations(sys.J, sys.r);
        int rejections = 0;
        bool accepted_this_epoch = false;
        while (true) {
            const auto delta = solve_damped(ne, mu);
            bool ok = false;
            double trial_loss = std::numeric_limits<double>::infinity();
            if (delta) {
                net::set_flat(trial, theta + *delta);
                trial_loss = loss_only(trial);
                ok = std::isfinite(trial_loss) && trial_loss < loss;
            }
            if (ok) {
                theta += *delta;
                net::set_flat(params, theta);
                mu = std::max(mu * cfg.mu_decrease, cfg.mu_min);
                rep.accepted += 1;
                accepted_this_epoch = true;
                sys = assemble(params);
                loss = sys.loss; // identical arithmetic to the trial evaluation
                break;
            }
            mu = std::min(mu * cfg.mu_increase, cfg.mu_max);
            rep.rejected += 1;
            if (++rejections >= cfg.max_rejections) {
                rep.reason = Termination::Stagnation;
                break;
            }
        }
        rep.epochs = epoch;
        rep.loss_history.push_back(loss);
        rep.mu_history.push_back(mu);
        rep.accepted_flags.push_back(accepted_this_epoch ? 1 : 0);
        if (loss <= cfg.loss_threshold) rep.reason = Termination::Threshold;
    }

    rep.final_loss = loss;
    rep.seconds = elapsed_seconds(t0);
    return rep;
}

TrainReport train_lm(const problem::AssemblyContext& ctx, const net::NetworkParams& theta0,
                     const LMConfig& cfg, problem::ExecPolicy policy) {
    return train_lm_core(
        [&](const net::NetworkParams& p) { return ctx.assemble(p, policy); },
        [&](const net::NetworkParams& p) { return ctx.loss_only(p, policy); }, theta0, cfg);
}

TrainReport train_adam_core(const AssembleFn& assemble, const net::NetworkParams& theta0,
                            const AdamConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw config_error("Adam learning rate must be positive");
    const auto t0 = Clock::now();
    TrainReport rep;
    rep.params = theta0;
    net::NetworkParams& params = rep.params;
    VectorXd theta = net::flatten(params);
    VectorXd m = VectorXd::Zero(theta.size());
    VectorXd v = VectorXd::Zero(theta.size());

    rep.reason = Termination::EpochCap;
    bool diverged = false;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const problem::ResidualSystem sys = assemble(params);
        rep.loss_history.push_back(sys.loss); // loss after epoch-1 updates
        if (!std::isfinite(sys.loss)) {
            rep.reason = Termination::Divergence;
            rep.epochs = epoch - 1;
            diverged = true;
            break;
        }
        if (cfg.loss_threshold > 0.0 && sys.loss <= cfg.loss_threshold) {
            rep.reason = Termination::Threshold;
            rep.epochs = epoch - 1;
            break;
        }
        const VectorXd grad = 2.0 * (sys.J.transpose() * sys.r);
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
        const double bc1 = 1.0 - std::pow(cfg.beta1, epoch);
        const double bc2 = 1.0 - std::pow(cfg.beta2, epoch);
        theta -= cfg.lr * ((m / bc1).array() / ((v / bc2).array().sqrt() + cfg.eps)).matrix();
        net::set_flat(params, theta);
        rep.epochs = epoch;
        rep.accepted_flags.push_back(1);
    }
    if (!diverged && rep.reason == Termination::EpochCap) {
        // loss at the final parameters closes the history
        const problem::ResidualSystem sys = assemble(params);
        rep.loss_history.push_back(sys.loss);
        if (!std::isfinite(sys.loss)) rep.reason = Termination::Divergence;
    }
    rep.final_loss = rep.loss_history.empty() ? 0.0 : rep.loss_history.back();
    rep.seconds = elapsed_seconds(t0);
    return rep;
}

TrainReport train_adam(const problem::AssemblyContext& ctx, const net::NetworkParams& theta0,
                       const AdamConfig& cfg, problem::ExecPolicy policy) {
    return train_adam_core(
        [&](const net::NetworkParams& p) { return ctx.assemble(p, policy); }, theta0, cfg);
}

void write_history_csv(const TrainReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open '" + path + "' for writing");
    out << "epoch,loss,mu,accepted\n";
    out.precision(17);
    for (size_t e = 0; e < rep.loss_history.size(); ++e) {
        out << e << "," << rep.loss_history[e] << ",";
        if (e >= 1 && e - 1 < rep.mu_history.size()) out << rep.mu_history[e - 1];
        out << ",";
        if (e >= 1 && e - 1 < rep.accepted_flags.size()) out << rep.accepted_flags[e - 1];
        out << "\n";
    }
}

} // namespace cusppinn::optim
