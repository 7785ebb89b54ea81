#include "cusppinn/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cusppinn/errors.hpp"
#include "cusppinn/rng.hpp"

namespace cusppinn::bench {

std::vector<int> layer_sizes_for(const Arch& arch, int input_width) {
    if (arch.hidden_layers < 1 || arch.neurons < 1)
        throw config_error("architecture needs at least one hidden layer and neuron");
    std::vector<int> ls;
    ls.push_back(input_width);
    for (int l = 0; l < arch.hidden_layers; ++l) ls.push_back(arch.neurons);
    ls.push_back(1);
    return ls;
}

int param_count_for(const Arch& arch, int input_width) {
    const auto sizes = layer_sizes_for(arch, input_width);
    const int L = static_cast<int>(sizes.size()) - 2;
    int n = sizes[L];
    for (int l = 1; l <= L; ++l) n += (sizes[l - 1] + 1) * sizes[l];
    return n;
}

uint64_t trial_seed(uint64_t base_seed, int trial) {
    return derive_seed(base_seed, 1000 + static_cast<uint64_t>(trial));
}

uint64_t collocation_seed(uint64_t trial_seed_value) {
    return derive_seed(trial_seed_value, 10);
}

double ExactSolution::value(const VectorXd& x, int side) const {
    return eval(Dual2::seed(x), side).val;
}

VectorXd ExactSolution::gradient(const VectorXd& x, int side) const {
    return eval(Dual2::seed(x), side).grad;
}

MatrixXd ExactSolution::hessian(const VectorXd& x, int side) const {
    return eval(Dual2::seed(x), side).hess;
}

geometry::CollocationCounts counts_for(const ExampleSpec& spec, std::optional<int> m0,
                                       std::optional<geometry::CollocationCounts> explicit_counts) {
    if (explicit_counts) return *explicit_counts;
    if (m0) {
        if (!spec.counts_from_m0)
            throw config_error(spec.id + " does not define counts in terms of M0");
        if (*m0 < 1) throw config_error("M0 must be positive");
        return spec.counts_from_m0(*m0);
    }
    return spec.default_counts;
}

ErrorReport relative_errors(const SolutionEvaluator& u_n, const ExactSolution& exact,
                            const geometry::LevelSet& ls, const MatrixXd& test_points) {
    const int m = static_cast<int>(test_points.rows());
    const int d = static_cast<int>(test_points.cols());
    if (m < 1) throw config_error("relative_errors needs at least one test point");

    double max_err = 0.0, max_u = 0.0;
    double sum_err2 = 0.0, sum_u2 = 0.0;
    VectorXd max_gerr = VectorXd::Zero(d), max_g = VectorXd::Zero(d);

#ifdef _OPENMP
    const int nthreads = omp_get_max_threads();
#else
    const int nthreads = 1;
#endif
    std::vector<double> tmax_err(nthreads, 0.0), tmax_u(nthreads, 0.0);
    std::vector<double> tsum_err2(nthreads, 0.0), tsum_u2(nthreads, 0.0);
    std::vector<VectorXd> tmax_gerr(nthreads, VectorXd::Zero(d));
    std::vector<VectorXd> tmax_g(nthreads, VectorXd::Zero(d));

#pragma omp parallel for schedule(static) num_threads(nthreads)
    for (int i = 0; i < m; ++i) {
#ifdef _OPENMP
        const int t = omp_get_thread_num();
#else
        const int t = 0;
#endif
        const VectorXd x = test_points.row(i).transpose();
        const int side = ls.phi(x) > 0.0 ? 1 : -1;
        const Dual2 ex = exact.eval(Dual2::seed(x), side);
        const problem::Prediction pred = u_n(x);
        const double err = std::abs(pred.value - ex.val);
        tmax_err[t] = std::max(tmax_err[t], err);
        tmax_u[t] = std::max(tmax_u[t], std::abs(ex.val));
        tsum_err2[t] += err * err;
        tsum_u2[t] += ex.val * ex.val;
        for (int c = 0; c < d; ++c) {
            tmax_gerr[t](c) = std::max(tmax_gerr[t](c), std::abs(pred.grad(c) - ex.grad(c)));
            tmax_g[t](c) = std::max(tmax_g[t](c), std::abs(ex.grad(c)));
        }
    }
    for (int t = 0; t < nthreads; ++t) {
        max_err = std::max(max_err, tmax_err[t]);
        max_u = std::max(max_u, tmax_u[t]);
        sum_err2 += tsum_err2[t];
        sum_u2 += tsum_u2[t];
        max_gerr = max_gerr.cwiseMax(tmax_gerr[t]);
        max_g = max_g.cwiseMax(tmax_g[t]);
    }

    if (max_u == 0.0 || sum_u2 == 0.0)
        throw numerics_error("exact solution vanishes on the test set; relative errors undefined");
    const double gnorm = max_g.mean();
    if (gnorm == 0.0)
        throw numerics_error("exact gradient vanishes on the test set; relative errors undefined");

    ErrorReport rep;
    rep.m_test = m;
    rep.abs_linf = max_err;
    rep.rel_linf = max_err / max_u;
    rep.rel_l2 = std::sqrt(sum_err2 / sum_u2);
    rep.rel_grad_linf = max_gerr.mean() / gnorm;
    return rep;
}

namespace {

MatrixXd sample_test_points(const ExampleSpec& spec, int m_test, uint64_t seed) {
    geometry::CollocationSet tmp;
    geometry::sample_interior(*spec.prob.domain, *spec.prob.level_set, m_test, seed, tmp);
    return tmp.interior;
}

ErrorReport mean_errors(const std::vector<TrialResult>& trials) {
    ErrorReport mean;
    int n = 0;
    for (const auto& t : trials) {
        if (t.diverged) continue;
        mean.rel_linf += t.errors.rel_linf;
        mean.rel_l2 += t.errors.rel_l2;
        mean.rel_grad_linf += t.errors.rel_grad_linf;
        mean.abs_linf += t.errors.abs_linf;
        mean.final_loss += t.errors.final_loss;
        mean.m_test = t.errors.m_test;
        ++n;
    }
    if (n > 0) {
        mean.rel_linf /= n;
        mean.rel_l2 /= n;
        mean.rel_grad_linf /= n;
        mean.abs_linf /= n;
        mean.final_loss /= n;
    }
    return mean;
}

} // namespace

TrialsReport run_trials(const ExampleSpec& spec, const Arch& arch,
                        const geometry::CollocationCounts& counts,
                        const OptimizerChoice& opt, problem::Augmentation mode,
                        int n_trials, uint64_t base_seed) {
    if (n_trials < 1) throw config_error("need at least one trial");
    if (spec.discontinuous && mode != problem::Augmentation::PhiAbs)
        throw config_error("jump-lifted examples support only the phi_abs augmentation");

    TrialsReport rep;
    rep.trials.reserve(n_trials);
    const int D = problem::input_width(spec.dim, mode);
    const auto sizes = layer_sizes_for(arch, D);

    for (int trial = 0; trial < n_trials; ++trial) {
        const uint64_t tseed = trial_seed(base_seed, trial);
        const geometry::CollocationSet colloc = geometry::sample_collocation(
            *spec.prob.domain, *spec.prob.level_set, counts, collocation_seed(tseed));
        net::NetworkParams p0 = net::init_params(sizes, derive_seed(tseed, kSeedInit));

        TrialResult res;
        const problem::InterfaceProblem* train_prob = &spec.prob;
        problem::InterfaceProblem lifted;
        if (spec.discontinuous) {
            const JumpFitSpec jf = spec.jump_fit.value_or(JumpFitSpec{});
            geometry::CollocationSet fit_set;
            geometry::sample_interface(*spec.prob.level_set, jf.points,
                                       derive_seed(tseed, kSeedJumpFitPoints), fit_set);
            res.lift = jumplift::fit_jump_network(spec.prob.lambda, fit_set.interface_pts,
                                                  jf.neurons,
                                                  derive_seed(tseed, kSeedJumpFitInit),
                                                  jf.epochs);
            lifted = jumplift::lift_problem(spec.prob, *res.lift);
            train_prob = &lifted;
        }

        const problem::AssemblyContext ctx(colloc, *train_prob, mode);
        if (opt.kind == OptimizerChoice::Kind::LM) {
            res.train = optim::train_lm(ctx, p0, opt.lm);
        } else {
            res.train = optim::train_adam(ctx, p0, opt.adam);
        }
        res.diverged = res.train.reason == optim::Termination::Divergence;

        if (!res.diverged) {
            const int m_test = 100 * colloc.m_total();
            const MatrixXd test_pts =
                sample_test_points(spec, m_test, derive_seed(tseed, kSeedTest));
            const auto& ls = *spec.prob.level_set;
            const net::NetworkParams& trained = res.train.params;
            SolutionEvaluator eval;
            if (spec.discontinuous) {
                const jumplift::JumpLift& lift = *res.lift;
                eval = [&lift, &trained, &ls](const VectorXd& x) {
                    return jumplift::compose_prediction(lift, trained, ls, x);
                };
            } else {
                eval = [&trained, &ls, mode](const VectorXd& x) {
                    return problem::predict(trained, ls, x, mode);
                };
            }
            res.errors = relative_errors(eval, spec.exact, ls, test_pts);
            res.errors.final_loss = res.train.final_loss;
        }
        rep.trials.push_back(std::move(res));
    }

    for (const auto& t : rep.trials)
        if (t.diverged) ++rep.n_divergent;
    rep.mean = mean_errors(rep.trials);
    return rep;
}

std::vector<std::pair<problem::Augmentation, TrialsReport>> compare_augmentation(
    const ExampleSpec& spec, const geometry::CollocationCounts& counts,
    const OptimizerChoice& opt,
    const std::vector<std::pair<problem::Augmentation, Arch>>& modes, int n_trials,
    uint64_t base_seed) {
    std::vector<std::pair<problem::Augmentation, TrialsReport>> out;
    out.reserve(modes.size());
    for (const auto& [mode, arch] : modes)
        out.emplace_back(mode, run_trials(spec, arch, counts, opt, mode, n_trials, base_seed));
    return out;
}

ManufacturedCheck manufactured_residuals(const ExampleSpec& spec, int points_per_block,
                                         uint64_t seed) {
    const auto& prob = spec.prob;
    const auto& ls = *prob.level_set;
    ManufacturedCheck check;

    geometry::CollocationSet pts;
    geometry::sample_interior(*prob.domain, ls, points_per_block, derive_seed(seed, 1), pts);
    for (int i = 0; i < points_per_block; ++i) {
        const VectorXd x = pts.interior.row(i).transpose();
        const int side = pts.interior_sign(i);
        const Dual2 u = spec.exact.eval(Dual2::seed(x), side);
        const bool minus = side < 0;
        const double beta = minus ? prob.beta_minus(x) : prob.beta_plus(x);
        const VectorXd gb = minus ? prob.grad_beta_minus(x) : prob.grad_beta_plus(x);
        const double f = minus ? prob.f_minus(x) : prob.f_plus(x);
        const double res = beta * u.hess.trace() + gb.dot(u.grad) -
                           prob.alpha(x) * u.val - f;
        check.interior = std::max(check.interior, std::abs(res));
    }

    geometry::CollocationSet surf;
    geometry::sample_interface(ls, points_per_block, derive_seed(seed, 2), surf);
    for (int i = 0; i < points_per_block; ++i) {
        const VectorXd x = surf.interface_pts.row(i).transpose();
        const VectorXd n = surf.interface_normals.row(i).transpose();
        const Dual2 up = spec.exact.eval(Dual2::seed(x), +1);
        const Dual2 um = spec.exact.eval(Dual2::seed(x), -1);
        const double flux =
            prob.beta_plus(x) * up.grad.dot(n) - prob.beta_minus(x) * um.grad.dot(n);
        check.interface = std::max(check.interface, std::abs(flux - prob.rho(x)));
        const double jump = up.val - um.val;
        const double lam = prob.has_lambda() ? prob.lambda(x) : 0.0;
        check.interface = std::max(check.interface, std::abs(jump - lam));
    }

    geometry::CollocationSet bnd;
    // boundary counts must respect the face structure of box domains
    int m_b = points_per_block;
    if (prob.domain->kind() == "box") m_b += (2 * spec.dim - m_b % (2 * spec.dim)) % (2 * spec.dim);
    if (prob.domain->kind() == "interval") m_b = 2;
    geometry::sample_boundary(*prob.domain, m_b, derive_seed(seed, 3), bnd);
    for (int i = 0; i < bnd.m_boundary(); ++i) {
        const VectorXd x = bnd.boundary_pts.row(i).transpose();
        const VectorXd n = bnd.boundary_normals.row(i).transpose();
        const int side = ls.phi(x) > 0.0 ? 1 : -1;
        const Dual2 u = spec.exact.eval(Dual2::seed(x), side);
        const double g = prob.g(x, bnd.boundary_tags[i], n);
        const double res = bnd.boundary_tags[i] == geometry::BcTag::Dirichlet
                               ? u.val - g
                               : u.grad.dot(n) - g;
        check.boundary = std::max(check.boundary, std::abs(res));
    }
    return check;
}

void write_errors_csv(const TrialsReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open '" + path + "' for writing");
    out << "trial,rel_linf,rel_l2,rel_grad_linf,abs_linf,loss,epochs,seconds,termination,"
           "diverged\n";
    out.precision(17);
    for (size_t i = 0; i < rep.trials.size(); ++i) {
        const auto& t = rep.trials[i];
        out << i << "," << t.errors.rel_linf << "," << t.errors.rel_l2 << ","
            << t.errors.rel_grad_linf << "," << t.errors.abs_linf << ","
            << t.train.final_loss << "," << t.train.epochs << "," << t.train.seconds << ","
            << optim::termination_name(t.train.reason) << "," << (t.diverged ? 1 : 0)
            << "\n";
    }
    const auto& m = rep.mean;
    out << "mean," << m.rel_linf << "," << m.rel_l2 << "," << m.rel_grad_linf << ","
        << m.abs_linf << "," << m.final_loss << ",,,,\n";
}

} // namespace cusppinn::bench
