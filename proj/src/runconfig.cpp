#include "cusppinn/runconfig.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "cusppinn/errors.hpp"
#include "cusppinn/rng.hpp"

namespace cusppinn::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw config_error("config field '" + field + "': " + why);
}

template <class T>
T get_or(const json& j, const std::string& key, T def) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad_field(key, "has the wrong type");
    }
}

void check_positive(const std::string& field, double v) {
    if (!(v > 0.0)) bad_field(field, "must be positive");
}

json knobs_to_json(const bench::ExampleKnobs& k) {
    json j = json::object();
    if (k.eta) j["eta"] = *k.eta;
    if (k.gamma) j["gamma"] = *k.gamma;
    if (k.alpha) j["alpha"] = *k.alpha;
    if (k.b) j["b"] = *k.b;
    if (k.x_gamma) j["x_gamma"] = *k.x_gamma;
    if (k.mixed_bc) j["mixed_bc"] = *k.mixed_bc;
    return j;
}

bench::ExampleKnobs knobs_from_json(const json& j) {
    bench::ExampleKnobs k;
    if (j.contains("eta")) k.eta = j.at("eta").get<double>();
    if (j.contains("gamma")) k.gamma = j.at("gamma").get<double>();
    if (j.contains("alpha")) k.alpha = j.at("alpha").get<double>();
    if (j.contains("b")) k.b = j.at("b").get<double>();
    if (j.contains("x_gamma")) k.x_gamma = j.at("x_gamma").get<double>();
    if (j.contains("mixed_bc")) k.mixed_bc = j.at("mixed_bc").get<bool>();
    return k;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["example"] = c.example;
    if (c.arch)
        j["arch"] = {{"hidden_layers", c.arch->hidden_layers}, {"neurons", c.arch->neurons}};
    if (c.m0) j["counts"]["M0"] = *c.m0;
    if (c.counts) {
        j["counts"]["interior"] = c.counts->interior;
        j["counts"]["interface"] = c.counts->interface;
        j["counts"]["boundary"] = c.counts->boundary;
    }
    const json kn = knobs_to_json(c.knobs);
    if (!kn.empty()) j["knobs"] = kn;
    json opt;
    opt["name"] = c.optimizer;
    opt["mu0"] = c.lm.mu0;
    opt["mu_decrease"] = c.lm.mu_decrease;
    opt["mu_increase"] = c.lm.mu_increase;
    opt["mu_min"] = c.lm.mu_min;
    opt["mu_max"] = c.lm.mu_max;
    opt["max_epochs"] = c.lm.max_epochs;
    opt["max_rejections"] = c.lm.max_rejections;
    if (c.loss_threshold_set) opt["loss_threshold"] = c.lm.loss_threshold;
    opt["lr"] = c.adam.lr;
    opt["epochs"] = c.adam.epochs;
    j["optimizer"] = opt;
    j["augmentation"] = c.augmentation;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["out"] = c.out_dir;
    j["formats"] = c.formats;
    if (!c.sweep_n.empty() || !c.sweep_m0.empty()) {
        if (!c.sweep_n.empty()) j["sweep"]["N"] = c.sweep_n;
        if (!c.sweep_m0.empty()) j["sweep"]["M0"] = c.sweep_m0;
    }
    if (!c.compare_mode.empty()) {
        j["compare"]["mode"] = c.compare_mode;
        if (c.none_neurons) j["compare"]["none_neurons"] = *c.none_neurons;
    }
    return j;
}

} // namespace

bool RunConfig::operator==(const RunConfig& other) const {
    return config_to_json(*this) == config_to_json(other);
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    if (!j.contains("example")) bad_field("example", "is required");
    c.example = j.at("example").get<std::string>();

    if (j.contains("arch")) {
        const auto& a = j.at("arch");
        bench::Arch arch;
        arch.hidden_layers = get_or<int>(a, "hidden_layers", 1);
        arch.neurons = get_or<int>(a, "neurons", 20);
        if (arch.hidden_layers < 1) bad_field("arch.hidden_layers", "must be >= 1");
        if (arch.neurons < 1) bad_field("arch.neurons", "must be >= 1");
        c.arch = arch;
    }
    if (j.contains("counts")) {
        const auto& cj = j.at("counts");
        if (cj.contains("M0")) {
            const int m0 = cj.at("M0").get<int>();
            if (m0 < 1) bad_field("counts.M0", "must be >= 1");
            c.m0 = m0;
        }
        if (cj.contains("interior") || cj.contains("interface") || cj.contains("boundary")) {
            geometry::CollocationCounts cc;
            cc.interior = get_or<int>(cj, "interior", 0);
            cc.interface = get_or<int>(cj, "interface", 0);
            cc.boundary = get_or<int>(cj, "boundary", 0);
            if (cc.interior < 1) bad_field("counts.interior", "must be >= 1");
            if (cc.interface < 1) bad_field("counts.interface", "must be >= 1");
            if (cc.boundary < 1) bad_field("counts.boundary", "must be >= 1");
            c.counts = cc;
        }
    }
    if (j.contains("knobs")) c.knobs = knobs_from_json(j.at("knobs"));

    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        c.optimizer = get_or<std::string>(o, "name", "lm");
        if (c.optimizer != "lm" && c.optimizer != "adam")
            bad_field("optimizer.name", "must be 'lm' or 'adam'");
        c.lm.mu0 = get_or<double>(o, "mu0", c.lm.mu0);
        check_positive("optimizer.mu0", c.lm.mu0);
        c.lm.mu_decrease = get_or<double>(o, "mu_decrease", c.lm.mu_decrease);
        c.lm.mu_increase = get_or<double>(o, "mu_increase", c.lm.mu_increase);
        if (!(c.lm.mu_decrease > 0.0 && c.lm.mu_decrease < 1.0))
            bad_field("optimizer.mu_decrease", "must lie in (0,1)");
        if (!(c.lm.mu_increase > 1.0)) bad_field("optimizer.mu_increase", "must exceed 1");
        c.lm.mu_min = get_or<double>(o, "mu_min", c.lm.mu_min);
        c.lm.mu_max = get_or<double>(o, "mu_max", c.lm.mu_max);
        if (!(c.lm.mu_min <= c.lm.mu_max)) bad_field("optimizer.mu_min", "exceeds mu_max");
        c.lm.max_epochs = get_or<int>(o, "max_epochs", c.lm.max_epochs);
        if (c.lm.max_epochs < 1) bad_field("optimizer.max_epochs", "must be >= 1");
        c.lm.max_rejections = get_or<int>(o, "max_rejections", c.lm.max_rejections);
        if (c.lm.max_rejections < 1) bad_field("optimizer.max_rejections", "must be >= 1");
        if (o.contains("loss_threshold")) {
            c.lm.loss_threshold = o.at("loss_threshold").get<double>();
            c.loss_threshold_set = true;
        }
        c.adam.lr = get_or<double>(o, "lr", c.adam.lr);
        check_positive("optimizer.lr", c.adam.lr);
        c.adam.epochs = get_or<int>(o, "epochs", c.adam.epochs);
        if (c.adam.epochs < 1) bad_field("optimizer.epochs", "must be >= 1");
    }

    c.augmentation = get_or<std::string>(j, "augmentation", c.augmentation);
    problem::augmentation_from_name(c.augmentation); // validates
    c.trials = get_or<int>(j, "trials", c.trials);
    if (c.trials < 1) bad_field("trials", "must be >= 1");
    c.seed = get_or<uint64_t>(j, "seed", c.seed);
    c.out_dir = get_or<std::string>(j, "out", c.out_dir);
    c.formats = get_or<std::vector<std::string>>(j, "formats", c.formats);
    for (const auto& f : c.formats)
        if (f != "csv" && f != "json") bad_field("formats", "entries must be 'csv' or 'json'");

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        c.sweep_n = get_or<std::vector<int>>(s, "N", {});
        c.sweep_m0 = get_or<std::vector<int>>(s, "M0", {});
    }
    if (j.contains("compare")) {
        const auto& cm = j.at("compare");
        c.compare_mode = get_or<std::string>(cm, "mode", "");
        if (c.compare_mode != "optimizers" && c.compare_mode != "augmentation")
            bad_field("compare.mode", "must be 'optimizers' or 'augmentation'");
        if (cm.contains("none_neurons")) c.none_neurons = cm.at("none_neurons").get<int>();
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

std::string serialize_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2); }

ResolvedRun resolve(const RunConfig& cfg) {
    ResolvedRun r{bench::make_example(cfg.example, cfg.knobs), {}, {}, {}, {}};
    r.arch = cfg.arch.value_or(r.spec.default_arch);
    r.counts = bench::counts_for(r.spec, cfg.m0, cfg.counts);
    r.opt.kind = cfg.optimizer == "adam" ? bench::OptimizerChoice::Kind::Adam
                                         : bench::OptimizerChoice::Kind::LM;
    r.opt.lm = cfg.lm;
    if (!cfg.loss_threshold_set) r.opt.lm.loss_threshold = r.spec.eps_theta;
    r.opt.adam = cfg.adam;
    r.mode = problem::augmentation_from_name(cfg.augmentation);
    return r;
}

namespace {

namespace fs = std::filesystem;

json error_report_to_json(const bench::ErrorReport& e) {
    return {{"rel_linf", e.rel_linf},
            {"rel_l2", e.rel_l2},
            {"rel_grad_linf", e.rel_grad_linf},
            {"abs_linf", e.abs_linf},
            {"m_test", e.m_test},
            {"loss", e.final_loss}};
}

json trials_to_json(const bench::TrialsReport& rep) {
    json out;
    out["n_divergent"] = rep.n_divergent;
    out["mean"] = error_report_to_json(rep.mean);
    out["trials"] = json::array();
    for (const auto& t : rep.trials) {
        json tj = error_report_to_json(t.errors);
        tj["epochs"] = t.train.epochs;
        tj["seconds"] = t.train.seconds;
        tj["termination"] = optim::termination_name(t.train.reason);
        tj["diverged"] = t.diverged;
        if (t.lift) tj["jump_fit_loss"] = t.lift->fit_loss;
        out["trials"].push_back(tj);
    }
    return out;
}

void write_summary(const json& summary, const fs::path& path) {
    std::ofstream out(path);
    out << summary.dump(2) << "\n";
}

void write_trial_histories(const bench::TrialsReport& rep, const fs::path& dir,
                           const std::string& prefix) {
    for (size_t t = 0; t < rep.trials.size(); ++t)
        optim::write_history_csv(rep.trials[t].train,
                                 (dir / (prefix + "loss_history_trial" + std::to_string(t) +
                                         ".csv")).string());
}

bool wants(const RunConfig& cfg, const std::string& fmt) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), fmt) != cfg.formats.end();
}

int divergence_status(const bench::TrialsReport& rep) {
    return rep.n_divergent > 0 ? kExitDivergence : kExitOk;
}

} // namespace

int run_command(const RunConfig& cfg) {
    const ResolvedRun r = resolve(cfg);
    const auto rep = bench::run_trials(r.spec, r.arch, r.counts, r.opt, r.mode, cfg.trials,
                                       cfg.seed);
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    if (wants(cfg, "csv")) {
        bench::write_errors_csv(rep, (dir / "errors.csv").string());
        write_trial_histories(rep, dir, "");
    }
    if (wants(cfg, "json")) {
        json summary;
        summary["schema_version"] = 1;
        summary["example"] = cfg.example;
        summary["config"] = json::parse(serialize_config(cfg));
        summary.update(trials_to_json(rep));
        write_summary(summary, dir / "summary.json");
    }
    std::cout << "example " << cfg.example << ": mean rel_linf " << rep.mean.rel_linf
              << ", mean rel_l2 " << rep.mean.rel_l2 << ", mean loss "
              << rep.mean.final_loss << " over " << cfg.trials << " trials";
    if (rep.n_divergent > 0) std::cout << " (" << rep.n_divergent << " divergent)";
    std::cout << "\n";
    if (rep.n_divergent > 0) {
        std::cerr << "error: " << rep.n_divergent << " trial(s) diverged\n";
        return kExitDivergence;
    }
    return kExitOk;
}

int sweep_command(const RunConfig& cfg) {
    if (cfg.sweep_n.empty() && cfg.sweep_m0.empty())
        throw config_error("sweep requires a non-empty grid under 'sweep'");
    const ResolvedRun base = resolve(cfg);
    std::vector<int> ns = cfg.sweep_n;
    if (ns.empty()) ns = {base.arch.neurons};
    std::vector<std::optional<int>> m0s;
    if (cfg.sweep_m0.empty())
        m0s.push_back(cfg.m0);
    else
        for (int m : cfg.sweep_m0) m0s.emplace_back(m);

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    std::ofstream table(dir / "table.csv");
    table << "M0,N,n_theta,rel_linf,rel_l2,rel_grad_linf,loss,n_divergent\n";
    table.precision(17);
    json cells = json::array();
    int status = kExitOk;
    for (const auto& m0 : m0s) {
        for (int n : ns) {
            bench::Arch arch{base.arch.hidden_layers, n};
            const auto counts = bench::counts_for(base.spec, m0, cfg.counts);
            const auto rep = bench::run_trials(base.spec, arch, counts, base.opt, base.mode,
                                               cfg.trials, cfg.seed);
            const int ntheta =
                bench::param_count_for(arch, problem::input_width(base.spec.dim, base.mode));
            table << (m0 ? std::to_string(*m0) : "") << "," << n << "," << ntheta << ","
                  << rep.mean.rel_linf << "," << rep.mean.rel_l2 << ","
                  << rep.mean.rel_grad_linf << "," << rep.mean.final_loss << ","
                  << rep.n_divergent << "\n";
            json cell = trials_to_json(rep);
            cell["N"] = n;
            if (m0) cell["M0"] = *m0;
            cells.push_back(cell);
            status = std::max(status, divergence_status(rep));
            std::cout << "sweep cell M0=" << (m0 ? std::to_string(*m0) : "-") << " N=" << n
                      << ": rel_linf " << rep.mean.rel_linf << "\n";
        }
    }
    if (wants(cfg, "json")) {
        json summary;
        summary["schema_version"] = 1;
        summary["example"] = cfg.example;
        summary["config"] = json::parse(serialize_config(cfg));
        summary["cells"] = cells;
        write_summary(summary, dir / "summary.json");
    }
    return status;
}

int compare_command(const RunConfig& cfg) {
    if (cfg.compare_mode.empty())
        throw config_error("compare requires 'compare.mode' in the config");
    const ResolvedRun r = resolve(cfg);
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    json summary;
    summary["schema_version"] = 1;
    summary["example"] = cfg.example;
    summary["config"] = json::parse(serialize_config(cfg));
    int status = kExitOk;

    if (cfg.compare_mode == "optimizers") {
        auto lm_choice = r.opt;
        lm_choice.kind = bench::OptimizerChoice::Kind::LM;
        auto adam_choice = r.opt;
        adam_choice.kind = bench::OptimizerChoice::Kind::Adam;
        const auto lm_rep = bench::run_trials(r.spec, r.arch, r.counts, lm_choice, r.mode,
                                              cfg.trials, cfg.seed);
        const auto adam_rep = bench::run_trials(r.spec, r.arch, r.counts, adam_choice, r.mode,
                                                cfg.trials, cfg.seed);
        write_trial_histories(lm_rep, dir, "lm_");
        write_trial_histories(adam_rep, dir, "adam_");
        summary["lm"] = trials_to_json(lm_rep);
        summary["adam"] = trials_to_json(adam_rep);
        status = std::max(divergence_status(lm_rep), divergence_status(adam_rep));
        std::cout << "lm final loss " << lm_rep.mean.final_loss << ", adam final loss "
                  << adam_rep.mean.final_loss << "\n";
    } else {
        std::vector<std::pair<problem::Augmentation, bench::Arch>> modes = {
            {problem::Augmentation::PhiAbs, r.arch}, {problem::Augmentation::Phi, r.arch}};
        if (cfg.none_neurons)
            modes.emplace_back(problem::Augmentation::None,
                               bench::Arch{r.arch.hidden_layers, *cfg.none_neurons});
        const auto reports = bench::compare_augmentation(r.spec, r.counts, r.opt, modes,
                                                         cfg.trials, cfg.seed);
        for (const auto& [mode, rep] : reports) {
            const std::string name = problem::augmentation_name(mode);
            write_trial_histories(rep, dir, name + "_");
            bench::write_errors_csv(rep, (dir / (name + "_errors.csv")).string());
            summary[name] = trials_to_json(rep);
            status = std::max(status, divergence_status(rep));
            std::cout << name << ": mean rel_l2 " << rep.mean.rel_l2 << ", mean loss "
                      << rep.mean.final_loss << "\n";
        }
    }
    write_summary(summary, dir / "summary.json");
    return status;
}

int export_points_command(const RunConfig& cfg) {
    const ResolvedRun r = resolve(cfg);
    // same seed chain as trial 0 of `run`, so the exported set is the one trained on
    const auto colloc = geometry::sample_collocation(
        *r.spec.prob.domain, *r.spec.prob.level_set, r.counts,
        bench::collocation_seed(bench::trial_seed(cfg.seed, 0)));
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    geometry::write_points_csv(colloc, (dir / "points.csv").string());
    std::cout << "wrote " << colloc.m_total() << " points to "
              << (dir / "points.csv").string() << "\n";
    return kExitOk;
}

void list_examples(std::ostream& os) {
    for (const auto& id : bench::example_ids()) {
        const auto spec = bench::make_example(id);
        os << id << "  d=" << spec.dim << "  default arch (L,N)=(" << spec.default_arch.hidden_layers
           << "," << spec.default_arch.neurons << ")  counts (MI,MG,MB)=("
           << spec.default_counts.interior << "," << spec.default_counts.interface << ","
           << spec.default_counts.boundary << ")"
           << (spec.discontinuous ? "  [discontinuous solution]" : "") << "\n    "
           << spec.title << "\n";
    }
}

} // namespace cusppinn::cli
