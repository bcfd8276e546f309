#include "ulamsteer/pipeline.hpp"

#include "ulamsteer/config.hpp"
#include "ulamsteer/error.hpp"
#include "ulamsteer/feedback.hpp"
#include "ulamsteer/reachability.hpp"
#include "ulamsteer/transport.hpp"
#include "ulamsteer/ulam.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace ulamsteer {

using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr std::size_t kMaxWitnessPairs = 20;
constexpr std::size_t kTextTensorLimit = 200000;

enum class Level { Discretize = 0, Reachability, Solve, Simulate, Rollout };

std::string fmt(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// JSON cannot carry inf/nan; they are written as strings.
ordered_json num(double v) {
    if (std::isfinite(v)) return v;
    return fmt(v);
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw FormatError("cannot write " + p.string());
    return out;
}

void write_measures_csv(const std::filesystem::path& p, const std::vector<std::vector<double>>& rows) {
    auto out = open_out(p);
    const std::size_t n = rows.empty() ? 0 : rows.front().size();
    for (std::size_t i = 0; i < n; ++i) out << (i ? "," : "") << "cell_" << i;
    out << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << fmt(r[i]);
        out << "\n";
    }
}

class Timer {
public:
    Timer(bool on, const char* what) : on_(on), what_(what), t0_(std::chrono::steady_clock::now()) {}
    ~Timer() {
        if (!on_) return;
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        std::fprintf(stderr, "[time] %-14s %.3f s\n", what_, s);
    }

private:
    bool on_;
    const char* what_;
    std::chrono::steady_clock::time_point t0_;
};

struct Session {
    RunConfig config;
    RunOptions options;
    std::filesystem::path out;
    ordered_json manifest;
    int code = kExitOk;

    void fail(int c, const std::string& msg) {
        if (code == kExitOk) code = c;
        manifest["errors"].push_back(msg);
        std::cerr << "error: " << msg << "\n";
    }
};

int run_levels(Session& s, Level upto, bool export_lp) {
    const RunConfig& cfg = s.config;
    const std::size_t threads = s.options.threads;
    const bool verbose = s.options.verbose;
    ordered_json& man = s.manifest;

    std::optional<Partition> partition;
    std::optional<ControlGrid> controls;
    std::unique_ptr<SystemMap> system;
    Measure mu0, muf;
    try {
        partition.emplace(make_partition(cfg));
        controls.emplace(make_controls(cfg));
        system = make_system(cfg);
        mu0 = project_measure(cfg.initial, *partition, cfg.quadrature, cfg.base_dir);
        muf = project_measure(cfg.target, *partition, cfg.quadrature, cfg.base_dir);
    } catch (const InvalidArgument& e) {
        s.fail(kExitConfig, e.what());
        return s.code;
    } catch (const ConfigError& e) {
        s.fail(kExitConfig, e.what());
        return s.code;
    }
    man["partition"] = {{"lower", partition->box().lower},
                        {"upper", partition->box().upper},
                        {"resolution", partition->resolution()},
                        {"n_cells", partition->size()},
                        {"indexing", "axis 0 fastest"}};
    ordered_json pts = ordered_json::array();
    for (const auto& p : controls->points()) pts.push_back(p);
    man["controls"] = {{"n_controls", controls->size()}, {"points", pts}};
    man["system"] = system->name();

    TransitionTensor tensor;
    TensorDiagnostics diag;
    {
        Timer t(verbose, "tensor");
        tensor = build_tensor(*system, *partition, *controls, cfg.quadrature, threads, &diag);
    }
    double row_err = 0.0;
    for (std::size_t k = 0; k < tensor.n_controls; ++k)
        for (std::size_t i = 0; i < tensor.n_cells; ++i)
            row_err = std::max(row_err, std::abs(tensor.row_sum(k, i) - 1.0));
    const CostTable costs = build_cost_table(*partition, *controls, stage_cost_by_name(cfg.cost),
                                             cfg.quadrature, cfg.cost_per_volume);
    man["tensor"] = {{"file", "tensor.bin"},
                     {"quadrature", tensor.quadrature},
                     {"nonzeros", tensor.nonzeros()},
                     {"partition_hash", hex(tensor.partition_hash)},
                     {"controls_hash", hex(tensor.controls_hash)},
                     {"max_row_sum_error", num(row_err)},
                     {"boundary_fraction", num(diag.boundary_fraction)}};
    man["cost"] = {{"name", cfg.cost}, {"per_volume", cfg.cost_per_volume}};
    man["measures"] = {{"file", "measures.csv"}, {"rows", {"initial", "target"}}};

    if (export_lp) {
        const LPProblem problem = assemble(tensor, costs, mu0, muf, cfg.horizon);
        auto out = open_out(s.out / "problem.mps");
        write_mps(problem, out);
        man["lp_export"] = {{"file", "problem.mps"},
                            {"rows", problem.form.rows()},
                            {"cols", problem.form.cols()},
                            {"nonzeros", problem.form.A.nonZeros()}};
        return s.code;
    }

    write_tensor_binary(tensor, (s.out / "tensor.bin").string());
    if (tensor.nonzeros() <= kTextTensorLimit) {
        auto out = open_out(s.out / "tensor.txt");
        write_tensor_text(tensor, out);
    }
    {
        auto out = open_out(s.out / "costs.csv");
        out << "cell,control,cost\n";
        for (std::size_t i = 0; i < costs.n_cells(); ++i)
            for (std::size_t k = 0; k < costs.n_controls(); ++k) out << i << "," << k << "," << fmt(costs(i, k)) << "\n";
    }
    write_measures_csv(s.out / "measures.csv", {mu0.weights, muf.weights});
    if (upto == Level::Discretize) return s.code;

    // Reachability gate.
    ReachabilitySets sets;
    {
        Timer t(verbose, "reachability");
        sets = reachable_sets(tensor, cfg.horizon, false, threads);
    }
    const ReachabilityVerdict verdict =
        check_sufficient_condition(sets, mu0, muf, cfg.horizon, cfg.tolerances.support);
    {
        auto out = open_out(s.out / "reachability.txt");
        out << "verdict " << (verdict.satisfied ? "satisfied" : "violated") << "\n";
        out << "horizon " << cfg.horizon << "\n";
        out << "violations " << verdict.violations.size() << "\n";
        std::size_t shown = 0;
        if (!verdict.satisfied) {
            for (const auto& [i, j] : verdict.violations) {
                if (shown++ == kMaxWitnessPairs) break;
                out << "unreachable " << i << " -> " << j << "\n";
            }
        } else {
            std::vector<std::size_t> src, dst;
            for (std::size_t i = 0; i < mu0.size(); ++i)
                if (mu0[i] > cfg.tolerances.support) src.push_back(i);
            for (std::size_t j = 0; j < muf.size(); ++j)
                if (muf[j] > cfg.tolerances.support) dst.push_back(j);
            for (std::size_t a : src)
                for (std::size_t b : dst) {
                    if (shown == kMaxWitnessPairs) break;
                    auto w = extract_witness(tensor, a, b, cfg.horizon);
                    if (!w) continue;
                    ++shown;
                    out << "witness " << a << " -> " << b << " controls";
                    for (std::size_t k : w->controls) out << " " << k;
                    out << " cells";
                    for (std::size_t c : w->cells) out << " " << c;
                    out << " probability " << fmt(w->probability) << "\n";
                }
        }
        std::cout << "reachability: " << (verdict.satisfied ? "satisfied" : "violated") << " ("
                  << verdict.violations.size() << " unreachable pairs)\n";
    }
    man["reachability"] = {{"file", "reachability.txt"},
                           {"verdict", verdict.satisfied ? "satisfied" : "violated"},
                           {"violations", verdict.violations.size()},
                           {"support_threshold", num(cfg.tolerances.support)}};
    if (upto == Level::Reachability) return s.code;

    // Transport LP.
    TransportOptions topt;
    topt.lp.tol = cfg.tolerances.lp;
    topt.lp.verbose = verbose;
    topt.terminal_tol = cfg.tolerances.terminal;
    topt.consistency_tol = cfg.tolerances.consistency;
    SolveOutcome outcome;
    LPProblem problem;
    {
        Timer t(verbose, "lp");
        problem = assemble(tensor, costs, mu0, muf, cfg.horizon);
        outcome = solve(problem, topt);
    }
    ordered_json lpj = {{"status", lp::to_string(outcome.status)},
                        {"rows", problem.form.rows()},
                        {"cols", problem.form.cols()},
                        {"note", outcome.note}};
    if (outcome.solution) {
        const TransportSolution& sol = *outcome.solution;
        const auto& r = sol.residuals;
        lpj["method"] = sol.method;
        lpj["iterations"] = sol.iterations;
        lpj["objective"] = num(sol.objective);
        lpj["dual_bound"] = num(sol.dual_bound);
        lpj["residuals"] = {{"terminal_l1", num(r.terminal_l1)},
                            {"marginal", num(r.marginal)},
                            {"pushforward", num(r.pushforward)},
                            {"normalization", num(r.normalization)},
                            {"min_mass", num(r.min_mass)},
                            {"clipped_mass", num(r.clipped_mass)}};
    }
    std::cout << "lp: " << lp::to_string(outcome.status);
    if (outcome.solution) std::cout << ", objective " << fmt(outcome.solution->objective);
    std::cout << "\n";

    if (outcome.status == lp::Status::Infeasible) {
        auto out = open_out(s.out / "certificate.csv");
        out << "row,multiplier\n";
        const auto names = problem.row_names();
        for (Eigen::Index r = 0; r < outcome.certificate.size(); ++r)
            if (outcome.certificate[r] != 0.0)
                out << names[static_cast<std::size_t>(r)] << "," << fmt(outcome.certificate[r]) << "\n";
        lpj["certificate"] = {{"file", "certificate.csv"}, {"verified", outcome.certificate_verified}};
        man["lp"] = lpj;
        s.fail(kExitInfeasible, "transport LP is infeasible: " + outcome.note);
        return s.code;
    }
    if (!outcome.solution) {
        man["lp"] = lpj;
        s.fail(kExitNumerical, "transport LP failed: " + outcome.note);
        return s.code;
    }
    const TransportSolution& sol = *outcome.solution;
    {
        auto out = open_out(s.out / "solution.csv");
        out << "step,cell,control,mass\n";
        for (std::size_t n = 0; n < sol.horizon; ++n)
            for (std::size_t i = 0; i < sol.n_cells; ++i)
                for (std::size_t k = 0; k < sol.n_controls; ++k) {
                    const double v = sol.nu[n](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
                    if (v != 0.0) out << n << "," << i << "," << k << "," << fmt(v) << "\n";
                }
    }
    write_measures_csv(s.out / "lp_trajectory.csv", sol.mu);
    lpj["files"] = {"solution.csv", "lp_trajectory.csv"};
    man["lp"] = lpj;
    if (outcome.status != lp::Status::Optimal) {
        s.fail(kExitNumerical, "transport LP solution violates tolerances: " + outcome.note);
        return s.code;
    }
    if (upto == Level::Solve) return s.code;

    // Feedback extraction and closed-loop propagation.
    const FeedbackLaw law = extract_feedback(sol, cfg.tolerances.eps_mass);
    double law_err = 0.0;
    for (std::size_t n = 0; n < law.horizon(); ++n)
        for (std::size_t i = 0; i < law.n_cells; ++i)
            if (law.defined[n][i])
                law_err = std::max(law_err, std::abs(law.lambda[n].col(static_cast<Eigen::Index>(i)).sum() - 1.0));
    {
        auto out = open_out(s.out / "feedback.csv");
        out << "step,cell,control,probability\n";
        for (std::size_t n = 0; n < law.horizon(); ++n)
            for (std::size_t i = 0; i < law.n_cells; ++i)
                for (std::size_t k = 0; k < law.n_controls; ++k) {
                    const double v = law.lambda[n](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
                    if (v != 0.0) out << n << "," << i << "," << k << "," << fmt(v) << "\n";
                }
    }
    man["feedback"] = {{"file", "feedback.csv"}, {"eps_mass", num(law.eps_mass)}, {"max_row_sum_error", num(law_err)}};

    Trajectory traj;
    try {
        traj = propagate(tensor, law, mu0.weights, cfg.horizon, costs);
    } catch (const UndefinedLaw& e) {
        s.fail(kExitNumerical, e.what());
        return s.code;
    }
    double agreement = 0.0;
    for (std::size_t n = 0; n <= cfg.horizon; ++n)
        agreement = std::max(agreement, l1_distance(traj.measures[n], sol.mu[n]));
    write_measures_csv(s.out / "trajectory.csv", traj.measures);
    man["trajectory"] = {{"file", "trajectory.csv"},
                         {"rows", "steps 0..N"},
                         {"total_cost", num(traj.total_cost)},
                         {"cost_gap_vs_lp", num(std::abs(traj.total_cost - sol.objective))},
                         {"max_l1_vs_lp", num(agreement)},
                         {"mass_drift", num(traj.mass_drift)},
                         {"dropped_mass", num(traj.dropped_mass)},
                         {"terminal_l1", num(l1_distance(traj.measures.back(), muf.weights))}};
    std::cout << "simulate: total cost " << fmt(traj.total_cost) << ", max l1 vs lp " << fmt(agreement) << "\n";
    if (upto == Level::Simulate) return s.code;

    // Monte-Carlo rollout on the original system.
    if (cfg.rollout.agents == 0) {
        man["rollout"] = {{"skipped", "rollout.agents is 0"}};
        return s.code;
    }
    const std::uint64_t seed = s.options.seed.value_or(cfg.seed);
    InitialSampler sampler = cfg.rollout.initial == "point" ? point_sampler(cfg.rollout.point)
                                                            : measure_sampler(*partition, mu0.weights);
    RolloutOptions ropt;
    ropt.agents = cfg.rollout.agents;
    ropt.seed = seed;
    ropt.threads = threads;
    ropt.keep_paths = cfg.rollout.keep_paths;
    RolloutResult roll;
    {
        Timer t(verbose, "rollout");
        roll = rollout(*system, *partition, *controls, law, sampler, ropt);
    }
    const double tv = total_variation(roll.final_measure, traj.measures.back());
    {
        auto out = open_out(s.out / "rollout.csv");
        out << "cell,count,empirical,propagated\n";
        for (std::size_t i = 0; i < roll.counts.size(); ++i)
            out << i << "," << roll.counts[i] << "," << fmt(roll.final_measure[i]) << ","
                << fmt(traj.measures.back()[i]) << "\n";
    }
    if (!roll.paths.empty()) {
        auto out = open_out(s.out / "paths.csv");
        out << "agent,step";
        for (std::size_t d = 0; d < partition->dim(); ++d) out << ",x" << d;
        out << "\n";
        for (std::size_t a = 0; a < roll.paths.size(); ++a)
            for (std::size_t n = 0; n < roll.paths[a].size(); ++n) {
                out << a << "," << n;
                for (double v : roll.paths[a][n]) out << "," << fmt(v);
                out << "\n";
            }
    }
    man["rollout"] = {{"file", "rollout.csv"},
                      {"agents", ropt.agents},
                      {"seed", seed},
                      {"initial", cfg.rollout.initial},
                      {"flagged_agents", roll.flagged_agents},
                      {"flagged_events", roll.flagged_events},
                      {"flagged_fraction", num(static_cast<double>(roll.flagged_agents) /
                                               static_cast<double>(ropt.agents))},
                      {"tv_vs_propagated", num(tv)}};
    std::cout << "rollout: tv " << fmt(tv) << ", flagged " << roll.flagged_agents << "/" << ropt.agents << "\n";
    return s.code;
}

} // namespace

int execute(const std::string& command, const std::string& config_path, const RunOptions& options) {
    static const std::map<std::string, Level> levels = {{"discretize", Level::Discretize},
                                                         {"check-reachability", Level::Reachability},
                                                         {"solve", Level::Solve},
                                                         {"simulate", Level::Simulate},
                                                         {"rollout", Level::Rollout},
                                                         {"run", Level::Rollout},
                                                         {"export-lp", Level::Discretize}};
    auto lvl = levels.find(command);
    if (lvl == levels.end()) {
        std::cerr << "error: unknown command '" << command << "'\n";
        return kExitConfig;
    }

    Session s;
    s.options = options;
    s.manifest["tool"] = "ulamsteer";
    s.manifest["version"] = kVersion;
    s.manifest["command"] = command;
    s.manifest["errors"] = ordered_json::array();
    try {
        s.config = load_config(config_path);
    } catch (const ConfigError& e) {
        if (!options.out_dir) std::cerr << "error: " << e.what() << "\n";
        if (options.out_dir) {
            std::error_code ec;
            std::filesystem::create_directories(*options.out_dir, ec);
            s.fail(kExitConfig, e.what());
            s.manifest["exit_code"] = s.code;
            std::ofstream(std::filesystem::path(*options.out_dir) / "manifest.json") << s.manifest.dump(2) << "\n";
        }
        return kExitConfig;
    }
    if (options.tol) s.config.tolerances.lp = *options.tol;
    if (command == "rollout" && s.config.rollout.agents == 0) s.config.rollout.agents = 1000;

    s.out = options.out_dir.value_or(s.config.output);
    std::error_code ec;
    std::filesystem::create_directories(s.out, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory " << s.out << ": " << ec.message() << "\n";
        return kExitError;
    }
    s.manifest["config_hash"] = hex(s.config.hash());
    s.manifest["config"] = ordered_json::parse(s.config.canonical);
    s.manifest["seed"] = options.seed.value_or(s.config.seed);
    s.manifest["horizon"] = s.config.horizon;
    s.manifest["tolerances"] = {{"lp_relative_gap", num(s.config.tolerances.lp)},
                                {"terminal_l1", num(s.config.tolerances.terminal)},
                                {"consistency", num(s.config.tolerances.consistency)},
                                {"eps_mass", num(s.config.tolerances.eps_mass)},
                                {"support", num(s.config.tolerances.support)},
                                {"measure_normalization", num(Measure::kNormTolerance)}};

    try {
        run_levels(s, lvl->second, command == "export-lp");
    } catch (const ConfigError& e) {
        s.fail(kExitConfig, e.what());
    } catch (const FormatError& e) {
        s.fail(kExitError, e.what());
    } catch (const std::exception& e) {
        s.fail(kExitNumerical, e.what());
    }
    s.manifest["exit_code"] = s.code;
    std::ofstream man(s.out / "manifest.json", std::ios::binary);
    man << s.manifest.dump(2) << "\n";
    return s.code;
}

} // namespace ulamsteer
