#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kbsim/io.hpp"
#include "kbsim/lp.hpp"
#include "kbsim/simulate.hpp"

#include "lp_oracle.hpp"

namespace {

using nlohmann::json;

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct CommonFlags {
    std::string config_path;
    std::string preset;
    std::string policies;
    std::string checkpoints;
    std::string capacity_mode;
    std::string capacity_reading;
    std::string theta_cardinality;
    int reps = -1;
    long long seed = -1;
    int horizon = -1;
    int resolve_cadence = -1;
    double threshold_multiplier = -1.0;
    double switch_threshold_multiplier = -1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment JSON file");
        cmd->add_option("--preset", preset, "named preset: iid, adv1 or adv2");
        cmd->add_option("--policies", policies, "comma-separated policy list");
        cmd->add_option("--reps", reps, "number of replications");
        cmd->add_option("--seed", seed, "base seed");
        cmd->add_option("--horizon", horizon, "preset horizon T");
        cmd->add_option("--checkpoints", checkpoints, "comma-separated report periods");
        cmd->add_option("--resolve-cadence", resolve_cadence, "periods between LP re-solves");
        cmd->add_option("--capacity-mode", capacity_mode, "hard or soft");
        cmd->add_option("--capacity-reading", capacity_reading,
                        "preset capacities: half_each or full_each");
        cmd->add_option("--threshold-multiplier", threshold_multiplier,
                        "scale on the elimination thresholds");
        cmd->add_option("--switch-threshold-multiplier", switch_threshold_multiplier,
                        "scale on the switch thresholds");
        cmd->add_option("--theta-cardinality", theta_cardinality,
                        "candidate count in the switch threshold: sum or max");
    }

    // Flags override file values, which override preset defaults.
    kbsim::ExperimentSpec resolve() const {
        json doc = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw kbsim::config_error("cannot read config file '" + config_path + "'");
            try {
                in >> doc;
            } catch (const std::exception& e) {
                throw kbsim::config_error("config parse error: " + std::string(e.what()));
            }
        }
        if (!preset.empty()) {
            doc["preset"] = preset;
            doc.erase("instance");
            doc.erase("schedule");
        }
        if (!policies.empty()) doc["policies"] = split_csv(policies);
        if (reps >= 0) doc["reps"] = reps;
        if (seed >= 0) doc["seed"] = static_cast<std::uint64_t>(seed);
        if (horizon >= 0) doc["horizon"] = horizon;
        if (!checkpoints.empty()) {
            json arr = json::array();
            for (const auto& c : split_csv(checkpoints)) arr.push_back(std::stoi(c));
            doc["checkpoints"] = arr;
        }
        if (resolve_cadence >= 0) doc["resolve_cadence"] = resolve_cadence;
        if (!capacity_mode.empty()) doc["capacity_mode"] = capacity_mode;
        if (!capacity_reading.empty()) doc["capacity_reading"] = capacity_reading;
        if (threshold_multiplier >= 0.0) doc["threshold_multiplier"] = threshold_multiplier;
        if (switch_threshold_multiplier >= 0.0)
            doc["switch_threshold_multiplier"] = switch_threshold_multiplier;
        if (!theta_cardinality.empty()) doc["theta_cardinality"] = theta_cardinality;
        return kbsim::experiment_from_json(doc);
    }
};

int cmd_run(const CommonFlags& flags, const std::string& out_dir) {
    kbsim::ExperimentSpec spec = flags.resolve();
    auto start = std::chrono::steady_clock::now();
    std::vector<kbsim::ReplicationSummary> summaries;
    for (kbsim::PolicyKind p : spec.policies) {
        kbsim::SimulationConfig cfg = spec.base;
        cfg.policy = p;
        summaries.push_back(kbsim::replicate(cfg));
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    kbsim::write_outputs(spec, summaries, out_dir, wall);

    for (const auto& s : summaries) {
        std::printf("%-8s", kbsim::policy_name(s.policy));
        for (const auto& cp : s.checkpoints)
            std::printf("  t=%d regret=%.2f+-%.2f", cp.t, cp.mean_regret, cp.stderr_regret);
        if (s.switch_count > 0)
            std::printf("  switched=%d/%d", s.switch_count, s.replications);
        if (s.misspecification_warnings > 0)
            std::printf("  misspecification_warnings=%d", s.misspecification_warnings);
        std::printf("\n");
    }
    std::printf("wrote %s/regret.csv, allocations.csv, meta.json (%.2fs)\n", out_dir.c_str(), wall);
    return 0;
}

int cmd_benchmark(const CommonFlags& flags, int t) {
    kbsim::ExperimentSpec spec = flags.resolve();
    double value = t == 0 ? 0.0
                          : kbsim::benchmark_jd(spec.base.instance, spec.base.schedule(), t);
    std::printf("%.6f\n", value);
    return 0;
}

int cmd_selftest(int cases) {
    int failures = 0;

    auto report = [&failures](const char* name, bool ok, const std::string& detail) {
        std::printf("%s %s: %s\n", ok ? "ok  " : "FAIL", name, detail.c_str());
        if (!ok) ++failures;
    };

    {
        kbsim::RngStream rng(20240517);
        int bad = 0;
        for (int c = 0; c < cases; ++c) {
            if (!kbsim::testing::oracle_agrees(kbsim::testing::random_small_lp(rng))) ++bad;
        }
        report("lp-oracle", bad == 0,
               std::to_string(cases) + " cases, " + std::to_string(bad) + " mismatches");
    }
    {
        int bad = 0;
        kbsim::RngStream rng(7);
        for (int c = 0; c < 200; ++c) {
            double u = rng.next_double(), v = rng.next_double(), w = rng.next_double();
            double lhs = kbsim::psi(w * u + (1 - w) * v);
            double rhs = w * kbsim::psi(u) + (1 - w) * kbsim::psi(v);
            if (lhs > rhs + 1e-12) ++bad;
        }
        if (std::abs(kbsim::psi(0.0)) > 1e-15 || std::abs(kbsim::psi(1.0) - 1.0) > 1e-15) ++bad;
        report("psi-invariants", bad == 0, "convexity and endpoints, 200 cases");
    }
    {
        kbsim::SimulationConfig cfg = kbsim::make_preset("iid");
        cfg.replications = 2;
        cfg.base_seed = 11;
        kbsim::ReplicationSummary a = kbsim::replicate_serial(cfg);
        kbsim::ReplicationSummary b = kbsim::replicate(cfg);
        bool same = a.checkpoints.size() == b.checkpoints.size();
        for (size_t i = 0; same && i < a.checkpoints.size(); ++i)
            same = a.checkpoints[i].mean_regret == b.checkpoints[i].mean_regret;
        report("parallel-equals-serial", same, "2 replications, preset iid");
    }
    return failures;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"online resource allocation simulator"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    std::string out_dir = "out";
    CLI::App* run = app.add_subcommand("run", "run replicated simulations and write CSV outputs");
    run_flags.attach(run);
    run->add_option("--out", out_dir, "output directory");

    CommonFlags bench_flags;
    int bench_t = -1;
    CLI::App* bench = app.add_subcommand("benchmark", "print the deterministic revenue bound");
    bench_flags.attach(bench);
    bench->add_option("--t", bench_t, "period (defaults to the horizon)");

    int cases = 1000;
    CLI::App* selftest = app.add_subcommand("selftest", "LP oracle and invariant checks");
    selftest->add_option("--cases", cases, "random LP case count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_flags, out_dir);
        if (bench->parsed()) {
            kbsim::ExperimentSpec probe = bench_flags.resolve();
            int t = bench_t >= 0 ? bench_t : probe.base.instance.horizon;
            if (t < 0 || t > probe.base.instance.horizon)
                throw kbsim::config_error("benchmark period out of range");
            return cmd_benchmark(bench_flags, t);
        }
        if (selftest->parsed()) return cmd_selftest(cases);
    } catch (const kbsim::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
