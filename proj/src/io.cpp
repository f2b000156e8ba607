#include "kbsim/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace kbsim {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

void require_keys(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (known.count(it.key()) == 0)
            throw config_error("unknown key '" + it.key() + "' in " + where);
    }
}

std::vector<double> to_doubles(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw config_error(where + " must be an array");
    std::vector<double> out;
    for (const auto& v : arr) {
        if (!v.is_number()) throw config_error(where + " must contain numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

ProblemInstance instance_from_json(const json& doc) {
    require_keys(doc, {"resources", "contexts", "horizon", "total_rates", "reject_arm",
                       "advice_rates"},
                 "instance");
    ProblemInstance inst;
    inst.horizon = doc.at("horizon").get<int>();
    for (const auto& rj : doc.at("resources")) {
        require_keys(rj, {"revenue", "capacity", "theta_space", "true_theta"}, "resource");
        ResourceSpec r;
        r.revenue = rj.at("revenue").get<double>();
        r.capacity = rj.at("capacity").get<double>();
        for (const auto& th : rj.at("theta_space")) r.theta_space.push_back(to_doubles(th, "theta"));
        r.true_theta = rj.at("true_theta").get<int>();
        inst.resources.push_back(std::move(r));
    }
    for (const auto& cj : doc.at("contexts")) {
        require_keys(cj, {"id", "features"}, "context");
        Context c;
        c.id = cj.at("id").get<int>();
        c.features = to_doubles(cj.at("features"), "features");
        inst.contexts.push_back(std::move(c));
    }
    inst.total_rates = to_doubles(doc.at("total_rates"), "total_rates");
    if (doc.contains("reject_arm")) inst.reject_arm_enabled = doc.at("reject_arm").get<bool>();
    if (doc.contains("advice_rates"))
        inst.advice_rates = to_doubles(doc.at("advice_rates"), "advice_rates");
    return inst;
}

std::vector<std::vector<double>> schedule_rows_from_json(const json& doc, int horizon,
                                                         int num_types) {
    require_keys(doc, {"segments", "rows"}, "schedule");
    if (doc.contains("rows") == doc.contains("segments"))
        throw config_error("schedule needs exactly one of 'rows' or 'segments'");
    if (doc.contains("rows")) {
        std::vector<std::vector<double>> rows;
        for (const auto& row : doc.at("rows")) rows.push_back(to_doubles(row, "schedule row"));
        return rows;
    }
    std::vector<ArrivalSegment> segments;
    for (const auto& sj : doc.at("segments")) {
        require_keys(sj, {"fraction", "probs"}, "segment");
        ArrivalSegment seg;
        seg.fraction = sj.at("fraction").get<double>();
        seg.type_probs = to_doubles(sj.at("probs"), "segment probs");
        segments.push_back(std::move(seg));
    }
    return ArrivalSchedule::expand_segments(segments, horizon, num_types);
}

CapacityMode capacity_mode_from(const std::string& s) {
    if (s == "hard") return CapacityMode::Hard;
    if (s == "soft") return CapacityMode::Soft;
    throw config_error("capacity_mode must be 'hard' or 'soft'");
}

} // namespace

ExperimentSpec experiment_from_json(const json& doc) {
    if (!doc.is_object()) throw config_error("experiment document must be a JSON object");
    require_keys(doc,
                 {"preset", "horizon", "capacity_reading", "instance", "schedule", "policies",
                  "reps", "seed", "checkpoints", "resolve_cadence", "capacity_mode",
                  "threshold_multiplier", "switch_threshold_multiplier", "theta_cardinality"},
                 "experiment");
    if (doc.contains("preset") == doc.contains("instance"))
        throw config_error("experiment needs either 'preset' or explicit 'instance'+'schedule'");

    ExperimentSpec spec;
    if (doc.contains("preset")) {
        PresetOptions opt;
        if (doc.contains("horizon")) opt.horizon = doc.at("horizon").get<int>();
        if (doc.contains("seed")) opt.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("capacity_reading")) {
            std::string reading = doc.at("capacity_reading").get<std::string>();
            if (reading == "full_each") opt.capacity_full_each = true;
            else if (reading != "half_each")
                throw config_error("capacity_reading must be 'half_each' or 'full_each'");
        }
        spec.base = make_preset(doc.at("preset").get<std::string>(), opt);
    } else {
        if (!doc.contains("schedule")) throw config_error("explicit instance needs a schedule");
        if (doc.contains("capacity_reading"))
            throw config_error("capacity_reading applies to presets only");
        if (doc.contains("horizon")) throw config_error("explicit instance carries its own horizon");
        spec.base.instance = instance_from_json(doc.at("instance"));
        spec.base.schedule_rows = schedule_rows_from_json(
            doc.at("schedule"), spec.base.instance.horizon, spec.base.instance.num_types());
        for (int k = 1; k <= 5; ++k)
            spec.base.checkpoints.push_back(spec.base.instance.horizon * k / 5);
    }

    if (doc.contains("reps")) spec.base.replications = doc.at("reps").get<int>();
    if (doc.contains("seed")) spec.base.base_seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("checkpoints")) {
        spec.base.checkpoints.clear();
        for (const auto& t : doc.at("checkpoints")) spec.base.checkpoints.push_back(t.get<int>());
    }
    if (doc.contains("resolve_cadence"))
        spec.base.resolve_cadence = doc.at("resolve_cadence").get<int>();
    if (doc.contains("capacity_mode"))
        spec.base.capacity_mode = capacity_mode_from(doc.at("capacity_mode").get<std::string>());
    if (doc.contains("threshold_multiplier"))
        spec.base.threshold_multiplier = doc.at("threshold_multiplier").get<double>();
    if (doc.contains("switch_threshold_multiplier"))
        spec.base.switch_threshold_multiplier = doc.at("switch_threshold_multiplier").get<double>();
    if (doc.contains("theta_cardinality")) {
        std::string card = doc.at("theta_cardinality").get<std::string>();
        if (card == "max") spec.base.theta_cardinality_max = true;
        else if (card != "sum") throw config_error("theta_cardinality must be 'sum' or 'max'");
    }

    if (doc.contains("policies")) {
        for (const auto& pj : doc.at("policies")) {
            auto kind = policy_from_name(pj.get<std::string>());
            if (!kind) throw config_error("unknown policy '" + pj.get<std::string>() + "'");
            spec.policies.push_back(*kind);
        }
    }
    if (spec.policies.empty()) spec.policies = {spec.base.policy};
    spec.base.policy = spec.policies.front();
    spec.base.validate();
    return spec;
}

ExperimentSpec load_experiment_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw config_error("config parse error: " + std::string(e.what()));
    }
    return experiment_from_json(doc);
}

json experiment_to_json(const ExperimentSpec& spec) {
    const SimulationConfig& c = spec.base;
    json inst;
    inst["horizon"] = c.instance.horizon;
    inst["total_rates"] = c.instance.total_rates;
    inst["reject_arm"] = c.instance.reject_arm_enabled;
    if (!c.instance.advice_rates.empty()) inst["advice_rates"] = c.instance.advice_rates;
    inst["resources"] = json::array();
    for (const auto& r : c.instance.resources) {
        json rj;
        rj["revenue"] = r.revenue;
        rj["capacity"] = r.capacity;
        rj["theta_space"] = r.theta_space;
        rj["true_theta"] = r.true_theta;
        inst["resources"].push_back(rj);
    }
    inst["contexts"] = json::array();
    for (const auto& x : c.instance.contexts)
        inst["contexts"].push_back({{"id", x.id}, {"features", x.features}});

    json doc;
    doc["instance"] = inst;
    doc["schedule"] = {{"rows", c.schedule_rows}};
    json pols = json::array();
    for (PolicyKind p : spec.policies) pols.push_back(policy_name(p));
    doc["policies"] = pols;
    doc["reps"] = c.replications;
    doc["seed"] = c.base_seed;
    doc["checkpoints"] = c.checkpoints;
    doc["resolve_cadence"] = c.resolve_cadence;
    doc["capacity_mode"] = c.capacity_mode == CapacityMode::Hard ? "hard" : "soft";
    doc["threshold_multiplier"] = c.threshold_multiplier;
    doc["switch_threshold_multiplier"] = c.switch_threshold_multiplier;
    doc["theta_cardinality"] = c.theta_cardinality_max ? "max" : "sum";
    return doc;
}

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

std::string regret_csv(const std::vector<ReplicationSummary>& summaries) {
    std::string out = "policy,checkpoint,mean_regret,stderr\n";
    for (const auto& s : summaries) {
        for (const auto& cp : s.checkpoints) {
            out += policy_name(s.policy);
            out += ',' + std::to_string(cp.t) + ',' + fmt6(cp.mean_regret) + ',' +
                   fmt6(cp.stderr_regret) + '\n';
        }
    }
    return out;
}

std::string allocations_csv(const std::vector<ReplicationSummary>& summaries) {
    std::string out = "policy,checkpoint,type,resource,mean_count\n";
    for (const auto& s : summaries) {
        for (const auto& cp : s.checkpoints) {
            for (size_t j = 0; j < cp.mean_allocations.size(); ++j) {
                for (size_t i = 0; i < cp.mean_allocations[j].size(); ++i) {
                    out += policy_name(s.policy);
                    out += ',' + std::to_string(cp.t) + ',' + std::to_string(j) + ',' +
                           std::to_string(i) + ',' + fmt6(cp.mean_allocations[j][i]) + '\n';
                }
            }
        }
    }
    return out;
}

void write_outputs(const ExperimentSpec& spec, const std::vector<ReplicationSummary>& summaries,
                   const std::string& out_dir, double wall_seconds) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "regret.csv", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write regret.csv");
        f << regret_csv(summaries);
    }
    {
        std::ofstream f(fs::path(out_dir) / "allocations.csv", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write allocations.csv");
        f << allocations_csv(summaries);
    }
    {
        json meta;
        meta["config"] = experiment_to_json(spec);
        meta["seed"] = spec.base.base_seed;
        meta["versions"] = {{"kbsim", kVersion}};
        meta["wall_time_seconds"] = wall_seconds;
        std::ofstream f(fs::path(out_dir) / "meta.json", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write meta.json");
        f << meta.dump(2) << '\n';
    }
}

} // namespace kbsim
