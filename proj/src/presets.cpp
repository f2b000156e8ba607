#include "kbsim/simulate.hpp"

#include <cmath>

namespace kbsim {

namespace {

// Shared experiment family: two resources, two customer types on basis
// feature vectors, logistic purchase model with type-A probability 0.9 and
// type-B probability 0.5 under the true parameter.
constexpr double kRevenue1 = 1.0;
constexpr double kRevenue2 = 1.5;
constexpr double kTypeAShare = 0.6; // stationary mix; also the planners' advice
constexpr double kTypeBShare = 0.4;
constexpr int kHistoryObservations = 500;
constexpr int kGridPointsPerCoord = 3;
constexpr double kGridSpacing = 0.12;

// Coarse prior candidates kept alongside the local fit grid, one per
// resource. Components are logits; 1.8 keeps the type-A coordinate inside
// the grid's reach while the type-B coordinate stays deliberately wide.
constexpr double kPriorLogitA = 1.8;
constexpr double kPriorLogitB1 = 1.26567; // sigma = 0.78 on type B, resource 1
constexpr double kPriorLogitB2 = 0.84730; // sigma = 0.70 on type B, resource 2

// Calibrated deviation scale for the switch tests; the printed constants
// (multiplier 1.0) never trigger at horizons this short.
constexpr double kSwitchMultiplier = 0.38;

// Elimination thresholds widened to sqrt(2 t log(2t/beta)).
const double kUpdateMultiplier = std::sqrt(2.0);

std::vector<ArrivalSegment> preset_segments(const std::string& name) {
    if (name == "iid") return {{1.0, {0.6, 0.4}}};
    if (name == "adv1") return {{0.33, {0.15, 0.85}}, {0.67, {0.4, 0.6}}};
    if (name == "adv2")
        return {{0.1, {0.2, 0.8}},  {0.3, {0.8, 0.2}}, {0.2, {0.2, 0.8}}, {0.1, {0.4, 0.6}},
                {0.1, {0.2, 0.8}}, {0.1, {0.02, 0.98}}, {0.1, {0.2, 0.8}}};
    throw config_error("unknown preset '" + name + "' (expected iid, adv1 or adv2)");
}

} // namespace

bool is_preset_name(const std::string& name) {
    return name == "iid" || name == "adv1" || name == "adv2";
}

SimulationConfig make_preset(const std::string& name, const PresetOptions& options) {
    const int T = options.horizon;
    if (T < 10) throw config_error("preset horizon must be at least 10");

    SimulationConfig config;
    ProblemInstance& inst = config.instance;
    inst.horizon = T;
    inst.contexts = {{0, {1.0, 0.0}}, {1, {0.0, 1.0}}};
    const std::vector<double> theta_star = {std::log(9.0), 0.0};

    RngStream history_seed = make_stream(options.seed, 0, Stream::History);
    std::vector<std::vector<double>> grid =
        build_theta_grid(inst.contexts, {kTypeAShare, kTypeBShare}, theta_star,
                         kHistoryObservations, kGridPointsPerCoord, kGridSpacing,
                         history_seed.next_u64());

    const double capacity = options.capacity_full_each ? static_cast<double>(T) : T / 2.0;
    auto make_resource = [&](double revenue, double prior_logit_b) {
        ResourceSpec r;
        r.revenue = revenue;
        r.capacity = capacity;
        r.theta_space = grid;
        r.theta_space.push_back({kPriorLogitA, prior_logit_b});
        r.theta_space.push_back(theta_star);
        r.true_theta = static_cast<int>(r.theta_space.size()) - 1;
        return r;
    };
    inst.resources.push_back(make_resource(kRevenue1, kPriorLogitB1));
    inst.resources.push_back(make_resource(kRevenue2, kPriorLogitB2));
    inst.reject_arm_enabled = true;

    config.schedule_rows = ArrivalSchedule::expand_segments(preset_segments(name), T, 2);
    // One multiply per constant block keeps the totals clean.
    std::vector<double> totals(2, 0.0);
    for (size_t start = 0; start < config.schedule_rows.size();) {
        size_t end = start;
        while (end < config.schedule_rows.size() &&
               config.schedule_rows[end] == config.schedule_rows[start])
            ++end;
        for (int j = 0; j < 2; ++j)
            totals[static_cast<size_t>(j)] +=
                static_cast<double>(end - start) * config.schedule_rows[start][static_cast<size_t>(j)];
        start = end;
    }
    inst.total_rates = totals;
    inst.advice_rates = {kTypeAShare * T, kTypeBShare * T};

    config.policy = PolicyKind::Ulwe;
    config.replications = 100;
    config.base_seed = 0;
    for (int k = 1; k <= 5; ++k) config.checkpoints.push_back(T * k / 5);
    config.resolve_cadence = 50;
    config.capacity_mode = CapacityMode::Hard;
    config.threshold_multiplier = kUpdateMultiplier;
    config.switch_threshold_multiplier = kSwitchMultiplier;
    config.theta_cardinality_max = false;
    config.validate();
    return config;
}

} // namespace kbsim
