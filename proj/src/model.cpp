#include "kbsim/model.hpp"

#include <cmath>
#include <algorithm>
#include <string>

#include "kbsim/rng.hpp"

namespace kbsim {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kRateMatchTol = 1e-9;

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

} // namespace

void ProblemInstance::validate() const {
    if (resources.empty()) throw config_error("instance needs at least one resource");
    if (contexts.empty()) throw config_error("instance needs at least one customer type");
    if (horizon < 1) throw config_error("horizon must be at least 1");

    const size_t d = contexts.front().features.size();
    for (size_t l = 0; l < contexts.size(); ++l) {
        const Context& c = contexts[l];
        if (c.features.size() != d)
            throw config_error("context feature vectors must share one dimension");
        if (!all_finite(c.features))
            throw config_error("context features must be finite");
        for (size_t m = l + 1; m < contexts.size(); ++m) {
            if (contexts[m].id == c.id)
                throw config_error("context ids must be unique");
        }
    }

    for (size_t i = 0; i < resources.size(); ++i) {
        const ResourceSpec& r = resources[i];
        const std::string tag = "resource " + std::to_string(i) + ": ";
        if (!(r.revenue > 0.0)) throw config_error(tag + "revenue must be positive");
        if (!(r.capacity > 0.0)) throw config_error(tag + "capacity must be positive");
        if (r.theta_space.empty()) throw config_error(tag + "theta_space must be non-empty");
        if (r.true_theta < 0 || r.true_theta >= static_cast<int>(r.theta_space.size()))
            throw config_error(tag + "true_theta out of range");
        for (const auto& theta : r.theta_space) {
            if (theta.size() != d) throw config_error(tag + "theta dimension mismatch");
            if (!all_finite(theta)) throw config_error(tag + "theta must be finite");
        }
    }

    if (total_rates.size() != contexts.size())
        throw config_error("total_rates must have one entry per customer type");
    double sum = 0.0;
    for (double l : total_rates) {
        if (!(l >= 0.0)) throw config_error("total_rates must be nonnegative");
        sum += l;
    }
    if (std::abs(sum - static_cast<double>(horizon)) > kRateMatchTol)
        throw config_error("total_rates must sum to the horizon");
    if (!advice_rates.empty() && advice_rates.size() != contexts.size())
        throw config_error("advice_rates must have one entry per customer type");
}

ArrivalSchedule ArrivalSchedule::from_rows(std::vector<std::vector<double>> rows,
                                           const ProblemInstance& instance) {
    const size_t L = instance.contexts.size();
    if (static_cast<int>(rows.size()) != instance.horizon)
        throw config_error("schedule must have one row per period");
    std::vector<double> column_sums(L, 0.0);
    for (const auto& row : rows) {
        if (row.size() != L) throw config_error("schedule row width must equal the type count");
        double s = 0.0;
        for (size_t j = 0; j < L; ++j) {
            if (!(row[j] >= 0.0 && row[j] <= 1.0))
                throw config_error("schedule entries must lie in [0, 1]");
            s += row[j];
            column_sums[j] += row[j];
        }
        if (std::abs(s - 1.0) > kRowSumTol)
            throw config_error("schedule rows must sum to 1");
    }
    for (size_t j = 0; j < L; ++j) {
        if (std::abs(column_sums[j] - instance.total_rates[j]) > kRateMatchTol)
            throw config_error("schedule column sums must match the instance total_rates");
    }
    return ArrivalSchedule(std::move(rows));
}

std::vector<std::vector<double>> ArrivalSchedule::expand_segments(
    const std::vector<ArrivalSegment>& segments, int horizon, int num_types) {
    if (segments.empty()) throw config_error("schedule needs at least one segment");
    double frac_sum = 0.0;
    for (const auto& seg : segments) {
        if (!(seg.fraction > 0.0)) throw config_error("segment fractions must be positive");
        if (static_cast<int>(seg.type_probs.size()) != num_types)
            throw config_error("segment distribution width must equal the type count");
        frac_sum += seg.fraction;
    }
    if (std::abs(frac_sum - 1.0) > 1e-9)
        throw config_error("segment fractions must sum to 1");

    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<size_t>(horizon));
    double cum = 0.0;
    int filled = 0;
    for (size_t k = 0; k < segments.size(); ++k) {
        cum += segments[k].fraction;
        int boundary = (k + 1 == segments.size())
                           ? horizon
                           : static_cast<int>(std::lround(cum * horizon));
        boundary = std::clamp(boundary, filled, horizon);
        for (; filled < boundary; ++filled) rows.push_back(segments[k].type_probs);
    }
    return rows;
}

ArrivalSchedule ArrivalSchedule::from_segments(const std::vector<ArrivalSegment>& segments,
                                               int horizon, const ProblemInstance& instance) {
    return from_rows(expand_segments(segments, horizon, instance.num_types()), instance);
}

std::vector<double> ArrivalSchedule::cumulative_rates(int t) const {
    if (t < 0 || t > horizon()) throw config_error("period out of range");
    std::vector<double> acc(rows_.empty() ? 0 : rows_.front().size(), 0.0);
    for (int s = 0; s < t; ++s) {
        for (size_t j = 0; j < acc.size(); ++j) acc[j] += rows_[static_cast<size_t>(s)][j];
    }
    return acc;
}

double purchase_prob(const Context& context, const std::vector<double>& theta) {
    if (theta.size() != context.features.size())
        throw config_error("theta dimension does not match the context features");
    double z = 0.0;
    for (size_t k = 0; k < theta.size(); ++k) z += theta[k] * context.features[k];
    return 1.0 / (1.0 + std::exp(-z));
}

OptimisticProb optimistic_prob(const Context& context,
                               const std::vector<std::vector<double>>& theta_space,
                               const std::vector<int>& omega) {
    if (omega.empty()) throw policy_error("confidence set exhausted");
    OptimisticProb best;
    for (int k : omega) {
        double p = purchase_prob(context, theta_space.at(static_cast<size_t>(k)));
        if (p > best.prob || best.theta_index < 0) {
            best.prob = p;
            best.theta_index = k;
        }
    }
    return best;
}

double psi(double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("psi argument must lie in [0, 1]");
    return std::expm1(u) / std::expm1(1.0);
}

std::vector<double> fit_logistic_mle(const std::vector<const Context*>& xs,
                                     const std::vector<int>& outcomes, int dim) {
    if (xs.size() != outcomes.size()) throw config_error("observation arrays must align");
    std::vector<double> theta(static_cast<size_t>(dim), 0.0);
    // Newton with a small ridge; the problems here are tiny and well separated.
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<double> grad(static_cast<size_t>(dim), 0.0);
        std::vector<std::vector<double>> hess(static_cast<size_t>(dim),
                                              std::vector<double>(static_cast<size_t>(dim), 0.0));
        for (size_t k = 0; k < static_cast<size_t>(dim); ++k) hess[k][k] = 1e-8;
        for (size_t o = 0; o < xs.size(); ++o) {
            const auto& x = xs[o]->features;
            double p = purchase_prob(*xs[o], theta);
            double w = p * (1.0 - p);
            for (size_t a = 0; a < static_cast<size_t>(dim); ++a) {
                grad[a] += (outcomes[o] - p) * x[a];
                for (size_t b = 0; b < static_cast<size_t>(dim); ++b) hess[a][b] += w * x[a] * x[b];
            }
        }
        // Solve hess * step = grad by Gaussian elimination with partial pivoting.
        std::vector<double> step = grad;
        for (size_t col = 0; col < static_cast<size_t>(dim); ++col) {
            size_t piv = col;
            for (size_t r = col + 1; r < static_cast<size_t>(dim); ++r) {
                if (std::abs(hess[r][col]) > std::abs(hess[piv][col])) piv = r;
            }
            std::swap(hess[piv], hess[col]);
            std::swap(step[piv], step[col]);
            for (size_t r = 0; r < static_cast<size_t>(dim); ++r) {
                if (r == col || hess[r][col] == 0.0) continue;
                double f = hess[r][col] / hess[col][col];
                for (size_t c = col; c < static_cast<size_t>(dim); ++c) hess[r][c] -= f * hess[col][c];
                step[r] -= f * step[col];
            }
        }
        double max_step = 0.0;
        for (size_t k = 0; k < static_cast<size_t>(dim); ++k) {
            step[k] /= hess[k][k];
            // Guard against separation blowing the fit up.
            step[k] = std::clamp(step[k], -4.0, 4.0);
            theta[k] += step[k];
            max_step = std::max(max_step, std::abs(step[k]));
        }
        if (max_step < 1e-10) break;
    }
    return theta;
}

std::vector<std::vector<double>> build_theta_grid(const std::vector<Context>& contexts,
                                                  const std::vector<double>& type_weights,
                                                  const std::vector<double>& true_theta,
                                                  int history_obs, int grid_points,
                                                  double spacing, std::uint64_t seed) {
    if (contexts.empty()) throw config_error("grid builder needs contexts");
    if (type_weights.size() != contexts.size())
        throw config_error("grid builder needs one weight per type");
    if (history_obs < 1 || grid_points < 1) throw config_error("grid builder sizes must be positive");
    const int dim = static_cast<int>(contexts.front().features.size());

    double wsum = 0.0;
    for (double w : type_weights) wsum += w;
    if (!(wsum > 0.0)) throw config_error("grid builder weights must have positive mass");

    RngStream rng(seed);
    std::vector<const Context*> xs;
    std::vector<int> outcomes;
    xs.reserve(static_cast<size_t>(history_obs));
    outcomes.reserve(static_cast<size_t>(history_obs));
    for (int o = 0; o < history_obs; ++o) {
        double u = rng.next_double() * wsum;
        size_t l = 0;
        for (; l + 1 < contexts.size(); ++l) {
            if (u < type_weights[l]) break;
            u -= type_weights[l];
        }
        xs.push_back(&contexts[l]);
        double p = purchase_prob(contexts[l], true_theta);
        outcomes.push_back(rng.next_double() < p ? 1 : 0);
    }
    std::vector<double> mle = fit_logistic_mle(xs, outcomes, dim);

    std::vector<std::vector<double>> grid;
    std::vector<int> offsets(static_cast<size_t>(dim), 0);
    const int total = static_cast<int>(std::pow(grid_points, dim));
    for (int g = 0; g < total; ++g) {
        int rem = g;
        std::vector<double> theta = mle;
        for (int k = 0; k < dim; ++k) {
            int o = rem % grid_points;
            rem /= grid_points;
            theta[static_cast<size_t>(k)] += spacing * (o - (grid_points - 1) / 2.0);
        }
        grid.push_back(std::move(theta));
    }
    // The MLE point must be present even when grid_points is even.
    bool has_mle = false;
    for (const auto& th : grid) {
        double diff = 0.0;
        for (int k = 0; k < dim; ++k) diff = std::max(diff, std::abs(th[static_cast<size_t>(k)] - mle[static_cast<size_t>(k)]));
        if (diff < 1e-12) { has_mle = true; break; }
    }
    if (!has_mle) grid.push_back(mle);
    return grid;
}

} // namespace kbsim
