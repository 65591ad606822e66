#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "lsrk/covariance.hpp"
#include "lsrk/rng.hpp"

namespace lsrk {

inline std::vector<double> default_lambda_grid() { return logspace(1e-6, 1.0, 10); }

struct LambdaSpec {
    bool cross_validate = true;
    double value = 1e-3;
    std::vector<double> grid = default_lambda_grid();

    static LambdaSpec fixed(double v) {
        if (!(v > 0.0)) throw std::invalid_argument("LambdaSpec: lambda must be positive");
        return LambdaSpec{false, v, {}};
    }
    static LambdaSpec cv(std::vector<double> grid = default_lambda_grid()) {
        if (grid.empty()) throw std::invalid_argument("LambdaSpec: empty CV grid");
        return LambdaSpec{true, grid.front(), std::move(grid)};
    }
};

struct SmoothingConfig {
    LambdaSpec lambda_mean_y = LambdaSpec::cv();
    LambdaSpec lambda_mean_x = LambdaSpec::cv();
    LambdaSpec lambda_xx = LambdaSpec::cv();
    LambdaSpec lambda_xz = LambdaSpec::cv();
    LambdaSpec lambda_yx = LambdaSpec::cv();
    LambdaSpec lambda_yz = LambdaSpec::cv();
    int cv_folds = 5;
    std::uint64_t seed = 1;
    // Optional bandwidth selection jointly with lambda: every candidate theta
    // is scored by the held-out losses of all smoothing families and the
    // winner is shared by every process. Off by default.
    bool select_theta = false;
    std::vector<double> theta_grid{0.05, 0.1, 0.2};

    bool any_cv() const {
        return lambda_mean_y.cross_validate || lambda_mean_x.cross_validate || lambda_xx.cross_validate ||
               lambda_xz.cross_validate || lambda_yx.cross_validate || lambda_yz.cross_validate || select_theta;
    }
};

struct CvFamilyDiagnostics {
    std::vector<double> grid;
    std::vector<double> mean_heldout_loss;
    std::vector<double> heldout_loss_se;  // fold-to-fold standard error of the mean
    double chosen = 0.0;
};

struct ResolvedSmoothing {
    ResolvedLambdas lambdas;
    KernelSet kernels;
    std::map<std::string, CvFamilyDiagnostics> diagnostics;
};

namespace detail {

// Subject-level fold partition with pooled-order index bookkeeping.
struct FoldPlan {
    int folds = 0;
    std::vector<int> fold_of_subject;
    std::vector<int> subject_start;  // pooled offset of each subject

    struct Split {
        std::vector<int> train_idx;  // pooled indices
        std::vector<int> val_idx;
        std::vector<int> train_groups;
        std::vector<int> val_groups;
        std::vector<double> train_points;
        std::vector<double> val_points;
    };
    std::vector<Split> splits;
};

inline FoldPlan make_fold_plan(const LongitudinalDataset& data, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("cross-validation: need at least 2 folds");
    if (folds > data.n()) throw std::invalid_argument("cross-validation: more folds than subjects");
    FoldPlan plan;
    plan.folds = folds;
    plan.fold_of_subject.resize(static_cast<std::size_t>(data.n()));
    const std::vector<double> points = pooled_times(data);
    plan.subject_start.resize(static_cast<std::size_t>(data.n() + 1));
    plan.subject_start[0] = 0;
    for (int i = 0; i < data.n(); ++i)
        plan.subject_start[static_cast<std::size_t>(i + 1)] =
            plan.subject_start[static_cast<std::size_t>(i)] + data.subject(i).m();

    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<int> order(static_cast<std::size_t>(data.n()));
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng = make_engine(child_seed(seed, 0xCFull + attempt));
        std::shuffle(order.begin(), order.end(), rng);
        for (int pos = 0; pos < data.n(); ++pos)
            plan.fold_of_subject[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % folds;

        std::vector<int> obs_per_fold(static_cast<std::size_t>(folds), 0);
        for (int i = 0; i < data.n(); ++i)
            obs_per_fold[static_cast<std::size_t>(plan.fold_of_subject[static_cast<std::size_t>(i)])] += data.subject(i).m();
        if (std::all_of(obs_per_fold.begin(), obs_per_fold.end(), [](int c) { return c > 0; })) break;
        if (attempt == 1) throw input_error("cross-validation: a fold has no observations");
    }

    plan.splits.resize(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        auto& split = plan.splits[static_cast<std::size_t>(f)];
        for (int i = 0; i < data.n(); ++i) {
            const bool held_out = plan.fold_of_subject[static_cast<std::size_t>(i)] == f;
            auto& idx = held_out ? split.val_idx : split.train_idx;
            auto& groups = held_out ? split.val_groups : split.train_groups;
            auto& pts = held_out ? split.val_points : split.train_points;
            groups.push_back(data.subject(i).m());
            for (int k = plan.subject_start[static_cast<std::size_t>(i)]; k < plan.subject_start[static_cast<std::size_t>(i + 1)]; ++k) {
                idx.push_back(k);
                pts.push_back(points[static_cast<std::size_t>(k)]);
            }
        }
    }
    return plan;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& full, const std::vector<int>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = full(idx[i]);
    return out;
}

struct FamilyMember {
    Kernel kernel;
    Eigen::VectorXd g;  // full pooled-order targets
};

// Per-fold solver/prediction-operator cache shared across families.
struct FoldCache {
    std::map<std::string, std::shared_ptr<RidgeSolver>> solvers;
    std::map<std::string, Eigen::MatrixXd> predictors;
};

struct FamilyScores {
    std::vector<double> mean;                   // held-out loss per grid value
    std::vector<double> se;                     // fold-to-fold standard error of each mean
    std::vector<std::vector<double>> per_fold;  // [grid value][fold]
};

// Held-out weighted loss per grid value for one family of targets.
inline FamilyScores cv_scores(const FoldPlan& plan, std::vector<FoldCache>& caches,
                              const std::vector<FamilyMember>& members,
                              const std::vector<double>& grid, const SmootherOptions& options) {
    const std::size_t folds = plan.splits.size();
    // per_fold[li][f]: loss of grid value li on fold f, averaged over members.
    std::vector<std::vector<double>> per_fold(grid.size(), std::vector<double>(folds, 0.0));
    for (std::size_t f = 0; f < folds; ++f) {
        const auto& split = plan.splits[f];
        auto& cache = caches[f];
        // Group members by kernel so each factorization serves all of them.
        std::map<std::string, std::vector<const FamilyMember*>> by_kernel;
        for (const auto& m : members) by_kernel[m.kernel.key()].push_back(&m);
        for (auto& [key, group] : by_kernel) {
            auto sit = cache.solvers.find(key);
            if (sit == cache.solvers.end()) {
                auto solver = std::make_shared<RidgeSolver>(split.train_points, split.train_groups,
                                                            group.front()->kernel, options);
                sit = cache.solvers.emplace(key, std::move(solver)).first;
            }
            const RidgeSolver& solver = *sit->second;
            auto pit = cache.predictors.find(key);
            if (pit == cache.predictors.end())
                pit = cache.predictors.emplace(key, solver.prediction_operator(split.val_points)).first;
            const Eigen::MatrixXd& op = pit->second;
            for (std::size_t li = 0; li < grid.size(); ++li) {
                const auto factor = solver.factorize(grid[li]);
                for (const FamilyMember* m : group) {
                    const SmoothingFit fit = solver.fit(factor, gather(m->g, split.train_idx));
                    const Eigen::VectorXd predicted = solver.predict(op, fit.estimate.coefficients);
                    RawTargets val{gather(m->g, split.val_idx), split.val_groups};
                    per_fold[li][f] += weighted_loss_from_values(predicted, val) / members.size();
                }
            }
        }
    }
    FamilyScores out;
    out.mean.resize(grid.size());
    out.se.resize(grid.size());
    for (std::size_t li = 0; li < grid.size(); ++li) {
        double mean = 0.0;
        for (double v : per_fold[li]) mean += v;
        mean /= static_cast<double>(folds);
        double var = 0.0;
        for (double v : per_fold[li]) var += (v - mean) * (v - mean);
        out.mean[li] = mean;
        out.se[li] = folds > 1 ? std::sqrt(var / (folds - 1) / folds) : 0.0;
    }
    out.per_fold = std::move(per_fold);
    return out;
}

// Smallest mean held-out loss; ties go to the larger lambda.
inline std::size_t pick_index(const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] <= scores[best]) best = i;
    return best;
}

// Joint pick for the families sharing one smoothing operator: each family's
// curve is normalized by its own minimum (losses live on very different
// scales) and the normalized curves are summed. The pointwise linear solve
// divides smoothed covariances by smoothed covariances, so its smoothing bias
// largely cancels when the entries pass through a common operator; selecting
// one lambda per group preserves that, while independent argmins wander apart
// inside the flat basin of each family's curve.
inline std::size_t pick_index_joint(const std::vector<const FamilyScores*>& group) {
    std::vector<double> combined(group.front()->mean.size(), 0.0);
    for (const FamilyScores* scores : group) {
        const double floor = *std::min_element(scores->mean.begin(), scores->mean.end());
        for (std::size_t i = 0; i < combined.size(); ++i)
            combined[i] += scores->mean[i] / std::max(floor, 1e-300);
    }
    return pick_index(combined);
}

inline Eigen::VectorXd mean_target_values(const LongitudinalDataset& data, MeanTarget target, int p) {
    Eigen::VectorXd g(data.total_observations());
    int k = 0;
    for (const auto& s : data.subjects())
        for (int j = 0; j < s.m(); ++j, ++k)
            g(k) = (target == MeanTarget::response) ? s.v[static_cast<std::size_t>(j)] : s.u(p, j);
    return g;
}

// One full lambda-resolution pass at a fixed kernel set. best_loss carries the
// held-out loss of every family that was scored (used for bandwidth selection).
struct CvPass {
    ResolvedLambdas lambdas;
    std::map<std::string, CvFamilyDiagnostics> diagnostics;
    std::map<std::string, double> best_loss;
};

// One family to resolve: its spec, its targets, and where the result goes.
struct FamilyTask {
    std::string name;
    const LambdaSpec* spec;
    std::vector<FamilyMember> members;
    double* slot;
    FamilyScores scores;
    std::vector<double> grid;
    bool scored = false;
};

// Scores and resolves a phase (mean families, then covariance families).
// Cross-validated families with a common grid are resolved to one shared
// lambda via the joint normalized score.
inline void resolve_phase(std::vector<FamilyTask>& tasks, const FoldPlan& plan,
                          std::vector<FoldCache>& caches, const SmootherOptions& options,
                          bool score_fixed_families, CvPass& pass) {
    for (FamilyTask& task : tasks) {
        const bool needs_pick = task.spec->cross_validate && task.spec->grid.size() > 1;
        if (!needs_pick && !score_fixed_families) {
            *task.slot = task.spec->cross_validate ? task.spec->grid.front() : task.spec->value;
            continue;
        }
        task.grid = task.spec->cross_validate ? task.spec->grid : std::vector<double>{task.spec->value};
        std::sort(task.grid.begin(), task.grid.end());
        task.scores = cv_scores(plan, caches, task.members, task.grid, options);
        task.scored = true;
        pass.best_loss[task.name] = *std::min_element(task.scores.mean.begin(), task.scores.mean.end());
        if (!task.spec->cross_validate) *task.slot = task.spec->value;
        if (task.spec->cross_validate && task.spec->grid.size() == 1) *task.slot = task.grid.front();
    }

    // Joint resolution over the cross-validated families sharing a grid.
    std::map<std::vector<double>, std::vector<FamilyTask*>> by_grid;
    for (FamilyTask& task : tasks)
        if (task.scored && task.spec->cross_validate && task.grid.size() > 1)
            by_grid[task.grid].push_back(&task);
    for (auto& [grid, group] : by_grid) {
        std::vector<const FamilyScores*> scores;
        for (FamilyTask* task : group) scores.push_back(&task->scores);
        const std::size_t best = group.size() > 1 ? pick_index_joint(scores) : pick_index(group.front()->scores.mean);
        for (FamilyTask* task : group) {
            *task->slot = grid[best];
            pass.diagnostics[task->name] =
                CvFamilyDiagnostics{task->grid, task->scores.mean, task->scores.se, grid[best]};
        }
    }
}

inline CvPass run_cv_pass(const LongitudinalDataset& data, const KernelSet& kernels,
                          const SmoothingConfig& config, const FoldPlan& plan,
                          const SmootherOptions& options, bool score_fixed_families) {
    CvPass pass;
    std::vector<FoldCache> caches(plan.splits.size());

    // Phase 1: mean functions.
    {
        std::vector<FamilyTask> tasks;
        tasks.push_back({"mean_y",
                         &config.lambda_mean_y,
                         {{kernels.y, mean_target_values(data, MeanTarget::response, 0)}},
                         &pass.lambdas.mean_y,
                         {},
                         {},
                         false});
        if (data.d1() > 0) {
            std::vector<FamilyMember> members;
            for (int p = 0; p < data.d1(); ++p)
                members.push_back(
                    {kernels.x[static_cast<std::size_t>(p)], mean_target_values(data, MeanTarget::predictor, p)});
            tasks.push_back({"mean_x", &config.lambda_mean_x, std::move(members), &pass.lambdas.mean_x, {}, {}, false});
        } else {
            pass.lambdas.mean_x = config.lambda_mean_x.value;
        }
        resolve_phase(tasks, plan, caches, options, score_fixed_families, pass);
    }

    // Phase 2: covariance targets, centered with the frozen full-data means.
    const bool need_cov_targets = score_fixed_families || config.lambda_xx.cross_validate ||
                                  config.lambda_xz.cross_validate || config.lambda_yx.cross_validate ||
                                  config.lambda_yz.cross_validate;
    pass.lambdas.xx = config.lambda_xx.cross_validate ? config.lambda_xx.grid.front() : config.lambda_xx.value;
    pass.lambdas.xz = config.lambda_xz.cross_validate ? config.lambda_xz.grid.front() : config.lambda_xz.value;
    pass.lambdas.yx = config.lambda_yx.cross_validate ? config.lambda_yx.grid.front() : config.lambda_yx.value;
    pass.lambdas.yz = config.lambda_yz.cross_validate ? config.lambda_yz.grid.front() : config.lambda_yz.value;
    if (!need_cov_targets) return pass;

    CenteredData centered;
    {
        const std::vector<double> points = pooled_times(data);
        const std::vector<int> groups = data.group_sizes();
        RidgeSolver sy(points, groups, kernels.y, options);
        const Eigen::VectorXd mu_y_at =
            sy.fit(sy.factorize(pass.lambdas.mean_y), mean_target_values(data, MeanTarget::response, 0))
                .fitted_at_knots;
        std::vector<Eigen::VectorXd> mu_x_at;
        for (int p = 0; p < data.d1(); ++p) {
            RidgeSolver sx(points, groups, kernels.x[static_cast<std::size_t>(p)], options);
            mu_x_at.push_back(
                sx.fit(sx.factorize(pass.lambdas.mean_x), mean_target_values(data, MeanTarget::predictor, p))
                    .fitted_at_knots);
        }
        centered = center_observations(data, mu_y_at, mu_x_at, scalar_means(data));
    }

    auto family_members = [&](CovPair::Family family) {
        std::vector<FamilyMember> members;
        for (const CovPair& pair : covariance_pairs(data.d1(), data.d2()))
            if (pair.family == family)
                members.push_back({kernel_for_pair(kernels, pair), raw_target_values(centered, pair)});
        return members;
    };

    std::vector<FamilyTask> tasks;
    if (data.d1() > 0)
        tasks.push_back({"xx", &config.lambda_xx, family_members(CovPair::Family::xx), &pass.lambdas.xx, {}, {}, false});
    if (data.d1() > 0 && data.d2() > 0)
        tasks.push_back({"xz", &config.lambda_xz, family_members(CovPair::Family::xz), &pass.lambdas.xz, {}, {}, false});
    if (data.d1() > 0)
        tasks.push_back({"yx", &config.lambda_yx, family_members(CovPair::Family::yx), &pass.lambdas.yx, {}, {}, false});
    if (data.d2() > 0)
        tasks.push_back({"yz", &config.lambda_yz, family_members(CovPair::Family::yz), &pass.lambdas.yz, {}, {}, false});
    resolve_phase(tasks, plan, caches, options, score_fixed_families, pass);
    return pass;
}

}  // namespace detail

// Subject-level K-fold selection of every cross-validated smoothing parameter.
// Mean-function lambdas are resolved first; the means are then fitted on the
// full data and frozen before the covariance-target lambdas are scored.
// Within each phase, cross-validated families sharing a grid resolve to one
// jointly selected lambda (see pick_index_joint). With select_theta on, each
// candidate bandwidth runs the same pass and is scored by the sum over
// families of its best held-out loss, each normalized by the family's best
// value across candidates (families and processes are coupled through the
// product kernels, so the bandwidth is chosen once and shared).
inline ResolvedSmoothing select_lambdas_cv(const LongitudinalDataset& data, const KernelSet& kernels,
                                           const SmoothingConfig& config,
                                           const SmootherOptions& options = SmootherOptions{}) {
    const auto plan = detail::make_fold_plan(data, config.cv_folds, config.seed);

    ResolvedSmoothing out;
    if (!config.select_theta) {
        out.kernels = kernels;
        detail::CvPass pass = detail::run_cv_pass(data, kernels, config, plan, options, false);
        out.lambdas = std::move(pass.lambdas);
        out.diagnostics = std::move(pass.diagnostics);
        return out;
    }

    if (config.theta_grid.empty()) throw std::invalid_argument("cross-validation: empty theta grid");
    std::vector<detail::CvPass> passes;
    std::vector<std::string> family_names;
    for (double theta : config.theta_grid) {
        const KernelSet candidate = KernelSet::defaults(data.d1(), theta);
        passes.push_back(detail::run_cv_pass(data, candidate, config, plan, options, true));
        if (family_names.empty())
            for (const auto& [name, loss] : passes.back().best_loss) family_names.push_back(name);
    }

    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t ti = 0; ti < passes.size(); ++ti) {
        double score = 0.0;
        for (const auto& name : family_names) {
            double floor = std::numeric_limits<double>::infinity();
            for (const auto& pass : passes) floor = std::min(floor, pass.best_loss.at(name));
            score += passes[ti].best_loss.at(name) / std::max(floor, 1e-300);
        }
        if (score < best_score) {
            best_score = score;
            best = ti;
        }
    }
    out.kernels = KernelSet::defaults(data.d1(), config.theta_grid[best]);
    out.lambdas = passes[best].lambdas;
    out.diagnostics = passes[best].diagnostics;
    return out;
}

}  // namespace lsrk
