#pragma once

#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "riftlab/metrics.hpp"
#include "riftlab/mrc.hpp"
#include "riftlab/network.hpp"

namespace riftlab {

struct FineTuneConfig {
    double lr = 0.001;
    int epochs = 10;
    int decay_at_epoch = 5;  // 0-based epoch at which lr drops once
    double decay_factor = 10.0;
    double momentum = 0.9;
    double weight_decay = 5e-4;  // l2 factor, applied to the unfrozen module only
    int batch_size = 32;
    std::uint64_t seed = 1;

    void validate() const {
        if (epochs < 0) throw std::invalid_argument("FineTuneConfig: epochs must be >= 0");
        if (epochs > 0 && decay_at_epoch >= epochs)
            throw std::invalid_argument("FineTuneConfig: decay_at_epoch must precede epochs");
        if (decay_factor <= 0.0) throw std::invalid_argument("FineTuneConfig: decay_factor must be > 0");
        if (batch_size <= 0) throw std::invalid_argument("FineTuneConfig: batch_size must be > 0");
    }
};

// Clean fine-tuning of the given modules with everything else frozen.
// Returns the epoch checkpoint of highest held-out standard accuracy; the
// starting weights are evaluated as a candidate, so the result never scores
// below them.
inline ParamSet finetune(const NetworkSpec& spec, const ParamSet& theta_at,
                         const std::vector<std::string>& module_set, const Dataset& train_std,
                         const Dataset& held_out, const FineTuneConfig& cfg) {
    cfg.validate();
    if (module_set.empty()) throw std::invalid_argument("finetune: empty module set");
    spec.validate();
    train_std.validate(spec.num_classes);
    held_out.validate(spec.num_classes);
    FreezeMask mask = FreezeMask::all_except(spec, module_set);

    Rng rng(cfg.seed);
    ParamSet params = theta_at;
    SgdState state;

    ParamSet best = theta_at;
    double best_acc = eval_std(spec, theta_at, held_out);

    std::size_t n = train_std.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = epoch >= cfg.decay_at_epoch ? cfg.lr / cfg.decay_factor : cfg.lr;
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            std::size_t count = std::min<std::size_t>(cfg.batch_size, n - start);
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + count);
            Dataset batch = gather(train_std, idx);
            BackwardResult br = backward(spec, params, batch.inputs, batch.labels);
            params = sgd_step(params, br.grads, lr, cfg.momentum, cfg.weight_decay, mask, state);
        }
        double acc = eval_std(spec, params, held_out);
        if (acc > best_acc) {
            best_acc = acc;
            best = params;
        }
    }
    return best;
}

// theta_alpha = (1-alpha)*theta_at + alpha*theta_ft, elementwise over every
// entry. The endpoints return exact copies.
inline ParamSet interpolate(const ParamSet& theta_at, const ParamSet& theta_ft, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("interpolate: alpha must be in [0,1]");
    if (theta_at.entries.size() != theta_ft.entries.size())
        throw std::invalid_argument("interpolate: parameter sets differ in layout");
    if (alpha == 0.0) return theta_at;
    if (alpha == 1.0) return theta_ft;

    ParamSet out = theta_at;
    for (auto& [name, p] : out.entries) {
        const LayerParams& q = theta_ft.at(name);
        if (!q.weight.same_shape(p.weight) || q.bias.has_value() != p.bias.has_value())
            throw std::invalid_argument("interpolate: shape mismatch for '" + name + "'");
        for (std::size_t i = 0; i < p.weight.size(); ++i)
            p.weight[i] = (1.0 - alpha) * p.weight[i] + alpha * q.weight[i];
        if (p.bias)
            for (std::size_t i = 0; i < p.bias->size(); ++i)
                (*p.bias)[i] = (1.0 - alpha) * (*p.bias)[i] + alpha * (*q.bias)[i];
    }
    return out;
}

struct SweepRecord {
    double alpha = 0.0;
    double std_acc = 0.0;
    double adv_acc = 0.0;
};

struct InterpolationSweep {
    std::vector<SweepRecord> records;
    double alpha_star = 0.0;
    double tolerance = 0.1;  // robustness slack, accuracy percentage points
};

// The feasible alpha of maximal standard accuracy. Feasible means adversarial
// accuracy within `tolerance` points of the alpha=0 entry; ties prefer the
// larger alpha. alpha=0 is feasible by construction, so a result always
// exists.
inline double select_alpha(const std::vector<SweepRecord>& records, double tolerance) {
    if (records.empty()) throw std::invalid_argument("select_alpha: no records");
    double base_adv = records.front().adv_acc;
    double best_alpha = records.front().alpha;
    double best_std = records.front().std_acc;
    for (const SweepRecord& r : records) {
        if (r.adv_acc < base_adv - tolerance) continue;
        if (r.std_acc >= best_std) {
            best_std = r.std_acc;
            best_alpha = r.alpha;
        }
    }
    return best_alpha;
}

// Evaluate the interpolation path on the alpha grid {0, step, ..., 1} and
// pick alpha*. The same three attack seeds are reused at every alpha, so the
// alpha=0 row doubles as the baseline evaluation of theta_at.
inline InterpolationSweep sweep_and_select(const NetworkSpec& spec, const ParamSet& theta_at,
                                           const ParamSet& theta_ft, const Dataset& data_eval,
                                           const AttackConfig& attack_cfg,
                                           const std::array<std::uint64_t, 3>& eval_seeds,
                                           double tolerance = 0.1, double alpha_step = 0.05) {
    if (!(alpha_step > 0.0 && alpha_step <= 1.0))
        throw std::invalid_argument("sweep_and_select: alpha_step must be in (0,1]");
    long divisions = std::lround(1.0 / alpha_step);
    if (divisions < 1) divisions = 1;

    InterpolationSweep sweep;
    sweep.tolerance = tolerance;
    for (long i = 0; i <= divisions; ++i) {
        double alpha = static_cast<double>(i) / static_cast<double>(divisions);
        ParamSet theta_alpha = interpolate(theta_at, theta_ft, alpha);
        SweepRecord rec;
        rec.alpha = alpha;
        rec.std_acc = eval_std(spec, theta_alpha, data_eval);
        rec.adv_acc = eval_adv(spec, theta_alpha, data_eval, attack_cfg, eval_seeds);
        sweep.records.push_back(rec);
    }
    sweep.alpha_star = select_alpha(sweep.records, tolerance);
    return sweep;
}

struct RiftResult {
    ParamSet theta_star;
    ParamSet theta_ft;
    MRCReport report;
    InterpolationSweep sweep;
    std::vector<std::string> selected_modules;
};

// Maps a finished criticality scan to the modules to fine-tune.
using ModuleSelector = std::function<std::vector<std::string>(const MRCReport&)>;

// The three-step pipeline: criticality scan, clean fine-tuning of the
// least-critical module (or whatever the selector picks), then interpolation
// with robustness-constrained selection of alpha*.
inline RiftResult rift_pipeline(const NetworkSpec& spec, const ParamSet& theta_at,
                                const Dataset& train_std, const Dataset& data_eval,
                                const MRCConfig& mrc_cfg, const FineTuneConfig& ft_cfg,
                                const AttackConfig& attack_cfg, std::uint64_t run_seed,
                                const ModuleSelector& selector = {}, double tolerance = 0.1,
                                double alpha_step = 0.05) {
    RiftResult res;
    Rng scan_rng(Rng::mix(run_seed, 0x6d7263ULL));
    res.report = mrc_scan(spec, theta_at, train_std, mrc_cfg, scan_rng);
    res.selected_modules =
        selector ? selector(res.report) : select_non_robust_critical(res.report, 1);
    res.theta_ft = finetune(spec, theta_at, res.selected_modules, train_std, data_eval, ft_cfg);
    res.sweep = sweep_and_select(spec, theta_at, res.theta_ft, data_eval, attack_cfg,
                                 adv_eval_seeds(run_seed), tolerance, alpha_step);
    res.theta_star = interpolate(theta_at, res.theta_ft, res.sweep.alpha_star);
    return res;
}

// Plot data: alpha, standard accuracy, adversarial accuracy; four decimals.
inline std::string sweep_to_tsv(const InterpolationSweep& sweep) {
    std::ostringstream os;
    char buf[128];
    for (const SweepRecord& r : sweep.records) {
        std::snprintf(buf, sizeof(buf), "%.4f\t%.4f\t%.4f\n", r.alpha, r.std_acc, r.adv_acc);
        os << buf;
    }
    return os.str();
}

}  // namespace riftlab
