#pragma once

#include <array>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "riftlab/attack.hpp"
#include "riftlab/data.hpp"
#include "riftlab/network.hpp"

namespace riftlab {

// Standard test accuracy, in percent.
inline double eval_std(const NetworkSpec& spec, const ParamSet& params, const Dataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("eval_std: empty dataset");
    return accuracy_percent(forward(spec, params, ds.inputs), ds.labels);
}

// Worst accuracy over three independently seeded PGD runs (random init on).
inline double eval_adv(const NetworkSpec& spec, const ParamSet& params, const Dataset& ds,
                       const AttackConfig& cfg, const std::array<std::uint64_t, 3>& seeds) {
    if (ds.size() == 0) throw std::invalid_argument("eval_adv: empty dataset");
    AttackConfig attack = cfg.with_rand_init(true);
    double worst = 100.0;
    for (std::uint64_t seed : seeds) {
        Rng rng(seed);
        Tensor adv = pgd_attack(spec, params, ds.inputs, ds.labels, attack, rng);
        double acc = accuracy_percent(forward(spec, params, adv), ds.labels);
        worst = std::min(worst, acc);
    }
    return worst;
}

struct OodCell {
    CorruptionKind kind;
    int severity;
    double acc;
};

struct OodResult {
    std::vector<OodCell> cells;
    double mean_acc = 0.0;

    double kind_mean(CorruptionKind kind) const {
        double sum = 0.0;
        std::size_t count = 0;
        for (const OodCell& c : cells)
            if (c.kind == kind) {
                sum += c.acc;
                ++count;
            }
        return count ? sum / static_cast<double>(count) : 0.0;
    }
};

// Accuracy averaged over corrupted copies of the test set. The default grid
// is every kind at severities 1..5.
inline OodResult eval_ood(const NetworkSpec& spec, const ParamSet& params, const Dataset& ds,
                          std::uint64_t seed,
                          const std::vector<CorruptionSpec>& specs = all_corruptions()) {
    if (specs.empty()) throw std::invalid_argument("eval_ood: no corruption specs");
    OodResult res;
    double sum = 0.0;
    for (const CorruptionSpec& c : specs) {
        std::uint64_t cell_seed =
            Rng::mix(seed, static_cast<std::uint64_t>(c.kind) * 16 + static_cast<std::uint64_t>(c.severity));
        Dataset corrupted = corrupt(ds, c, cell_seed);
        double acc = eval_std(spec, params, corrupted);
        res.cells.push_back({c.kind, c.severity, acc});
        sum += acc;
    }
    res.mean_acc = sum / static_cast<double>(specs.size());
    return res;
}

struct MetricsReport {
    double std_acc = 0.0;
    double adv_acc = 0.0;
    OodResult ood;
};

inline std::array<std::uint64_t, 3> adv_eval_seeds(std::uint64_t run_seed) {
    return {Rng::mix(run_seed, 101), Rng::mix(run_seed, 102), Rng::mix(run_seed, 103)};
}

// Full Std/OOD/Adv evaluation with seeds derived from one run seed.
inline MetricsReport evaluate_all(const NetworkSpec& spec, const ParamSet& params, const Dataset& ds,
                                  const AttackConfig& cfg, std::uint64_t run_seed) {
    MetricsReport r;
    r.std_acc = eval_std(spec, params, ds);
    r.adv_acc = eval_adv(spec, params, ds, cfg, adv_eval_seeds(run_seed));
    r.ood = eval_ood(spec, params, ds, Rng::mix(run_seed, 100));
    return r;
}

inline std::string format_metrics(const MetricsReport& r) {
    char buf[128];
    std::ostringstream os;
    std::snprintf(buf, sizeof(buf), "std_acc\t%.4f\n", r.std_acc);
    os << buf;
    std::snprintf(buf, sizeof(buf), "adv_acc\t%.4f\n", r.adv_acc);
    os << buf;
    std::snprintf(buf, sizeof(buf), "ood_acc\t%.4f\n", r.ood.mean_acc);
    os << buf;
    for (CorruptionKind k : {CorruptionKind::gaussian_noise, CorruptionKind::box_blur,
                             CorruptionKind::contrast, CorruptionKind::brightness}) {
        std::snprintf(buf, sizeof(buf), "ood.%s\t%.4f\n", corruption_kind_name(k), r.ood.kind_mean(k));
        os << buf;
    }
    return os.str();
}

}  // namespace riftlab
