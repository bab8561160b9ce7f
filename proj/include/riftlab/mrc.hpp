#pragma once

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "riftlab/attack.hpp"
#include "riftlab/metrics.hpp"
#include "riftlab/network.hpp"

namespace riftlab {

// Weight-perturbation constraint and ascent schedule for module criticality.
struct MRCConfig {
    double eps_w = 0.1;   // perturbation radius as a fraction of the module norm
    int norm_p = 2;       // only the Euclidean ball is supported
    int steps_T = 10;     // ascent epochs
    double gamma = 1.0;   // ascent rate
    AttackConfig attack_cfg;
    bool project_and_continue = false;  // keep ascending after a projection
    int batch_size = 0;                 // 0 = whole adversarial set per step

    void validate() const {
        if (eps_w < 0.0) throw std::invalid_argument("MRCConfig: eps_w must be >= 0");
        if (norm_p != 2) throw std::invalid_argument("MRCConfig: only norm_p = 2 is supported");
        if (steps_T < 0) throw std::invalid_argument("MRCConfig: steps_T must be >= 0");
        if (gamma <= 0.0) throw std::invalid_argument("MRCConfig: gamma must be > 0");
        if (batch_size < 0) throw std::invalid_argument("MRCConfig: batch_size must be >= 0");
        attack_cfg.validate();
    }
};

struct MRCRecord {
    std::string module_name;
    double mrc_value = 0.0;
    double robust_acc_before = 0.0;
    double robust_acc_after = 0.0;
    double robust_acc_drop = 0.0;
    std::uint64_t forward_backward_count = 0;
};

struct MRCReport {
    std::vector<MRCRecord> records;
};

// PGD adversarial copy of the dataset, generated once against the given
// weights and frozen thereafter.
inline Dataset build_adv_set(const NetworkSpec& spec, const ParamSet& theta_at, const Dataset& data,
                             const AttackConfig& cfg, Rng& rng) {
    if (data.size() == 0) throw std::invalid_argument("build_adv_set: empty dataset");
    Dataset adv = data;
    adv.inputs = pgd_attack(spec, theta_at, data.inputs, data.labels, cfg, rng);
    return adv;
}

namespace detail {

// The module's weight and bias as one flat vector, for joint norm/projection.
inline Tensor concat_module(const LayerParams& p) {
    std::size_t n = p.weight.size() + (p.bias ? p.bias->size() : 0);
    Tensor out({n});
    std::size_t at = 0;
    for (double v : p.weight.values()) out[at++] = v;
    if (p.bias)
        for (double v : p.bias->values()) out[at++] = v;
    return out;
}

inline void split_module(const Tensor& flat, LayerParams& p) {
    std::size_t at = 0;
    for (double& v : p.weight.values()) v = flat[at++];
    if (p.bias)
        for (double& v : p.bias->values()) v = flat[at++];
}

}  // namespace detail

struct MrcResult {
    double mrc_value = 0.0;
    ParamSet perturbed;                     // highest-loss iterate (zero perturbation included)
    std::uint64_t forward_backward_count = 0;
};

// Worst-case loss increase on the fixed adversarial set when only one
// module's weights move inside the relative L2 ball. Gradient ascent per
// batch; the constraint is checked after each epoch, and a violating iterate
// is projected onto the sphere, after which the ascent stops unless
// project_and_continue is set.
inline MrcResult mrc_of_module(const NetworkSpec& spec, const ParamSet& theta_at,
                               const std::string& module_name, const Dataset& d_adv,
                               const MRCConfig& cfg) {
    cfg.validate();
    if (d_adv.size() == 0) throw std::invalid_argument("mrc_of_module: empty adversarial set");
    const LayerSpec& layer = spec.layer(module_name);
    if (!layer.parameterized())
        throw std::invalid_argument("mrc_of_module: '" + module_name + "' has no parameters");

    MrcResult res;
    double base_loss = mean_loss(spec, theta_at, d_adv);
    Tensor ref = detail::concat_module(theta_at.at(module_name));
    double radius = cfg.eps_w * l2_norm(ref);

    ParamSet params = theta_at;
    res.perturbed = theta_at;
    double best_loss = base_loss;

    std::size_t n = d_adv.size();
    std::size_t bs = cfg.batch_size > 0 ? static_cast<std::size_t>(cfg.batch_size) : n;
    detail::BackpropRequest req;
    req.input_grad = false;
    req.only_module = &module_name;

    for (int t = 0; t < cfg.steps_T; ++t) {
        for (std::size_t start = 0; start < n; start += bs) {
            std::size_t count = std::min(bs, n - start);
            std::vector<std::size_t> idx(count);
            for (std::size_t i = 0; i < count; ++i) idx[i] = start + i;
            Dataset batch = gather(d_adv, idx);
            BackwardResult br = detail::backprop(spec, params, batch.inputs, batch.labels, req);
            ++res.forward_backward_count;
            LayerParams& p = params.at(module_name);
            const LayerParams& g = br.grads.at(module_name);
            for (std::size_t i = 0; i < p.weight.size(); ++i) p.weight[i] += cfg.gamma * g.weight[i];
            if (p.bias)
                for (std::size_t i = 0; i < p.bias->size(); ++i) (*p.bias)[i] += cfg.gamma * (*g.bias)[i];
        }

        Tensor cur = detail::concat_module(params.at(module_name));
        Tensor delta = cur;
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= ref[i];
        bool violated = l2_norm(delta) >= radius;
        if (violated) {
            Tensor projected = project_l2_ball(delta, radius);
            Tensor inside = ref;
            for (std::size_t i = 0; i < inside.size(); ++i) inside[i] += projected[i];
            detail::split_module(inside, params.at(module_name));
        }

        double cur_loss = mean_loss(spec, params, d_adv);
        if (cur_loss > best_loss) {
            best_loss = cur_loss;
            res.perturbed = params;
        }
        if (violated && !cfg.project_and_continue) break;
    }

    res.mrc_value = best_loss - base_loss;
    return res;
}

// Criticality of every parameterized module, in network order, against one
// shared adversarial set. Accuracy columns are evaluated on that same set.
inline MRCReport mrc_scan(const NetworkSpec& spec, const ParamSet& theta_at, const Dataset& data,
                          const MRCConfig& cfg, Rng& rng) {
    cfg.validate();
    Dataset d_adv = build_adv_set(spec, theta_at, data, cfg.attack_cfg, rng);
    double acc_before = accuracy_percent(forward(spec, theta_at, d_adv.inputs), d_adv.labels);

    MRCReport report;
    for (const std::string& name : spec.parameterized_layers()) {
        MrcResult r = mrc_of_module(spec, theta_at, name, d_adv, cfg);
        double acc_after = accuracy_percent(forward(spec, r.perturbed, d_adv.inputs), d_adv.labels);
        report.records.push_back({name, r.mrc_value, acc_before, acc_after, acc_before - acc_after,
                                  r.forward_backward_count});
    }
    return report;
}

// The k modules of smallest criticality, ascending; ties resolve to the
// module that appears earlier in the network.
inline std::vector<std::string> select_non_robust_critical(const MRCReport& report, std::size_t k = 1) {
    if (k == 0) throw std::invalid_argument("select_non_robust_critical: k must be positive");
    if (k > report.records.size())
        throw std::invalid_argument("select_non_robust_critical: k exceeds module count");
    std::vector<std::size_t> idx(report.records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return report.records[a].mrc_value < report.records[b].mrc_value;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(report.records[idx[i]].module_name);
    return out;
}

inline std::vector<std::string> select_robust_critical(const MRCReport& report, std::size_t k = 1) {
    if (k == 0) throw std::invalid_argument("select_robust_critical: k must be positive");
    if (k > report.records.size())
        throw std::invalid_argument("select_robust_critical: k exceeds module count");
    std::vector<std::size_t> idx(report.records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return report.records[a].mrc_value > report.records[b].mrc_value;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(report.records[idx[i]].module_name);
    return out;
}

// Rescale a (linear|conv, relu, linear|conv) sandwich by beta without
// changing the network function: the first module's weight and bias are
// multiplied by beta, the second module's weight is divided by it.
inline ParamSet scale_network(const NetworkSpec& spec, const ParamSet& params,
                              const std::string& first, const std::string& second, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("scale_network: beta must be positive");
    std::ptrdiff_t i = spec.layer_index(first);
    std::ptrdiff_t j = spec.layer_index(second);
    if (i < 0 || j < 0) throw std::invalid_argument("scale_network: unknown layer");
    if (j != i + 2 || spec.layers[i + 1].kind != LayerKind::relu)
        throw std::invalid_argument("scale_network: layers must be consecutive with a relu between");
    if (!spec.layers[i].parameterized() || !spec.layers[j].parameterized())
        throw std::invalid_argument("scale_network: both layers must be parameterized");

    ParamSet out = params;
    LayerParams& a = out.at(first);
    for (double& v : a.weight.values()) v *= beta;
    if (a.bias)
        for (double& v : a.bias->values()) v *= beta;
    LayerParams& b = out.at(second);
    for (double& v : b.weight.values()) v /= beta;
    return out;
}

// Tab-separated text: one record per line, reals with 6 significant digits.
inline std::string mrc_report_to_tsv(const MRCReport& report) {
    std::ostringstream os;
    char buf[256];
    for (const MRCRecord& r : report.records) {
        std::snprintf(buf, sizeof(buf), "%s\t%.6g\t%.6g\t%.6g\t%.6g\t%" PRIu64 "\n",
                      r.module_name.c_str(), r.mrc_value, r.robust_acc_before, r.robust_acc_after,
                      r.robust_acc_drop, r.forward_backward_count);
        os << buf;
    }
    return os.str();
}

inline MRCReport mrc_report_from_tsv(const std::string& text) {
    MRCReport report;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MRCRecord r;
        char name[128];
        if (std::sscanf(line.c_str(), "%127[^\t]\t%lf\t%lf\t%lf\t%lf\t%" SCNu64, name, &r.mrc_value,
                        &r.robust_acc_before, &r.robust_acc_after, &r.robust_acc_drop,
                        &r.forward_backward_count) != 6)
            throw std::invalid_argument("mrc_report_from_tsv: malformed line: " + line);
        r.module_name = name;
        report.records.push_back(std::move(r));
    }
    return report;
}

}  // namespace riftlab
