#pragma once

#include <array>
#include <string>
#include <vector>

#include "riftlab/data.hpp"
#include "riftlab/network.hpp"

namespace riftlab {

// Input-perturbation budget and PGD schedule.
struct AttackConfig {
    double eps_x = 8.0 / 255.0;
    double step_size = 2.0 / 255.0;
    int steps = 10;
    bool rand_init = true;
    double bounds_lo = 0.0;
    double bounds_hi = 1.0;

    void validate() const {
        if (eps_x < 0.0) throw std::invalid_argument("AttackConfig: eps_x must be >= 0");
        if (steps < 0) throw std::invalid_argument("AttackConfig: steps must be >= 0");
        if (steps > 0 && step_size <= 0.0)
            throw std::invalid_argument("AttackConfig: step_size must be > 0 when steps > 0");
        if (bounds_lo > bounds_hi) throw std::invalid_argument("AttackConfig: bounds inverted");
    }

    AttackConfig with_rand_init(bool on) const {
        AttackConfig c = *this;
        c.rand_init = on;
        return c;
    }
};

// L-inf projected gradient ascent on the cross-entropy, keeping the
// highest-loss iterate per sample. Without random init the clean input is
// among the candidates, so the returned loss never falls below it.
inline Tensor pgd_attack(const NetworkSpec& spec, const ParamSet& params, const Tensor& batch,
                         const std::vector<int>& labels, const AttackConfig& cfg, Rng& rng) {
    cfg.validate();
    std::size_t n = batch.shape()[0];
    std::size_t stride = batch.size() / n;

    Tensor x = batch;
    if (cfg.rand_init && cfg.eps_x > 0.0) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += rng.uniform(-cfg.eps_x, cfg.eps_x);
            x[i] = std::min(std::max(x[i], cfg.bounds_lo), cfg.bounds_hi);
        }
    }

    Tensor best = x;
    std::vector<double> best_loss = per_sample_ce(forward(spec, params, x), labels);

    for (int step = 0; step < cfg.steps; ++step) {
        auto [loss, grad] = input_gradient(spec, params, x, labels);
        (void)loss;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double g = grad[i];
            double sgn = (g > 0.0) ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
            double v = x[i] + cfg.step_size * sgn;
            double lo = std::max(batch[i] - cfg.eps_x, cfg.bounds_lo);
            double hi = std::min(batch[i] + cfg.eps_x, cfg.bounds_hi);
            x[i] = std::min(std::max(v, lo), hi);
        }
        std::vector<double> cur = per_sample_ce(forward(spec, params, x), labels);
        for (std::size_t s = 0; s < n; ++s) {
            if (cur[s] > best_loss[s]) {
                best_loss[s] = cur[s];
                for (std::size_t j = 0; j < stride; ++j) best[s * stride + j] = x[s * stride + j];
            }
        }
    }
    return best;
}

// Mean cross-entropy on PGD adversarial examples.
inline double robust_loss(const NetworkSpec& spec, const ParamSet& params, const Dataset& ds,
                          const AttackConfig& cfg, Rng& rng) {
    if (ds.size() == 0) throw std::invalid_argument("robust_loss: empty dataset");
    Tensor adv = pgd_attack(spec, params, ds.inputs, ds.labels, cfg, rng);
    return loss_ce(forward(spec, params, adv), ds.labels).first;
}

inline double mean_loss(const NetworkSpec& spec, const ParamSet& params, const Dataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("mean_loss: empty dataset");
    return loss_ce(forward(spec, params, ds.inputs), ds.labels).first;
}

struct TrainSchedule {
    int epochs = 20;
    double initial_lr = 0.05;
    std::vector<int> decay_epochs;  // 0-based epochs at which lr drops
    double decay_factor = 10.0;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int batch_size = 32;
    std::uint64_t seed = 1;

    void validate() const {
        if (epochs < 0) throw std::invalid_argument("TrainSchedule: epochs must be >= 0");
        if (batch_size <= 0) throw std::invalid_argument("TrainSchedule: batch_size must be > 0");
        if (decay_factor <= 0.0) throw std::invalid_argument("TrainSchedule: decay_factor must be > 0");
        for (std::size_t i = 0; i < decay_epochs.size(); ++i) {
            if (decay_epochs[i] >= epochs)
                throw std::invalid_argument("TrainSchedule: decay epoch past end of training");
            if (i > 0 && decay_epochs[i] <= decay_epochs[i - 1])
                throw std::invalid_argument("TrainSchedule: decay epochs must be strictly increasing");
        }
    }

    double lr_at(int epoch) const {
        double lr = initial_lr;
        for (int d : decay_epochs)
            if (epoch >= d) lr /= decay_factor;
        return lr;
    }
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double held_out_acc = 0.0;  // robust for adversarial training, standard otherwise
};

struct TrainResult {
    ParamSet params;
    int selected_epoch = 0;  // 0 means the initial weights
    std::vector<EpochLog> log;
};

namespace detail {

// Shared loop for standard and adversarial training. Model selection keeps
// the epoch checkpoint of highest held-out accuracy (robust accuracy when an
// attack is given); ties go to the earliest epoch, with the initial weights
// evaluated as epoch 0.
inline TrainResult train_loop(const NetworkSpec& spec, const Dataset& train, const Dataset& held_out,
                              const AttackConfig* attack, const TrainSchedule& sched) {
    spec.validate();
    sched.validate();
    train.validate(spec.num_classes);
    held_out.validate(spec.num_classes);

    Rng rng(sched.seed);
    ParamSet params = init_params(spec, rng);
    SgdState state;
    FreezeMask no_freeze;

    std::uint64_t eval_seed = Rng::mix(sched.seed, 0x65766131ULL);  // fixed eval stream
    auto held_out_acc = [&](const ParamSet& p) {
        if (attack) {
            Rng eval_rng(eval_seed);
            Tensor adv = pgd_attack(spec, p, held_out.inputs, held_out.labels,
                                    attack->with_rand_init(true), eval_rng);
            return accuracy_percent(forward(spec, p, adv), held_out.labels);
        }
        return accuracy_percent(forward(spec, p, held_out.inputs), held_out.labels);
    };

    TrainResult res;
    res.params = params;
    res.selected_epoch = 0;
    double best_acc = held_out_acc(params);

    std::size_t n = train.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        double lr = sched.lr_at(epoch);
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += sched.batch_size) {
            std::size_t count = std::min<std::size_t>(sched.batch_size, n - start);
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + count);
            Dataset batch = gather(train, idx);
            Tensor inputs = batch.inputs;
            if (attack) inputs = pgd_attack(spec, params, batch.inputs, batch.labels, *attack, rng);
            BackwardResult br = backward(spec, params, inputs, batch.labels);
            params = sgd_step(params, br.grads, lr, sched.momentum, sched.weight_decay, no_freeze,
                              state);
            loss_sum += br.loss * static_cast<double>(count);
        }
        double acc = held_out_acc(params);
        res.log.push_back({epoch + 1, lr, loss_sum / static_cast<double>(n), acc});
        if (acc > best_acc) {
            best_acc = acc;
            res.params = params;
            res.selected_epoch = epoch + 1;
        }
    }
    return res;
}

}  // namespace detail

// Min-max training: each batch is replaced by its PGD perturbation before the
// descent step. Returns the checkpoint with the highest held-out robust
// accuracy.
inline TrainResult adversarial_train(const NetworkSpec& spec, const Dataset& train,
                                     const Dataset& held_out, const AttackConfig& attack_cfg,
                                     const TrainSchedule& sched) {
    attack_cfg.validate();
    return detail::train_loop(spec, train, held_out, &attack_cfg, sched);
}

// Clean training baseline; selection by held-out standard accuracy.
inline TrainResult standard_train(const NetworkSpec& spec, const Dataset& train,
                                  const Dataset& held_out, const TrainSchedule& sched) {
    return detail::train_loop(spec, train, held_out, nullptr, sched);
}

}  // namespace riftlab
