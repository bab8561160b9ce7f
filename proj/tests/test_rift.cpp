#include <gtest/gtest.h>

#include "oracles.hpp"
#include "riftlab/rift.hpp"

using namespace riftlab;

namespace {

NetworkSpec small_mlp() {
    NetworkSpec spec;
    spec.input_shape = {2};
    spec.num_classes = 2;
    spec.layers = {
        LayerSpec::linear("fc1", 2, 12),
        LayerSpec::relu("relu1"),
        LayerSpec::linear("fc2", 12, 2),
    };
    spec.validate();
    return spec;
}

AttackConfig mild_attack() {
    AttackConfig cfg;
    cfg.eps_x = 0.08;
    cfg.step_size = 0.02;
    cfg.steps = 10;
    return cfg;
}

ParamSet adversarially_trained(const NetworkSpec& spec, const Dataset& train, const Dataset& test) {
    TrainSchedule sched;
    sched.epochs = 12;
    sched.decay_epochs = {9};
    sched.initial_lr = 0.1;
    sched.batch_size = 32;
    sched.seed = 4;
    return adversarial_train(spec, train, test, mild_attack().with_rand_init(false), sched).params;
}

FineTuneConfig quick_ft() {
    FineTuneConfig cfg;
    cfg.epochs = 5;
    cfg.decay_at_epoch = 3;
    cfg.lr = 0.01;
    cfg.batch_size = 32;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST(Finetune, ZeroEpochsReturnsStartBitwise) {
    NetworkSpec spec = small_mlp();
    Dataset train = gen_synthetic(SyntheticKind::blobs2d, 64, 201);
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 32, 202, "test");
    ParamSet theta = adversarially_trained(spec, train, test);
    FineTuneConfig cfg = quick_ft();
    cfg.epochs = 0;
    cfg.decay_at_epoch = 0;
    ParamSet ft = finetune(spec, theta, {"fc1"}, train, test, cfg);
    EXPECT_TRUE(bitwise_equal(ft, theta));
}

TEST(Finetune, FrozenLayersBitwiseAfterManyEpochs) {
    NetworkSpec spec = small_mlp();
    Dataset train = gen_synthetic(SyntheticKind::blobs2d, 64, 203);
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 32, 204, "test");
    ParamSet theta = adversarially_trained(spec, train, test);
    FineTuneConfig cfg = quick_ft();
    cfg.epochs = 10;
    cfg.decay_at_epoch = 5;
    ParamSet ft = finetune(spec, theta, {"fc2"}, train, test, cfg);
    EXPECT_TRUE(bitwise_equal(ft.at("fc1"), theta.at("fc1")));
}

TEST(Finetune, NeverScoresBelowStartOnHeldOut) {
    NetworkSpec spec = small_mlp();
    Dataset train = gen_synthetic(SyntheticKind::blobs2d, 96, 205);
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 48, 206, "test");
    ParamSet theta = adversarially_trained(spec, train, test);
    ParamSet ft = finetune(spec, theta, {"fc1"}, train, test, quick_ft());
    EXPECT_GE(eval_std(spec, ft, test), eval_std(spec, theta, test));
}

TEST(Finetune, EmptyModuleSetThrows) {
    NetworkSpec spec = small_mlp();
    Dataset train = gen_synthetic(SyntheticKind::blobs2d, 16, 207);
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 8, 208, "test");
    Rng rng(209);
    ParamSet theta = init_params(spec, rng);
    EXPECT_THROW(finetune(spec, theta, {}, train, test, quick_ft()), std::invalid_argument);
}

TEST(Interpolate, EndpointsAreBitwiseExact) {
    NetworkSpec spec = small_mlp();
    Rng rng(210);
    ParamSet a = init_params(spec, rng);
    ParamSet b = init_params(spec, rng);
    EXPECT_TRUE(bitwise_equal(interpolate(a, b, 0.0), a));
    EXPECT_TRUE(bitwise_equal(interpolate(a, b, 1.0), b));
}

TEST(Interpolate, MidpointIsElementwiseMean) {
    NetworkSpec spec = small_mlp();
    Rng rng(211);
    ParamSet a = init_params(spec, rng);
    ParamSet b = init_params(spec, rng);
    ParamSet mid = interpolate(a, b, 0.5);
    for (const std::string& name : spec.parameterized_layers()) {
        const Tensor& wa = a.at(name).weight;
        const Tensor& wb = b.at(name).weight;
        const Tensor& wm = mid.at(name).weight;
        for (std::size_t i = 0; i < wa.size(); ++i)
            EXPECT_DOUBLE_EQ(wm[i], 0.5 * wa[i] + 0.5 * wb[i]);
    }
}

TEST(Interpolate, RejectsAlphaOutsideUnitInterval) {
    NetworkSpec spec = small_mlp();
    Rng rng(212);
    ParamSet a = init_params(spec, rng);
    EXPECT_THROW(interpolate(a, a, -0.01), std::invalid_argument);
    EXPECT_THROW(interpolate(a, a, 1.01), std::invalid_argument);
}

TEST(SelectAlpha, SlackFiltersOutInfeasibleRows) {
    // Two feasible rows, then an alpha=1 row whose higher standard accuracy
    // must lose because it breaks the robustness slack.
    std::vector<SweepRecord> records = {
        {0.0, 81.46, 53.63},
        {0.5, 83.44, 53.65},
        {1.0, 84.00, 50.00},
    };
    EXPECT_DOUBLE_EQ(select_alpha(records, 0.1), 0.5);
}

TEST(SelectAlpha, AllIdenticalPicksLargestAlphaByTieBreak) {
    std::vector<SweepRecord> records = {
        {0.0, 90.0, 60.0}, {0.5, 90.0, 60.0}, {1.0, 90.0, 60.0}};
    EXPECT_DOUBLE_EQ(select_alpha(records, 0.1), 1.0);
}

TEST(SelectAlpha, AlphaZeroAlwaysFeasible) {
    std::vector<SweepRecord> records = {{0.0, 70.0, 50.0}, {0.5, 95.0, 10.0}, {1.0, 99.0, 5.0}};
    EXPECT_DOUBLE_EQ(select_alpha(records, 0.1), 0.0);
}

TEST(SweepAndSelect, DegenerateSweepWhenEndpointsAgree) {
    NetworkSpec spec = small_mlp();
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 32, 213, "test");
    Rng rng(214);
    ParamSet theta = init_params(spec, rng);
    InterpolationSweep sweep = sweep_and_select(spec, theta, theta, test, mild_attack(),
                                                adv_eval_seeds(42), 0.1, 0.25);
    ASSERT_EQ(sweep.records.size(), 5u);
    for (const SweepRecord& r : sweep.records) {
        EXPECT_DOUBLE_EQ(r.std_acc, sweep.records[0].std_acc);
        EXPECT_DOUBLE_EQ(r.adv_acc, sweep.records[0].adv_acc);
    }
    EXPECT_DOUBLE_EQ(sweep.alpha_star, 1.0);
}

TEST(SweepAndSelect, GridContainsEndpointsAndIsIncreasing) {
    NetworkSpec spec = small_mlp();
    Dataset train = gen_synthetic(SyntheticKind::blobs2d, 64, 215);
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 32, 216, "test");
    ParamSet theta = adversarially_trained(spec, train, test);
    ParamSet ft = finetune(spec, theta, {"fc1"}, train, test, quick_ft());
    InterpolationSweep sweep = sweep_and_select(spec, theta, ft, test, mild_attack(),
                                                adv_eval_seeds(43), 0.1, 0.05);
    ASSERT_EQ(sweep.records.size(), 21u);
    EXPECT_DOUBLE_EQ(sweep.records.front().alpha, 0.0);
    EXPECT_DOUBLE_EQ(sweep.records.back().alpha, 1.0);
    for (std::size_t i = 1; i < sweep.records.size(); ++i)
        EXPECT_LT(sweep.records[i - 1].alpha, sweep.records[i].alpha);

    // alpha* satisfies the robustness constraint as evaluated
    double base = sweep.records.front().adv_acc;
    for (const SweepRecord& r : sweep.records) {
        if (r.alpha == sweep.alpha_star) {
            EXPECT_GE(r.adv_acc, base - sweep.tolerance);
        }
    }
}

TEST(RiftPipeline, OutputDominatesBaselineByConstruction) {
    NetworkSpec spec = small_mlp();
    Dataset train = gen_synthetic(SyntheticKind::blobs2d, 96, 217);
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 48, 218, "test");
    ParamSet theta = adversarially_trained(spec, train, test);

    MRCConfig mrc_cfg;
    mrc_cfg.attack_cfg = mild_attack();
    RiftResult res = rift_pipeline(spec, theta, train, test, mrc_cfg, quick_ft(), mild_attack(),
                                   /*run_seed=*/99);

    const SweepRecord& base = res.sweep.records.front();
    double star_std = eval_std(spec, res.theta_star, test);
    double star_adv = eval_adv(spec, res.theta_star, test, mild_attack(), adv_eval_seeds(99));
    EXPECT_GE(star_std, base.std_acc);
    EXPECT_GE(star_adv, base.adv_acc - 0.1);
    ASSERT_EQ(res.selected_modules.size(), 1u);
}

TEST(RiftPipeline, ZeroFinetuneEpochsIsIdentity) {
    NetworkSpec spec = small_mlp();
    Dataset train = gen_synthetic(SyntheticKind::blobs2d, 48, 219);
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 24, 220, "test");
    ParamSet theta = adversarially_trained(spec, train, test);

    MRCConfig mrc_cfg;
    mrc_cfg.attack_cfg = mild_attack();
    FineTuneConfig ft = quick_ft();
    ft.epochs = 0;
    ft.decay_at_epoch = 0;
    RiftResult res = rift_pipeline(spec, theta, train, test, mrc_cfg, ft, mild_attack(), 7);
    EXPECT_TRUE(bitwise_equal(res.theta_star, theta));
}

TEST(RiftPipeline, DeterministicAcrossRuns) {
    NetworkSpec spec = small_mlp();
    Dataset train = gen_synthetic(SyntheticKind::blobs2d, 48, 221);
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 24, 222, "test");
    ParamSet theta = adversarially_trained(spec, train, test);

    MRCConfig mrc_cfg;
    mrc_cfg.attack_cfg = mild_attack();
    RiftResult a = rift_pipeline(spec, theta, train, test, mrc_cfg, quick_ft(), mild_attack(), 31);
    RiftResult b = rift_pipeline(spec, theta, train, test, mrc_cfg, quick_ft(), mild_attack(), 31);
    EXPECT_TRUE(bitwise_equal(a.theta_star, b.theta_star));
    EXPECT_DOUBLE_EQ(a.sweep.alpha_star, b.sweep.alpha_star);
}

TEST(RiftPipeline, AblationSelectorsProduceCompleteSweeps) {
    NetworkSpec spec = small_mlp();
    Dataset train = gen_synthetic(SyntheticKind::blobs2d, 48, 223);
    Dataset test = gen_synthetic(SyntheticKind::blobs2d, 24, 224, "test");
    ParamSet theta = adversarially_trained(spec, train, test);

    MRCConfig mrc_cfg;
    mrc_cfg.attack_cfg = mild_attack();
    FineTuneConfig ft = quick_ft();
    ft.epochs = 2;
    ft.decay_at_epoch = 1;

    std::vector<ModuleSelector> selectors = {
        [](const MRCReport& r) { return select_non_robust_critical(r, 1); },
        [](const MRCReport& r) { return select_robust_critical(r, 1); },
        [&](const MRCReport&) { return spec.parameterized_layers(); },
        [&](const MRCReport&) {
            return std::vector<std::string>{spec.parameterized_layers().back()};
        },
    };
    for (const ModuleSelector& sel : selectors) {
        RiftResult res = rift_pipeline(spec, theta, train, test, mrc_cfg, ft, mild_attack(), 11,
                                       sel, 0.1, 0.25);
        EXPECT_EQ(res.sweep.records.size(), 5u);
        EXPECT_FALSE(res.selected_modules.empty());
    }
}

TEST(SweepTsv, FourDecimalFormat) {
    InterpolationSweep sweep;
    sweep.records = {{0.0, 81.4583, 53.6251}, {1.0, 84.0, 50.0}};
    EXPECT_EQ(sweep_to_tsv(sweep), "0.0000\t81.4583\t53.6251\n1.0000\t84.0000\t50.0000\n");
}
