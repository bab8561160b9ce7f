#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"
#include "riftlab/data.hpp"
#include "riftlab/metrics.hpp"

using namespace riftlab;

TEST(GenSynthetic, DeterministicPerSeed) {
    for (SyntheticKind kind :
         {SyntheticKind::blobs2d, SyntheticKind::rings2d, SyntheticKind::shapes8x8}) {
        Dataset a = gen_synthetic(kind, 40, 1234);
        Dataset b = gen_synthetic(kind, 40, 1234);
        EXPECT_TRUE(bitwise_equal(a.inputs, b.inputs));
        EXPECT_EQ(a.labels, b.labels);
    }
}

TEST(GenSynthetic, InputsStayInUnitRange) {
    for (SyntheticKind kind :
         {SyntheticKind::blobs2d, SyntheticKind::rings2d, SyntheticKind::shapes8x8}) {
        Dataset ds = gen_synthetic(kind, 200, 77);
        for (double v : ds.inputs.values()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(GenSynthetic, ShapesClassBalanceWithinOne) {
    for (std::size_t n : {100, 101, 102, 103}) {
        Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, n, 5);
        std::map<int, std::size_t> counts;
        for (int y : ds.labels) counts[y]++;
        for (int cls = 0; cls < 4; ++cls) {
            double expected = static_cast<double>(n) / 4.0;
            EXPECT_LE(std::abs(static_cast<double>(counts[cls]) - expected), 1.0);
        }
    }
}

TEST(GenSynthetic, UnknownKindThrows) {
    EXPECT_THROW(gen_synthetic("mnist", 10, 1), std::invalid_argument);
    EXPECT_THROW(gen_synthetic(SyntheticKind::blobs2d, 0, 1), std::invalid_argument);
}

TEST(Corrupt, WidthOneBlurIsIdentity) {
    Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, 12, 9);
    Dataset out = corrupt(ds, {CorruptionKind::box_blur, 1}, 10);
    EXPECT_TRUE(bitwise_equal(out.inputs, ds.inputs));
    EXPECT_EQ(out.labels, ds.labels);
}

TEST(Corrupt, ConstantHalfImageIsContrastFixedPoint) {
    Dataset ds;
    ds.inputs = Tensor({3, 1, 4, 4});
    for (double& v : ds.inputs.values()) v = 0.5;
    ds.labels = {0, 1, 2};
    for (int severity = 1; severity <= 5; ++severity) {
        Dataset out = corrupt(ds, {CorruptionKind::contrast, severity}, 11);
        for (double v : out.inputs.values()) EXPECT_DOUBLE_EQ(v, 0.5);
    }
}

TEST(Corrupt, GaussianSeverityOneMeanAbsChange) {
    // half-normal mean: sigma * sqrt(2/pi) = 0.04 * 0.7979 = 0.0319
    Dataset ds;
    ds.inputs = Tensor({100, 1, 10, 10});
    for (double& v : ds.inputs.values()) v = 0.5;
    ds.labels.assign(100, 0);
    Dataset out = corrupt(ds, {CorruptionKind::gaussian_noise, 1}, 12);
    double mean_abs = 0.0;
    for (std::size_t i = 0; i < out.inputs.size(); ++i)
        mean_abs += std::abs(out.inputs[i] - ds.inputs[i]);
    mean_abs /= static_cast<double>(out.inputs.size());
    EXPECT_GE(mean_abs, 0.02);
    EXPECT_LE(mean_abs, 0.05);
}

TEST(Corrupt, LabelsUntouchedAndRangeClamped) {
    Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, 20, 13);
    for (const CorruptionSpec& spec : all_corruptions()) {
        Dataset out = corrupt(ds, spec, 14);
        EXPECT_EQ(out.labels, ds.labels);
        for (double v : out.inputs.values()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Corrupt, RejectsBadSeverity) {
    Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, 4, 15);
    EXPECT_THROW(corrupt(ds, {CorruptionKind::box_blur, 0}, 1), std::invalid_argument);
    EXPECT_THROW(corrupt(ds, {CorruptionKind::box_blur, 6}, 1), std::invalid_argument);
}

namespace {

// Parameters that always predict class `cls` regardless of the input.
ParamSet constant_predictor(const NetworkSpec& spec, int cls) {
    Rng rng(1);
    ParamSet p = init_params(spec, rng);
    for (const std::string& name : spec.parameterized_layers()) {
        for (double& v : p.at(name).weight.values()) v = 0.0;
        if (p.at(name).bias)
            for (double& v : p.at(name).bias->values()) v = 0.0;
    }
    std::string last = spec.parameterized_layers().back();
    (*p.at(last).bias)[cls] = 10.0;
    return p;
}

NetworkSpec tiny_image_net() {
    NetworkSpec spec;
    spec.input_shape = {1, 8, 8};
    spec.num_classes = 4;
    spec.layers = {
        LayerSpec::flatten("flat"),
        LayerSpec::linear("fc", 64, 4),
    };
    spec.validate();
    return spec;
}

}  // namespace

TEST(EvalStd, ConstantPredictorScoresChanceOnBalancedSet) {
    NetworkSpec spec = tiny_image_net();
    ParamSet p = constant_predictor(spec, 0);
    Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, 100, 21);
    EXPECT_DOUBLE_EQ(eval_std(spec, p, ds), 25.0);
}

TEST(EvalStd, PerfectMemorizerScoresHundred) {
    NetworkSpec spec = tiny_image_net();
    Dataset train = gen_synthetic(SyntheticKind::shapes8x8, 64, 22);
    Dataset test = gen_synthetic(SyntheticKind::shapes8x8, 64, 23, "test");
    TrainSchedule sched;
    sched.epochs = 30;
    sched.decay_epochs = {24};
    sched.initial_lr = 0.2;
    sched.batch_size = 16;
    sched.seed = 24;
    TrainResult res = standard_train(spec, train, test, sched);
    EXPECT_DOUBLE_EQ(eval_std(spec, res.params, train), 100.0);
}

TEST(EvalStd, MatchesHandCountOnFixture) {
    // one linear feature decides: logit0 = x, logit1 = 1 - x (via bias)
    NetworkSpec spec;
    spec.input_shape = {1};
    spec.num_classes = 2;
    spec.layers = {LayerSpec::linear("fc", 1, 2)};
    spec.validate();
    ParamSet p;
    LayerParams lp;
    lp.weight = Tensor({2, 1}, {1.0, -1.0});
    lp.bias = Tensor({2}, {0.0, 1.0});
    p.entries.emplace("fc", std::move(lp));

    Dataset ds;
    ds.inputs = Tensor({10, 1}, {0.9, 0.8, 0.7, 0.6, 0.55, 0.4, 0.3, 0.2, 0.1, 0.0});
    //      predicted class:      0    0    0    0    0     1    1    1    1    1
    ds.labels = {0, 0, 0, 1, 1, 1, 1, 1, 0, 1};
    // hand count: correct at indices 0,1,2,5,6,7,9 -> 7 of 10
    EXPECT_DOUBLE_EQ(eval_std(spec, p, ds), 70.0);
}

TEST(EvalStd, EmptyDatasetThrows) {
    NetworkSpec spec = tiny_image_net();
    ParamSet p = constant_predictor(spec, 0);
    Dataset empty;
    empty.inputs = Tensor({0, 1, 8, 8});
    EXPECT_THROW(eval_std(spec, p, empty), std::invalid_argument);
}

TEST(EvalAdv, ZeroEpsEqualsStandardAccuracy) {
    NetworkSpec spec = tiny_image_net();
    Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, 32, 25);
    Rng rng(26);
    ParamSet p = init_params(spec, rng);
    AttackConfig cfg;
    cfg.eps_x = 0.0;
    EXPECT_DOUBLE_EQ(eval_adv(spec, p, ds, cfg, {1, 2, 3}), eval_std(spec, p, ds));
}

TEST(EvalAdv, NeverAboveStandardAccuracy) {
    NetworkSpec spec = tiny_image_net();
    Dataset train = gen_synthetic(SyntheticKind::shapes8x8, 64, 27);
    Dataset test = gen_synthetic(SyntheticKind::shapes8x8, 32, 28, "test");
    TrainSchedule sched;
    sched.epochs = 8;
    sched.decay_epochs = {6};
    sched.initial_lr = 0.1;
    sched.batch_size = 16;
    sched.seed = 29;
    TrainResult res = standard_train(spec, train, test, sched);
    AttackConfig cfg;  // default 8/255 PGD-10
    EXPECT_LE(eval_adv(spec, res.params, test, cfg, {5, 6, 7}), eval_std(spec, res.params, test));
}

TEST(EvalAdv, WorstOfThreeNeverAboveAnySingleRun) {
    NetworkSpec spec = tiny_image_net();
    Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, 24, 55);
    Rng rng(56);
    ParamSet p = init_params(spec, rng);
    AttackConfig cfg;
    std::array<std::uint64_t, 3> seeds = {11, 22, 33};
    double worst = eval_adv(spec, p, ds, cfg, seeds);
    for (std::uint64_t s : seeds)
        EXPECT_LE(worst, eval_adv(spec, p, ds, cfg, {s, s, s}));
}

TEST(EvalAdv, IdenticalSeedsEqualSingleRun) {
    NetworkSpec spec = tiny_image_net();
    Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, 24, 30);
    Rng rng(31);
    ParamSet p = init_params(spec, rng);
    AttackConfig cfg;
    double triple = eval_adv(spec, p, ds, cfg, {9, 9, 9});
    double single = eval_adv(spec, p, ds, cfg, {9, 9, 9});
    EXPECT_DOUBLE_EQ(triple, single);

    Rng attack_rng(9);
    Tensor adv = pgd_attack(spec, p, ds.inputs, ds.labels, cfg.with_rand_init(true), attack_rng);
    double one = accuracy_percent(forward(spec, p, adv), ds.labels);
    EXPECT_DOUBLE_EQ(triple, one);
}

TEST(EvalOod, IdentityEquivalentSpecEqualsStandard) {
    NetworkSpec spec = tiny_image_net();
    Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, 32, 33);
    Rng rng(34);
    ParamSet p = init_params(spec, rng);
    // blur at severity 1 has kernel width 1: the identity transform
    OodResult res = eval_ood(spec, p, ds, 35, {{CorruptionKind::box_blur, 1}});
    EXPECT_DOUBLE_EQ(res.mean_acc, eval_std(spec, p, ds));
}

TEST(EvalOod, ConstantPredictorStaysAtChance) {
    NetworkSpec spec = tiny_image_net();
    ParamSet p = constant_predictor(spec, 2);
    Dataset ds = gen_synthetic(SyntheticKind::shapes8x8, 100, 36);
    OodResult res = eval_ood(spec, p, ds, 37);
    EXPECT_EQ(res.cells.size(), 20u);
    for (const OodCell& cell : res.cells) EXPECT_DOUBLE_EQ(cell.acc, 25.0);
    EXPECT_DOUBLE_EQ(res.mean_acc, 25.0);
}

TEST(EvalOod, MeanIsArithmeticMeanOfCells) {
    NetworkSpec spec = tiny_image_net();
    Dataset train = gen_synthetic(SyntheticKind::shapes8x8, 64, 38);
    Dataset test = gen_synthetic(SyntheticKind::shapes8x8, 32, 39, "test");
    TrainSchedule sched;
    sched.epochs = 5;
    sched.decay_epochs = {};
    sched.initial_lr = 0.1;
    sched.batch_size = 16;
    sched.seed = 40;
    TrainResult res = standard_train(spec, train, test, sched);
    OodResult ood = eval_ood(spec, res.params, test, 41);
    double sum = 0.0;
    for (const OodCell& cell : ood.cells) sum += cell.acc;
    EXPECT_DOUBLE_EQ(ood.mean_acc, sum / static_cast<double>(ood.cells.size()));
}

TEST(CorruptionGroups, CoverTheFourFamilies) {
    EXPECT_STREQ(corruption_group(CorruptionKind::gaussian_noise), "Noise");
    EXPECT_STREQ(corruption_group(CorruptionKind::box_blur), "Blur");
    EXPECT_STREQ(corruption_group(CorruptionKind::brightness), "Weather");
    EXPECT_STREQ(corruption_group(CorruptionKind::contrast), "Digital");
}
