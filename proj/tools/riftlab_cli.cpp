// Command-line driver: config-driven training, criticality scans, the
// fine-tune/interpolate pipeline, and evaluation/reporting over checkpoints.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "riftlab/riftlab.hpp"

namespace fs = std::filesystem;
using namespace riftlab;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_dir = ".";
};

RunConfig load_config(const CommonOpts& opts) {
    RunConfig cfg = opts.config_path.empty() ? RunConfig() : RunConfig::parse_file(opts.config_path);
    if (opts.seed_override) cfg.seed = *opts.seed_override;
    cfg.finalize();
    return cfg;
}

RunBundle make_context(const RunConfig& cfg) { return build_run(cfg); }

void echo_config(const RunConfig& cfg) { std::cout << cfg.resolved() << std::flush; }

// Text artifacts go through the same write-then-rename path as checkpoints.
void write_text(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw std::runtime_error("short write to '" + tmp + "'");
    }
    fs::rename(tmp, path);
}

std::string train_log_text(const TrainResult& res) {
    std::ostringstream os;
    char buf[160];
    for (const EpochLog& e : res.log) {
        std::snprintf(buf, sizeof(buf), "epoch %d\tlr %.6g\ttrain_loss %.6f\theld_out_acc %.4f\n",
                      e.epoch, e.lr, e.train_loss, e.held_out_acc);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "selected_epoch %d\n", res.selected_epoch);
    os << buf;
    return os.str();
}

void print_metrics(const char* tag, const MetricsReport& m) {
    std::cout << "[" << tag << "]\n" << format_metrics(m);
}

int run_train(const CommonOpts& opts, bool adversarial) {
    RunConfig cfg = load_config(opts);
    echo_config(cfg);
    RunBundle ctx = make_context(cfg);
    fs::create_directories(opts.out_dir);

    TrainResult res = adversarial
                          ? adversarial_train(ctx.spec, ctx.train, ctx.test, cfg.attack, cfg.train)
                          : standard_train(ctx.spec, ctx.train, ctx.test, cfg.train);
    std::string stem = adversarial ? "theta_at" : "theta_std";
    std::string ckpt = opts.out_dir + "/" + stem + ".ckpt";
    save_checkpoint(res.params, ctx.spec, ckpt);
    write_text(opts.out_dir + "/train_" + (adversarial ? "at" : "std") + ".log", train_log_text(res));

    MetricsReport m = evaluate_all(ctx.spec, res.params, ctx.test, cfg.attack, cfg.seed);
    print_metrics(stem.c_str(), m);
    std::cout << "checkpoint " << ckpt << "\n";
    return 0;
}

int run_mrc_scan(const CommonOpts& opts, std::string ckpt_path) {
    RunConfig cfg = load_config(opts);
    echo_config(cfg);
    RunBundle ctx = make_context(cfg);
    if (ckpt_path.empty()) ckpt_path = opts.out_dir + "/theta_at.ckpt";
    ParamSet theta_at = load_checkpoint(ckpt_path, ctx.spec);

    Rng rng(Rng::mix(cfg.seed, 0x6d7263ULL));
    MRCReport report = mrc_scan(ctx.spec, theta_at, ctx.train, cfg.mrc, rng);
    fs::create_directories(opts.out_dir);
    std::string tsv = mrc_report_to_tsv(report);
    write_text(opts.out_dir + "/mrc_report.tsv", tsv);
    std::cout << tsv;
    std::cout << "non_robust_critical " << select_non_robust_critical(report, 1).front() << "\n";
    return 0;
}

std::string rift_summary_text(const RiftResult& res) {
    const SweepRecord& base = res.sweep.records.front();
    const SweepRecord* star = &base;
    for (const SweepRecord& r : res.sweep.records)
        if (r.alpha == res.sweep.alpha_star) star = &r;
    std::ostringstream os;
    os << "selected_modules ";
    for (std::size_t i = 0; i < res.selected_modules.size(); ++i)
        os << (i ? "," : "") << res.selected_modules[i];
    os << "\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "alpha_star %.4f\n", res.sweep.alpha_star);
    os << buf;
    std::snprintf(buf, sizeof(buf), "std_acc_at %.4f\nstd_acc_star %.4f\ndelta_std %.4f\n",
                  base.std_acc, star->std_acc, star->std_acc - base.std_acc);
    os << buf;
    std::snprintf(buf, sizeof(buf), "adv_acc_at %.4f\nadv_acc_star %.4f\ndelta_adv %.4f\n",
                  base.adv_acc, star->adv_acc, star->adv_acc - base.adv_acc);
    os << buf;
    return os.str();
}

int run_rift(const CommonOpts& opts, std::string ckpt_path, const std::string& module_flag,
             std::optional<double> alpha_step_flag) {
    RunConfig cfg = load_config(opts);
    if (alpha_step_flag) cfg.sweep_alpha_step = *alpha_step_flag;
    echo_config(cfg);
    RunBundle ctx = make_context(cfg);
    if (ckpt_path.empty()) ckpt_path = opts.out_dir + "/theta_at.ckpt";
    ParamSet theta_at = load_checkpoint(ckpt_path, ctx.spec);

    std::string selector = module_flag.empty() ? cfg.ft_modules : module_flag;
    ModuleSelector select = [&](const MRCReport& report) {
        return resolve_module_set(selector, ctx.spec, report);
    };

    RiftResult res = rift_pipeline(ctx.spec, theta_at, ctx.train, ctx.test, cfg.mrc, cfg.ft,
                                   cfg.attack, cfg.seed, select, cfg.sweep_tolerance,
                                   cfg.sweep_alpha_step);

    fs::create_directories(opts.out_dir);
    save_checkpoint(res.theta_star, ctx.spec, opts.out_dir + "/theta_rift.ckpt");
    write_text(opts.out_dir + "/mrc_report.tsv", mrc_report_to_tsv(res.report));
    write_text(opts.out_dir + "/sweep.tsv", sweep_to_tsv(res.sweep));
    std::string summary = rift_summary_text(res);
    write_text(opts.out_dir + "/rift_summary.txt", summary);
    std::cout << summary;
    std::cout << "checkpoint " << opts.out_dir << "/theta_rift.ckpt" << "\n";
    return 0;
}

int run_eval(const CommonOpts& opts, const std::string& ckpt_path) {
    RunConfig cfg = load_config(opts);
    echo_config(cfg);
    RunBundle ctx = make_context(cfg);
    ParamSet params = load_checkpoint(ckpt_path, ctx.spec);
    MetricsReport m = evaluate_all(ctx.spec, params, ctx.test, cfg.attack, cfg.seed);
    print_metrics("eval", m);
    return 0;
}

int run_sweep(const CommonOpts& opts, const std::string& at_path, const std::string& ft_path,
              std::optional<double> alpha_step_flag) {
    RunConfig cfg = load_config(opts);
    if (alpha_step_flag) cfg.sweep_alpha_step = *alpha_step_flag;
    echo_config(cfg);
    RunBundle ctx = make_context(cfg);
    ParamSet theta_at = load_checkpoint(at_path, ctx.spec);
    ParamSet theta_ft = load_checkpoint(ft_path, ctx.spec);
    InterpolationSweep sweep =
        sweep_and_select(ctx.spec, theta_at, theta_ft, ctx.test, cfg.attack,
                         adv_eval_seeds(cfg.seed), cfg.sweep_tolerance, cfg.sweep_alpha_step);
    fs::create_directories(opts.out_dir);
    std::string tsv = sweep_to_tsv(sweep);
    write_text(opts.out_dir + "/sweep.tsv", tsv);
    std::cout << tsv;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "alpha_star %.4f\n", sweep.alpha_star);
    std::cout << buf;
    return 0;
}

int run_report(const CommonOpts& opts, std::string at_path, std::string rift_path) {
    RunConfig cfg = load_config(opts);
    echo_config(cfg);
    RunBundle ctx = make_context(cfg);
    if (at_path.empty()) at_path = opts.out_dir + "/theta_at.ckpt";
    if (rift_path.empty()) rift_path = opts.out_dir + "/theta_rift.ckpt";
    ParamSet theta_at = load_checkpoint(at_path, ctx.spec);
    ParamSet theta_rift = load_checkpoint(rift_path, ctx.spec);

    MetricsReport before = evaluate_all(ctx.spec, theta_at, ctx.test, cfg.attack, cfg.seed);
    MetricsReport after = evaluate_all(ctx.spec, theta_rift, ctx.test, cfg.attack, cfg.seed);

    std::string mrc_path = opts.out_dir + "/mrc_report.tsv";
    if (fs::exists(mrc_path)) {
        std::ifstream in(mrc_path);
        std::stringstream ss;
        ss << in.rdbuf();
        MRCReport report = mrc_report_from_tsv(ss.str());
        std::cout << "non_robust_critical " << select_non_robust_critical(report, 1).front()
                  << "\n";
    }

    char buf[160];
    std::cout << "metric\tAT\tAT+RiFT\tdelta\n";
    auto row = [&](const char* name, double a, double b) {
        std::snprintf(buf, sizeof(buf), "%s\t%.4f\t%.4f\t%+.4f\n", name, a, b, b - a);
        std::cout << buf;
    };
    row("Std", before.std_acc, after.std_acc);
    row("OOD", before.ood.mean_acc, after.ood.mean_acc);
    row("Adv", before.adv_acc, after.adv_acc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale robust-training laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string ckpt, ckpt_at, ckpt_ft, modules;
    std::optional<double> alpha_step;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "run configuration file");
        sub->add_option("--seed", opts.seed_override, "override the config seed");
        sub->add_option("--out", opts.out_dir, "artifact directory");
    };

    CLI::App* train_std = app.add_subcommand("train-std", "standard training baseline");
    add_common(train_std);
    CLI::App* train_at = app.add_subcommand("train-at", "adversarial training");
    add_common(train_at);

    CLI::App* scan = app.add_subcommand("mrc-scan", "per-module criticality scan");
    add_common(scan);
    scan->add_option("--ckpt", ckpt, "adversarially trained checkpoint (default OUT/theta_at.ckpt)");

    CLI::App* rift = app.add_subcommand("rift", "scan, fine-tune, interpolate");
    add_common(rift);
    rift->add_option("--ckpt", ckpt, "adversarially trained checkpoint (default OUT/theta_at.ckpt)");
    rift->add_option("--module", modules,
                     "module selector: auto | all | last | top:K | name[,name...]");
    rift->add_option("--alpha-step", alpha_step, "interpolation grid step");

    CLI::App* eval = app.add_subcommand("eval", "metrics for one checkpoint");
    add_common(eval);
    eval->add_option("--ckpt", ckpt, "checkpoint to evaluate")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "re-evaluate an interpolation path");
    add_common(sweep);
    sweep->add_option("--ckpt-at", ckpt_at, "adversarially trained checkpoint")->required();
    sweep->add_option("--ckpt-ft", ckpt_ft, "fine-tuned checkpoint")->required();
    sweep->add_option("--alpha-step", alpha_step, "interpolation grid step");

    CLI::App* report = app.add_subcommand("report", "before/after delta summary");
    add_common(report);
    report->add_option("--ckpt-at", ckpt_at, "baseline checkpoint (default OUT/theta_at.ckpt)");
    report->add_option("--ckpt-rift", ckpt_ft, "pipeline checkpoint (default OUT/theta_rift.ckpt)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(train_std)) return run_train(opts, false);
        if (app.got_subcommand(train_at)) return run_train(opts, true);
        if (app.got_subcommand(scan)) return run_mrc_scan(opts, ckpt);
        if (app.got_subcommand(rift)) return run_rift(opts, ckpt, modules, alpha_step);
        if (app.got_subcommand(eval)) return run_eval(opts, ckpt);
        if (app.got_subcommand(sweep)) return run_sweep(opts, ckpt_at, ckpt_ft, alpha_step);
        if (app.got_subcommand(report)) return run_report(opts, ckpt_at, ckpt_ft);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
