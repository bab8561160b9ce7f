#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "riftlab/attack.hpp"
#include "riftlab/data.hpp"
#include "riftlab/mrc.hpp"
#include "riftlab/rift.hpp"

namespace riftlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad real for '" + key + "': '" + v + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for '" + key + "': '" + v + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad unsigned integer for '" + key + "': '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad boolean for '" + key + "': '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<int>(parse_int(key, trim(item))));
    return out;
}

inline std::vector<std::string> parse_name_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

}  // namespace detail

// Everything a run needs, read from `key = value` lines with `#` comments and
// dotted-key namespaces. Unknown keys are rejected; every key has a default.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string dataset = "shapes8x8";  // blobs2d | rings2d | shapes8x8
    std::string model = "cnn8";         // cnn8 | mlp2
    std::size_t train_size = 256;
    std::size_t test_size = 128;

    AttackConfig attack;
    TrainSchedule train;
    MRCConfig mrc;
    FineTuneConfig ft;
    std::string ft_modules = "auto";  // auto | all | last | top:K | name[,name...]

    double sweep_alpha_step = 0.05;
    double sweep_tolerance = 0.1;

    RunConfig() {
        train.epochs = 30;
        train.initial_lr = 0.05;
        train.decay_epochs = {20, 26};
    }

    void apply(const std::string& key, const std::string& value) {
        using namespace detail;
        if (key == "seed") seed = parse_u64(key, value);
        else if (key == "dataset") {
            try {
                synthetic_kind_from_string(value);
            } catch (const std::exception&) {
                throw ConfigError("config: unknown dataset '" + value + "'");
            }
            dataset = value;
        } else if (key == "model") {
            if (value != "cnn8" && value != "mlp2")
                throw ConfigError("config: unknown model '" + value + "'");
            model = value;
        } else if (key == "data.train_size") train_size = static_cast<std::size_t>(parse_u64(key, value));
        else if (key == "data.test_size") test_size = static_cast<std::size_t>(parse_u64(key, value));
        else if (key == "attack.eps_x") attack.eps_x = parse_real(key, value);
        else if (key == "attack.step_size") attack.step_size = parse_real(key, value);
        else if (key == "attack.steps") attack.steps = static_cast<int>(parse_int(key, value));
        else if (key == "attack.rand_init") attack.rand_init = parse_bool(key, value);
        else if (key == "train.epochs") train.epochs = static_cast<int>(parse_int(key, value));
        else if (key == "train.lr") train.initial_lr = parse_real(key, value);
        else if (key == "train.decay_epochs") train.decay_epochs = parse_int_list(key, value);
        else if (key == "train.decay_factor") train.decay_factor = parse_real(key, value);
        else if (key == "train.momentum") train.momentum = parse_real(key, value);
        else if (key == "train.weight_decay") train.weight_decay = parse_real(key, value);
        else if (key == "train.batch_size") train.batch_size = static_cast<int>(parse_int(key, value));
        else if (key == "mrc.eps_w") mrc.eps_w = parse_real(key, value);
        else if (key == "mrc.steps_t") mrc.steps_T = static_cast<int>(parse_int(key, value));
        else if (key == "mrc.gamma") mrc.gamma = parse_real(key, value);
        else if (key == "mrc.project_and_continue") mrc.project_and_continue = parse_bool(key, value);
        else if (key == "ft.lr") ft.lr = parse_real(key, value);
        else if (key == "ft.epochs") ft.epochs = static_cast<int>(parse_int(key, value));
        else if (key == "ft.decay_at_epoch") ft.decay_at_epoch = static_cast<int>(parse_int(key, value));
        else if (key == "ft.decay_factor") ft.decay_factor = parse_real(key, value);
        else if (key == "ft.momentum") ft.momentum = parse_real(key, value);
        else if (key == "ft.weight_decay") ft.weight_decay = parse_real(key, value);
        else if (key == "ft.batch_size") ft.batch_size = static_cast<int>(parse_int(key, value));
        else if (key == "ft.module_set") ft_modules = value;
        else if (key == "sweep.alpha_step") sweep_alpha_step = parse_real(key, value);
        else if (key == "sweep.tolerance") sweep_tolerance = parse_real(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    }

    static RunConfig parse(const std::string& text) {
        RunConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
            cfg.apply(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        }
        cfg.finalize();
        return cfg;
    }

    static RunConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    // Propagate the run seed and the shared attack settings into the
    // per-stage configs.
    void finalize() {
        train.seed = Rng::mix(seed, 21);
        ft.seed = Rng::mix(seed, 22);
        mrc.attack_cfg = attack;
    }

    // Canonical text with every key spelled out; doubles round-trip exactly.
    std::string resolved() const {
        std::ostringstream os;
        char buf[64];
        auto real = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return std::string(buf);
        };
        os << "# resolved run configuration\n";
        os << "seed = " << seed << "\n";
        os << "dataset = " << dataset << "\n";
        os << "model = " << model << "\n";
        os << "data.train_size = " << train_size << "\n";
        os << "data.test_size = " << test_size << "\n";
        os << "attack.eps_x = " << real(attack.eps_x) << "\n";
        os << "attack.step_size = " << real(attack.step_size) << "\n";
        os << "attack.steps = " << attack.steps << "\n";
        os << "attack.rand_init = " << (attack.rand_init ? "true" : "false") << "\n";
        os << "train.epochs = " << train.epochs << "\n";
        os << "train.lr = " << real(train.initial_lr) << "\n";
        os << "train.decay_epochs = ";
        for (std::size_t i = 0; i < train.decay_epochs.size(); ++i)
            os << (i ? "," : "") << train.decay_epochs[i];
        os << "\n";
        os << "train.decay_factor = " << real(train.decay_factor) << "\n";
        os << "train.momentum = " << real(train.momentum) << "\n";
        os << "train.weight_decay = " << real(train.weight_decay) << "\n";
        os << "train.batch_size = " << train.batch_size << "\n";
        os << "mrc.eps_w = " << real(mrc.eps_w) << "\n";
        os << "mrc.steps_t = " << mrc.steps_T << "\n";
        os << "mrc.gamma = " << real(mrc.gamma) << "\n";
        os << "mrc.project_and_continue = " << (mrc.project_and_continue ? "true" : "false") << "\n";
        os << "ft.lr = " << real(ft.lr) << "\n";
        os << "ft.epochs = " << ft.epochs << "\n";
        os << "ft.decay_at_epoch = " << ft.decay_at_epoch << "\n";
        os << "ft.decay_factor = " << real(ft.decay_factor) << "\n";
        os << "ft.momentum = " << real(ft.momentum) << "\n";
        os << "ft.weight_decay = " << real(ft.weight_decay) << "\n";
        os << "ft.batch_size = " << ft.batch_size << "\n";
        os << "ft.module_set = " << ft_modules << "\n";
        os << "sweep.alpha_step = " << real(sweep_alpha_step) << "\n";
        os << "sweep.tolerance = " << real(sweep_tolerance) << "\n";
        return os.str();
    }
};

// Model, train split, and test split for one run, derived deterministically
// from the config seed.
struct RunBundle {
    NetworkSpec spec;
    Dataset train;
    Dataset test;
};

inline NetworkSpec make_model(const std::string& model, const std::string& dataset);

inline RunBundle build_run(const RunConfig& cfg) {
    RunBundle b;
    b.spec = make_model(cfg.model, cfg.dataset);
    b.train = gen_synthetic(cfg.dataset, cfg.train_size, Rng::mix(cfg.seed, 11), "train");
    b.test = gen_synthetic(cfg.dataset, cfg.test_size, Rng::mix(cfg.seed, 12), "test");
    return b;
}

// Built-in architectures sized for the synthetic tasks.
inline NetworkSpec make_model(const std::string& model, const std::string& dataset) {
    SyntheticKind kind = synthetic_kind_from_string(dataset);
    NetworkSpec spec;
    spec.input_shape = synthetic_input_shape(kind);
    spec.num_classes = synthetic_num_classes(kind);
    if (model == "mlp2") {
        spec.layers = {
            LayerSpec::linear("fc1", 2, 16),
            LayerSpec::relu("relu1"),
            LayerSpec::linear("fc2", 16, 16),
            LayerSpec::relu("relu2"),
            LayerSpec::linear("fc3", 16, spec.num_classes),
        };
    } else if (model == "cnn8") {
        spec.layers = {
            LayerSpec::conv2d("conv1", 1, 6, 3, 1, 1),
            LayerSpec::relu("relu1"),
            LayerSpec::conv2d("conv2", 6, 12, 3, 2, 1),
            LayerSpec::relu("relu2"),
            LayerSpec::conv2d("conv3", 12, 12, 3, 2, 1),
            LayerSpec::relu("relu3"),
            LayerSpec::flatten("flat"),
            LayerSpec::linear("fc1", 48, 32),
            LayerSpec::relu("relu4"),
            LayerSpec::linear("fc2", 32, spec.num_classes),
        };
    } else {
        throw ConfigError("unknown model '" + model + "'");
    }
    spec.validate();
    return spec;
}

// Resolve the fine-tuning module selector against a finished scan.
inline std::vector<std::string> resolve_module_set(const std::string& selector,
                                                   const NetworkSpec& spec,
                                                   const MRCReport& report) {
    if (selector == "auto") return select_non_robust_critical(report, 1);
    if (selector == "all") return spec.parameterized_layers();
    if (selector == "last") {
        std::vector<std::string> all = spec.parameterized_layers();
        return {all.back()};
    }
    if (selector.rfind("top:", 0) == 0) {
        std::size_t k = static_cast<std::size_t>(detail::parse_u64("ft.module_set", selector.substr(4)));
        return select_non_robust_critical(report, k);
    }
    std::vector<std::string> names = detail::parse_name_list(selector);
    for (const std::string& n : names) {
        if (!spec.layer(n).parameterized())
            throw ConfigError("ft.module_set: '" + n + "' is not a parameterized layer");
    }
    if (names.empty()) throw ConfigError("ft.module_set: empty selector");
    return names;
}

}  // namespace riftlab
