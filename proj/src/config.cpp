#include "assgd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

namespace assgd {

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "activation",     "algorithm",   "algorithms",   "batch_size",     "beta",         "checkpoint",
        "data_format",    "dimension",   "eta",          "eval_every",     "gamma",        "gamma_growth", "hidden",
        "init_scale",     "initial_weight", "iterations", "labels",        "lambda",       "loss",
        "lr_decay",       "model",       "num_seeds",    "output",         "regularizer",  "seed",
        "seeds",          "split_seed",  "stage_g",      "stage_m",        "stage_passes", "summary",
        "synth_dim",      "synth_easy",  "synth_margin", "synth_n",        "synth_seed",   "target_fraction",
        "target_loss",    "test_data",   "test_fraction", "test_labels",   "train_data",   "train_labels",
        "variance",       "variance_draws",
    };
    return keys;
}

namespace {

std::string trim(const std::string& s) {
    const auto* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string valid_keys_message() {
    std::string msg = "valid keys:";
    for (const auto& k : config_keys()) msg += " " + k;
    return msg;
}

void check_key(const std::string& key) {
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw ConfigError("unknown config key '" + key + "'; " + valid_keys_message());
}

double as_double(const KeyValues& kv, const std::string& key) {
    const auto& s = kv.at(key);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError("config key '" + key + "' expects a number, got '" + s + "'");
    return v;
}

std::uint64_t as_uint(const KeyValues& kv, const std::string& key) {
    const auto& s = kv.at(key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + s + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class F>
void with(const KeyValues& kv, const std::string& key, F&& f) {
    if (auto it = kv.find(key); it != kv.end()) {
        try {
            f();
        } catch (const ConfigError&) {
            throw;
        } catch (const ArgumentError& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        auto key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '-', '_');
        check_key(key);
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues load_key_values(const std::string& path) {
    std::ifstream in(resolve_config_path(path));
    if (!in) throw Error("cannot open config " + path);
    return parse_key_values(in);
}

std::string resolve_config_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::path(path).is_absolute() || fs::exists(path)) return path;
    if (const char* dir = std::getenv("ASSGD_CONFIG_DIR"); dir && *dir) {
        auto candidate = fs::path(dir) / path;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

RunConfig resolve_config(const KeyValues& kv) {
    for (const auto& [k, v] : kv) check_key(k);
    RunConfig rc;
    auto& t = rc.train;
    auto& d = rc.data;
    with(kv, "algorithm", [&] { t.algorithm = parse_algorithm(kv.at("algorithm")); });
    with(kv, "eta", [&] { t.eta = as_double(kv, "eta"); });
    with(kv, "lr_decay", [&] { t.lr_decay = as_double(kv, "lr_decay"); });
    with(kv, "batch_size", [&] { t.batch_size = as_uint(kv, "batch_size"); });
    with(kv, "iterations", [&] { t.iterations = as_uint(kv, "iterations"); });
    with(kv, "beta", [&] { t.beta = as_double(kv, "beta"); });
    with(kv, "seed", [&] { t.seed = as_uint(kv, "seed"); });
    with(kv, "eval_every", [&] { t.eval_every = as_uint(kv, "eval_every"); });
    with(kv, "loss", [&] { t.loss.loss = parse_loss(kv.at("loss")); });
    with(kv, "regularizer", [&] { t.loss.regularizer = parse_regularizer(kv.at("regularizer")); });
    with(kv, "lambda", [&] { t.loss.lambda = as_double(kv, "lambda"); });
    with(kv, "initial_weight", [&] { t.initial_weight = as_double(kv, "initial_weight"); });
    with(kv, "stage_m", [&] { t.stage.m = as_uint(kv, "stage_m"); });
    with(kv, "stage_g", [&] { t.stage.g = as_uint(kv, "stage_g"); });
    with(kv, "stage_passes", [&] { t.stage.passes = as_uint(kv, "stage_passes"); });
    with(kv, "gamma", [&] { t.stage.gamma = as_double(kv, "gamma"); });
    with(kv, "gamma_growth", [&] { t.stage.gamma_growth = as_double(kv, "gamma_growth"); });
    with(kv, "model", [&] {
        const auto& m = kv.at("model");
        if (m == "linear") t.model.kind = ModelKind::linear;
        else if (m == "mlp") t.model.kind = ModelKind::mlp;
        else throw ConfigError("config key 'model' expects linear or mlp");
    });
    with(kv, "hidden", [&] {
        t.model.hidden.clear();
        for (const auto& w : split_list(kv.at("hidden"))) {
            KeyValues tmp{{"hidden", w}};
            t.model.hidden.push_back(as_uint(tmp, "hidden"));
        }
    });
    with(kv, "activation", [&] { t.model.activation = parse_activation(kv.at("activation")); });
    with(kv, "init_scale", [&] { t.model.init_scale = as_double(kv, "init_scale"); });
    with(kv, "variance", [&] {
        const auto& v = kv.at("variance");
        if (v == "none") t.variance = VarianceTracking::none;
        else if (v == "exact") t.variance = VarianceTracking::exact;
        else if (v == "sampled") t.variance = VarianceTracking::sampled;
        else throw ConfigError("config key 'variance' expects none, exact or sampled");
    });
    with(kv, "variance_draws", [&] { t.variance_draws = as_uint(kv, "variance_draws"); });

    with(kv, "train_data", [&] { d.train_data = kv.at("train_data"); });
    with(kv, "test_data", [&] { d.test_data = kv.at("test_data"); });
    with(kv, "train_labels", [&] { d.train_labels = kv.at("train_labels"); });
    with(kv, "test_labels", [&] { d.test_labels = kv.at("test_labels"); });
    with(kv, "data_format", [&] {
        d.format = kv.at("data_format");
        if (d.format != "libsvm" && d.format != "idx" && d.format != "csv")
            throw ConfigError("config key 'data_format' expects libsvm, idx or csv");
    });
    with(kv, "dimension", [&] { d.libsvm.dimension = as_uint(kv, "dimension"); });
    with(kv, "labels", [&] {
        const auto& l = kv.at("labels");
        if (l == "auto") d.libsvm.labels = LabelMode::automatic;
        else if (l == "binary") d.libsvm.labels = LabelMode::binary;
        else if (l == "multiclass") d.libsvm.labels = LabelMode::multiclass;
        else throw ConfigError("config key 'labels' expects auto, binary or multiclass");
    });
    with(kv, "test_fraction", [&] { d.test_fraction = as_double(kv, "test_fraction"); });
    with(kv, "split_seed", [&] { d.split_seed = as_uint(kv, "split_seed"); });
    with(kv, "synth_n", [&] { d.synth.n = as_uint(kv, "synth_n"); });
    with(kv, "synth_dim", [&] { d.synth.dim = as_uint(kv, "synth_dim"); });
    with(kv, "synth_easy", [&] { d.synth.easy_fraction = as_double(kv, "synth_easy"); });
    with(kv, "synth_margin", [&] { d.synth.margin = as_double(kv, "synth_margin"); });
    with(kv, "synth_seed", [&] { d.synth.seed = as_uint(kv, "synth_seed"); });

    with(kv, "output", [&] { rc.output = kv.at("output"); });
    with(kv, "checkpoint", [&] { rc.checkpoint = kv.at("checkpoint"); });
    with(kv, "summary", [&] { rc.summary = kv.at("summary"); });
    with(kv, "algorithms", [&] {
        for (const auto& a : split_list(kv.at("algorithms"))) rc.algorithms.push_back(parse_algorithm(a));
    });
    with(kv, "seeds", [&] {
        for (const auto& s : split_list(kv.at("seeds"))) {
            KeyValues tmp{{"seeds", s}};
            rc.seeds.push_back(as_uint(tmp, "seeds"));
        }
    });
    with(kv, "num_seeds", [&] {
        const auto count = as_uint(kv, "num_seeds");
        rc.seeds.clear();
        for (std::uint64_t s = 0; s < count; ++s) rc.seeds.push_back(t.seed + s);
    });
    with(kv, "target_loss", [&] { rc.target_loss = as_double(kv, "target_loss"); });
    with(kv, "target_fraction", [&] {
        rc.target_fraction = as_double(kv, "target_fraction");
        if (!(rc.target_fraction > 0.0 && rc.target_fraction <= 1.0))
            throw ConfigError("config key 'target_fraction' must lie in (0, 1]");
    });

    try {
        t.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    if (d.test_fraction < 0.0 || d.test_fraction >= 1.0) throw ConfigError("test_fraction must lie in [0, 1)");
    return rc;
}

std::pair<Dataset, std::optional<Dataset>> load_data(const DataConfig& config) {
    auto load = [&](const std::string& path, const std::string& labels, std::optional<std::size_t> dim) {
        if (config.format == "idx") {
            if (labels.empty()) throw ConfigError("IDX data needs a labels file");
            return load_idx(path, labels);
        }
        if (config.format == "csv") return load_csv(path, config.libsvm.labels);
        auto opts = config.libsvm;
        if (dim) opts.dimension = dim;
        return load_libsvm(path, opts);
    };
    if (config.train_data.empty()) {
        auto data = synth_biased(config.synth);
        if (config.test_fraction > 0.0) {
            auto [train, test] = split(data, config.test_fraction, config.split_seed);
            return {std::move(train), std::move(test)};
        }
        return {std::move(data), std::nullopt};
    }
    auto train = load(config.train_data, config.train_labels, std::nullopt);
    if (!config.test_data.empty()) {
        auto test = load(config.test_data, config.test_labels, train.dimension());
        return {std::move(train), std::move(test)};
    }
    if (config.test_fraction > 0.0) {
        auto [a, b] = split(train, config.test_fraction, config.split_seed);
        return {std::move(a), std::move(b)};
    }
    return {std::move(train), std::nullopt};
}

}  // namespace assgd
