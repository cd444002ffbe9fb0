#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dbnet/core.hpp"
#include "dbnet/de.hpp"
#include "dbnet/mlp.hpp"
#include "dbnet/smote.hpp"
#include "dbnet/synthetic.hpp"

namespace dbnet {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline json parse_toml_value(const std::string& raw, int line_no) {
    std::string v = trim(raw);
    if (v.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing value");
    if (v.front() == '"') {
        const auto close = v.find('"', 1);
        if (close == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
        if (!trim(v.substr(close + 1)).empty() && trim(v.substr(close + 1))[0] != '#')
            throw ConfigError("line " + std::to_string(line_no) + ": trailing characters after string");
        return v.substr(1, close - 1);
    }
    const auto hash = v.find('#');
    if (hash != std::string::npos) v = trim(v.substr(0, hash));
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.find_first_of(".eE") == std::string::npos || (v.size() > 1 && v[0] == '0' && v[1] == 'x')) {
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
        if (ec == std::errc() && p == v.data() + v.size()) return i;
    }
    double d = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("line " + std::to_string(line_no) + ": malformed value '" + v + "'");
    return d;
}

}  // namespace detail

// Minimal TOML subset: [section] headers, key = value with string, integer,
// float, and boolean values, and # comments. Enough for pipeline configs.
inline json parse_toml(std::istream& in) {
    json root = json::object();
    json* section = &root;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            const std::string name = detail::trim(t.substr(1, t.size() - 2));
            if (name.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
            section = &root[name];
            if (!section->is_object()) *section = json::object();
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        (*section)[key] = detail::parse_toml_value(t.substr(eq + 1), line_no);
    }
    return root;
}

inline json parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_toml(in);
}

namespace detail {

// typed section reader that rejects unknown keys so typos surface early
class SectionReader {
public:
    SectionReader(const json& section, std::string name) : section_(section), name_(std::move(name)) {}

    double number(const std::string& key, double fallback) {
        mark(key);
        if (!section_.contains(key)) return fallback;
        const auto& v = section_.at(key);
        if (!v.is_number()) throw ConfigError(name_ + "." + key + " must be a number");
        return v.get<double>();
    }

    int integer(const std::string& key, int fallback) {
        mark(key);
        if (!section_.contains(key)) return fallback;
        const auto& v = section_.at(key);
        if (!v.is_number_integer()) throw ConfigError(name_ + "." + key + " must be an integer");
        return v.get<int>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        mark(key);
        if (!section_.contains(key)) return fallback;
        const auto& v = section_.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
            throw ConfigError(name_ + "." + key + " must be a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        mark(key);
        if (!section_.contains(key)) return fallback;
        const auto& v = section_.at(key);
        if (!v.is_boolean()) throw ConfigError(name_ + "." + key + " must be a boolean");
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        mark(key);
        if (!section_.contains(key)) return fallback;
        const auto& v = section_.at(key);
        if (!v.is_string()) throw ConfigError(name_ + "." + key + " must be a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& [key, _] : section_.items())
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
                throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
    }

private:
    const json& section_;
    std::string name_;
    std::vector<std::string> seen_;

    void mark(const std::string& key) { seen_.push_back(key); }
};

inline std::vector<std::string> split_names(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

struct InputConfig {
    std::string csv_path;
    FeatureSchema schema;
};

struct PipelineConfig {
    json raw = json::object();  // snapshot embedded into reports

    std::optional<GeneratorConfig> generator;
    std::optional<InputConfig> input;

    double period_hours = 4.0;
    double train_fraction = 0.8;
    double validation_fraction = 0.25;  // carved out of the training split when tuning

    bool select_enabled = false;
    int select_n_blood = 5;
    int select_n_trees = 100;
    int select_max_depth = 8;

    int dbn_max_parents = 5;
    int dbn_restarts = 2;

    std::string classifier_kind = "mlp";
    TrainConfig mlp;
    int hcsp_bins = 3;
    int hcsp_folds = 5;

    bool smote_enabled = true;
    SmoteConfig smote;

    bool tune_enabled = false;
    DeConfig de;

    int horizon = 10;
    bool first_slice_only = false;

    std::string out_dir = "run";

    static PipelineConfig from_json(const json& root) {
        PipelineConfig cfg;
        cfg.raw = root;
        for (const auto& [key, value] : root.items()) {
            static const std::vector<std::string> known{"generator", "input",      "preprocess",
                                                        "select",    "dbn",        "classifier",
                                                        "smote",     "tune",       "evaluate",
                                                        "output"};
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw ConfigError("unknown config section [" + key + "]");
            if (!value.is_object()) throw ConfigError("[" + key + "] must be a section");
        }
        if (root.contains("generator") == root.contains("input"))
            throw ConfigError("config must contain exactly one of [generator] and [input]");

        if (root.contains("generator")) {
            detail::SectionReader s(root.at("generator"), "generator");
            GeneratorConfig g;
            g.n_patients = s.integer("n_patients", g.n_patients);
            g.n_features = s.integer("n_features", g.n_features);
            g.critical_prevalence = s.number("critical_prevalence", g.critical_prevalence);
            g.missing_rate = s.number("missing_rate", g.missing_rate);
            g.stay_continue_p = s.number("stay_continue_p", g.stay_continue_p);
            g.max_stay_slices = s.integer("max_stay_slices", g.max_stay_slices);
            g.ar_base = s.number("ar_base", g.ar_base);
            g.ar_driver = s.number("ar_driver", g.ar_driver);
            g.coupling = s.number("coupling", g.coupling);
            g.noise_sigma = s.number("noise_sigma", g.noise_sigma);
            g.drift_scale = s.number("drift_scale", g.drift_scale);
            g.init_shift = s.number("init_shift", g.init_shift);
            s.finish();
            cfg.generator = g;
        } else {
            detail::SectionReader s(root.at("input"), "input");
            InputConfig in;
            in.csv_path = s.string("csv", "");
            if (in.csv_path.empty()) throw ConfigError("input.csv is required");
            std::vector<Feature> feats;
            for (const auto& n : detail::split_names(s.string("vitals", "")))
                feats.push_back({n, FeatureKind::Vital});
            for (const auto& n : detail::split_names(s.string("statics", "")))
                feats.push_back({n, FeatureKind::Static});
            for (const auto& n : detail::split_names(s.string("bloods", "")))
                feats.push_back({n, FeatureKind::Blood});
            s.finish();
            in.schema = FeatureSchema(std::move(feats));
            cfg.input = std::move(in);
        }

        if (root.contains("preprocess")) {
            detail::SectionReader s(root.at("preprocess"), "preprocess");
            cfg.period_hours = s.number("period_hours", cfg.period_hours);
            cfg.train_fraction = s.number("train_fraction", cfg.train_fraction);
            cfg.validation_fraction = s.number("validation_fraction", cfg.validation_fraction);
            s.finish();
        }
        if (root.contains("select")) {
            detail::SectionReader s(root.at("select"), "select");
            cfg.select_enabled = s.boolean("enabled", true);
            cfg.select_n_blood = s.integer("n_blood", cfg.select_n_blood);
            cfg.select_n_trees = s.integer("n_trees", cfg.select_n_trees);
            cfg.select_max_depth = s.integer("max_depth", cfg.select_max_depth);
            s.finish();
        }
        if (root.contains("dbn")) {
            detail::SectionReader s(root.at("dbn"), "dbn");
            cfg.dbn_max_parents = s.integer("max_parents", cfg.dbn_max_parents);
            cfg.dbn_restarts = s.integer("restarts", cfg.dbn_restarts);
            s.finish();
        }
        if (root.contains("classifier")) {
            detail::SectionReader s(root.at("classifier"), "classifier");
            cfg.classifier_kind = s.string("kind", cfg.classifier_kind);
            cfg.mlp.learning_rate = s.number("learning_rate", cfg.mlp.learning_rate);
            cfg.mlp.epochs = s.integer("epochs", cfg.mlp.epochs);
            cfg.mlp.batch_size = s.integer("batch_size", cfg.mlp.batch_size);
            cfg.hcsp_bins = s.integer("bins", cfg.hcsp_bins);
            cfg.hcsp_folds = s.integer("folds", cfg.hcsp_folds);
            s.finish();
            if (cfg.classifier_kind != "mlp" && cfg.classifier_kind != "hcsp")
                throw ConfigError("classifier.kind must be 'mlp' or 'hcsp'");
        }
        if (root.contains("smote")) {
            detail::SectionReader s(root.at("smote"), "smote");
            cfg.smote_enabled = s.boolean("enabled", true);
            cfg.smote.k_neighbors = s.integer("k_neighbors", cfg.smote.k_neighbors);
            cfg.smote.perc_over = s.number("perc_over", cfg.smote.perc_over);
            cfg.smote.perc_under = s.number("perc_under", cfg.smote.perc_under);
            s.finish();
        }
        if (root.contains("tune")) {
            detail::SectionReader s(root.at("tune"), "tune");
            cfg.tune_enabled = s.boolean("enabled", true);
            cfg.de.population_size = s.integer("population_size", cfg.de.population_size);
            cfg.de.max_generations = s.integer("generations", cfg.de.max_generations);
            cfg.de.weight = s.number("weight", cfg.de.weight);
            cfg.de.crossover = s.number("crossover", cfg.de.crossover);
            s.finish();
        }
        if (root.contains("evaluate")) {
            detail::SectionReader s(root.at("evaluate"), "evaluate");
            cfg.horizon = s.integer("horizon", cfg.horizon);
            cfg.first_slice_only = s.boolean("first_slice_only", cfg.first_slice_only);
            s.finish();
        }
        if (root.contains("output")) {
            detail::SectionReader s(root.at("output"), "output");
            cfg.out_dir = s.string("dir", cfg.out_dir);
            s.finish();
        }

        if (cfg.horizon < 1) throw ConfigError("evaluate.horizon must be >= 1");
        cfg.mlp.validate();
        return cfg;
    }

    static PipelineConfig from_toml_file(const std::string& path) {
        return from_json(parse_toml_file(path));
    }
};

}  // namespace dbnet
