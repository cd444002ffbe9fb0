#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace dbnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using json = nlohmann::json;

// Exit-code mapping in the CLI: ConfigError -> 1, DataError -> 2, NumericError -> 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class FeatureKind { Vital, Blood, Static };

inline std::string to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::Vital: return "vital";
        case FeatureKind::Blood: return "blood";
        case FeatureKind::Static: return "static";
    }
    throw std::logic_error("bad FeatureKind");
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "vital") return FeatureKind::Vital;
    if (s == "blood") return FeatureKind::Blood;
    if (s == "static") return FeatureKind::Static;
    throw DataError("unknown feature kind: " + s);
}

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::Vital;
    std::string unit;
};

// Ordered feature list; the order is shared by every StateVector built
// against this schema. May carry fallback means frozen from a training split.
class FeatureSchema {
public:
    FeatureSchema() = default;

    explicit FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
        bool has_vital = false;
        for (std::size_t i = 0; i < features_.size(); ++i) {
            const auto& f = features_[i];
            if (index_.count(f.name)) throw DataError("duplicate feature name: " + f.name);
            index_[f.name] = i;
            if (f.kind == FeatureKind::Vital) has_vital = true;
        }
        if (!has_vital) throw DataError("schema needs at least one vital feature");
    }

    std::size_t size() const { return features_.size(); }
    const std::vector<Feature>& features() const { return features_; }
    const Feature& at(std::size_t i) const { return features_.at(i); }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw DataError("unknown feature: " + name);
        return it->second;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(features_.size());
        for (const auto& f : features_) out.push_back(f.name);
        return out;
    }

    const std::optional<Vec>& fallback_means() const { return fallback_means_; }
    void freeze_fallback_means(Vec means) {
        if (static_cast<std::size_t>(means.size()) != features_.size())
            throw DataError("fallback mean length mismatch");
        fallback_means_ = std::move(means);
    }

    // FNV-1a over names and kinds; guards model/schema pairing at load time.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](const std::string& s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 1099511628211ull;
            }
            h ^= 0x1f;
            h *= 1099511628211ull;
        };
        for (const auto& f : features_) {
            mix(f.name);
            mix(to_string(f.kind));
        }
        return h;
    }

    json to_json() const {
        json feats = json::array();
        for (const auto& f : features_)
            feats.push_back({{"name", f.name}, {"kind", to_string(f.kind)}, {"unit", f.unit}});
        json j{{"features", feats}};
        if (fallback_means_) {
            j["fallback_means"] = std::vector<double>(fallback_means_->begin(), fallback_means_->end());
        }
        return j;
    }

    static FeatureSchema from_json(const json& j) {
        std::vector<Feature> feats;
        for (const auto& f : j.at("features"))
            feats.push_back({f.at("name").get<std::string>(),
                             feature_kind_from_string(f.at("kind").get<std::string>()),
                             f.value("unit", "")});
        FeatureSchema schema(std::move(feats));
        if (j.contains("fallback_means")) {
            auto v = j["fallback_means"].get<std::vector<double>>();
            schema.freeze_fallback_means(Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size())));
        }
        return schema;
    }

private:
    std::vector<Feature> features_;
    std::map<std::string, std::size_t> index_;
    std::optional<Vec> fallback_means_;
};

struct PatientSeries {
    std::string patient_id;
    std::vector<Vec> slices;  // 4 h spacing, no missing entries
    bool label_critical = false;
};

struct Cohort {
    FeatureSchema schema;
    std::vector<PatientSeries> patients;
    json provenance;  // generator parameters when synthetic, empty otherwise

    json to_json() const {
        json pts = json::array();
        for (const auto& p : patients) {
            json slices = json::array();
            for (const auto& s : p.slices) slices.push_back(std::vector<double>(s.begin(), s.end()));
            pts.push_back({{"id", p.patient_id}, {"label", p.label_critical}, {"slices", slices}});
        }
        json j{{"schema", schema.to_json()}, {"patients", pts}};
        if (!provenance.empty()) j["provenance"] = provenance;
        return j;
    }

    static Cohort from_json(const json& j) {
        Cohort c;
        c.schema = FeatureSchema::from_json(j.at("schema"));
        for (const auto& p : j.at("patients")) {
            PatientSeries ps;
            ps.patient_id = p.at("id").get<std::string>();
            ps.label_critical = p.at("label").get<bool>();
            for (const auto& s : p.at("slices")) {
                auto v = s.get<std::vector<double>>();
                if (v.size() != c.schema.size()) throw DataError("slice length mismatch in cohort json");
                ps.slices.push_back(Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size())));
            }
            c.patients.push_back(std::move(ps));
        }
        if (j.contains("provenance")) c.provenance = j["provenance"];
        return c;
    }
};

// Stacked transitions [X^t | X^{t+1}], one row per consecutive slice pair.
struct TransitionDataset {
    Mat rows;  // N x 2n
    std::vector<std::pair<std::string, int>> provenance;  // (patient_id, slice index of X^t)

    std::size_t n_vars() const { return static_cast<std::size_t>(rows.cols()) / 2; }
    std::size_t n_rows() const { return static_cast<std::size_t>(rows.rows()); }
};

// --- seeding -----------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Stage seeds fan out from the master seed by hashing the stage name, so any
// stage can be rerun in isolation with a reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& stage) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : stage) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return splitmix64(master ^ h);
}

inline std::uint64_t derive_seed(std::uint64_t master, const std::string& stage, std::uint64_t k) {
    return splitmix64(derive_seed(master, stage) + 0x632be59bd9b4e019ull * (k + 1));
}

}  // namespace dbnet
