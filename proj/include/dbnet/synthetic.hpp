#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dbnet/core.hpp"
#include "dbnet/csv.hpp"
#include "dbnet/resample.hpp"

namespace dbnet {

// Seeded stand-in for the clinical dataset. Dynamics are a stable VAR(1) in
// standardized units:
//
//   z[t+1] = A z[t] + c_label * d + eps,   eps ~ N(0, noise_sigma^2 I)
//
// where A couples every dynamic feature to a slow severity driver (the first
// blood feature). Critical patients additionally start with the driver
// displaced by init_shift, so class separability grows with the slice index
// as the displacement propagates through A.
struct GeneratorConfig {
    int n_patients = 1000;
    int n_features = 12;          // total; includes 5 vitals and 3 statics
    double critical_prevalence = 0.188;
    double missing_rate = 0.0;
    double stay_continue_p = 0.6;  // geometric tail beyond the 2-slice mode
    int max_stay_slices = 16;
    double ar_base = 0.5;          // self-coefficient of ordinary dynamic features
    double ar_driver = 0.99;       // self-coefficient of the severity driver
    double coupling = 0.3;         // driver -> feature coefficient
    double noise_sigma = 0.35;
    double drift_scale = 0.12;     // per-step drift on the driver, critical only
    double init_shift = 2.2;       // admission-time driver displacement, critical only

    json to_json() const {
        return {{"n_patients", n_patients},
                {"n_features", n_features},
                {"critical_prevalence", critical_prevalence},
                {"missing_rate", missing_rate},
                {"stay_continue_p", stay_continue_p},
                {"max_stay_slices", max_stay_slices},
                {"ar_base", ar_base},
                {"ar_driver", ar_driver},
                {"coupling", coupling},
                {"noise_sigma", noise_sigma},
                {"drift_scale", drift_scale},
                {"init_shift", init_shift}};
    }
};

namespace detail {

struct FeatureSpec {
    Feature feature;
    double mean;
    double scale;
};

inline std::vector<FeatureSpec> synthetic_feature_specs(int n_features) {
    std::vector<FeatureSpec> base = {
        {{"spo2_max", FeatureKind::Vital, "%"}, 96.0, 2.0},
        {{"temp_max", FeatureKind::Vital, "C"}, 37.0, 0.7},
        {{"heart_rate_min", FeatureKind::Vital, "bpm"}, 75.0, 10.0},
        {{"bp_sys_min", FeatureKind::Vital, "mmHg"}, 115.0, 12.0},
        {{"bp_dia_min", FeatureKind::Vital, "mmHg"}, 70.0, 8.0},
        {{"age", FeatureKind::Static, "years"}, 65.0, 15.0},
        {{"gender", FeatureKind::Static, ""}, 0.0, 1.0},
        {{"bmi", FeatureKind::Static, "kg/m2"}, 28.0, 5.0},
        {{"d_dimer", FeatureKind::Blood, "ng/mL"}, 600.0, 250.0},
        {{"albumin", FeatureKind::Blood, "g/dL"}, 4.0, 0.5},
        {{"crp", FeatureKind::Blood, "mg/L"}, 50.0, 30.0},
        {{"ldh", FeatureKind::Blood, "U/L"}, 250.0, 60.0},
        {{"lymphocytes", FeatureKind::Blood, "1e3/uL"}, 1.5, 0.6},
    };
    if (n_features < 9)
        throw ConfigError("synthetic schema needs at least 9 features (5 vitals + 3 statics + driver)");
    std::vector<FeatureSpec> out;
    for (int i = 0; i < n_features; ++i) {
        if (i < static_cast<int>(base.size())) {
            out.push_back(base[static_cast<std::size_t>(i)]);
        } else {
            char buf[24];
            std::snprintf(buf, sizeof buf, "blood_%02d", i);
            out.push_back({{buf, FeatureKind::Blood, ""}, 10.0, 3.0});
        }
    }
    return out;
}

}  // namespace detail

inline FeatureSchema synthetic_schema(int n_features) {
    std::vector<Feature> feats;
    for (const auto& fs : detail::synthetic_feature_specs(n_features)) feats.push_back(fs.feature);
    return FeatureSchema(std::move(feats));
}

inline Cohort generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed) {
    if (!(cfg.critical_prevalence > 0.0 && cfg.critical_prevalence < 1.0))
        throw ConfigError("critical_prevalence must lie in (0, 1)");
    if (std::abs(cfg.ar_base) >= 1.0 || std::abs(cfg.ar_driver) >= 1.0)
        throw ConfigError("unstable transition requested: autoregressive coefficients must have |a| < 1");
    if (!(cfg.missing_rate >= 0.0 && cfg.missing_rate < 1.0))
        throw ConfigError("missing_rate must lie in [0, 1)");
    if (cfg.n_patients < 1) throw ConfigError("n_patients must be positive");

    const auto specs = detail::synthetic_feature_specs(cfg.n_features);
    const int n = cfg.n_features;
    const std::size_t driver = 8;  // d_dimer

    // A is triangular up to permutation (only the driver feeds other rows),
    // so its eigenvalues are the diagonal entries; the check above implies
    // spectral radius < 1.
    Mat A = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (specs[static_cast<std::size_t>(i)].feature.kind == FeatureKind::Static) continue;
        A(i, i) = (static_cast<std::size_t>(i) == driver) ? cfg.ar_driver : cfg.ar_base;
        if (static_cast<std::size_t>(i) != driver) {
            double sign = (i % 2 == 0) ? -1.0 : 1.0;  // severity depresses spo2, raises crp, ...
            A(i, static_cast<long>(driver)) = sign * cfg.coupling;
        }
    }

    std::vector<RawObservation> observations;
    for (int p = 0; p < cfg.n_patients; ++p) {
        std::mt19937_64 rng(derive_seed(seed, "synthetic_patient", static_cast<std::uint64_t>(p)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        const bool critical = unif(rng) < cfg.critical_prevalence;
        int stay = 2;
        while (stay < cfg.max_stay_slices && unif(rng) < cfg.stay_continue_p) ++stay;

        Vec z(n);
        for (int f = 0; f < n; ++f) z[f] = gauss(rng);
        if (critical) z[static_cast<long>(driver)] += cfg.init_shift;
        double age = z[5];
        double gender = unif(rng) < 0.5 ? 0.0 : 1.0;
        double bmi = z[7];

        char id[32];
        std::snprintf(id, sizeof id, "P%06d", p);
        for (int t = 0; t < stay; ++t) {
            if (t > 0) {
                Vec eps(n);
                for (int f = 0; f < n; ++f) eps[f] = cfg.noise_sigma * gauss(rng);
                z = A * z + eps;
                if (critical) z[static_cast<long>(driver)] += cfg.drift_scale;
            }
            RawObservation obs;
            obs.patient_id = id;
            obs.timestamp_minutes = static_cast<std::int64_t>(t) * 240;
            obs.outcome_critical = critical;
            obs.values.assign(static_cast<std::size_t>(n), std::nullopt);
            for (int f = 0; f < n; ++f) {
                const auto& fs = specs[static_cast<std::size_t>(f)];
                double latent = z[f];
                if (f == 5) latent = age;
                if (f == 7) latent = bmi;
                double value = fs.feature.name == "gender" ? gender : fs.mean + fs.scale * latent;
                if (cfg.missing_rate > 0.0 && unif(rng) < cfg.missing_rate) continue;
                obs.values[static_cast<std::size_t>(f)] = value;
            }
            observations.push_back(std::move(obs));
        }
    }

    FeatureSchema schema = synthetic_schema(cfg.n_features);
    Cohort cohort = resample(observations, schema, 4.0);
    cohort.provenance = {{"generator", cfg.to_json()}, {"seed", seed}};
    return cohort;
}

}  // namespace dbnet
