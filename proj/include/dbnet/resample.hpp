#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "dbnet/core.hpp"
#include "dbnet/csv.hpp"

namespace dbnet {

// Buckets anchored at each patient's first timestamp. A bucket averages the
// observations falling inside it; a feature unseen in a bucket gets the mean
// of the patient's other buckets, and if unseen for the whole patient, the
// schema's frozen fallback mean (or the cohort-wide mean of this batch when
// none is frozen). Empty intermediate buckets still emit a slice so that the
// slice index stays proportional to elapsed time.
inline Cohort resample(const std::vector<RawObservation>& observations, const FeatureSchema& schema,
                       double period_hours = 4.0) {
    if (period_hours <= 0) throw ConfigError("period_hours must be positive");
    const std::int64_t period_min = static_cast<std::int64_t>(std::llround(period_hours * 60.0));
    const std::size_t n = schema.size();

    // cohort-wide means, used only when the schema carries no frozen fallback
    Vec cohort_sum = Vec::Zero(static_cast<long>(n));
    std::vector<std::int64_t> cohort_count(n, 0);
    for (const auto& obs : observations)
        for (std::size_t f = 0; f < n; ++f)
            if (obs.values[f]) {
                cohort_sum[static_cast<long>(f)] += *obs.values[f];
                ++cohort_count[f];
            }

    Vec fallback(static_cast<long>(n));
    for (std::size_t f = 0; f < n; ++f) {
        if (schema.fallback_means()) {
            fallback[static_cast<long>(f)] = (*schema.fallback_means())[static_cast<long>(f)];
        } else {
            if (cohort_count[f] == 0)
                throw DataError("feature '" + schema.at(f).name + "' missing for the entire cohort");
            fallback[static_cast<long>(f)] = cohort_sum[static_cast<long>(f)] / static_cast<double>(cohort_count[f]);
        }
    }

    Cohort cohort;
    cohort.schema = schema;

    std::size_t i = 0;
    while (i < observations.size()) {
        std::size_t j = i;
        while (j < observations.size() && observations[j].patient_id == observations[i].patient_id) ++j;

        const std::int64_t t0 = observations[i].timestamp_minutes;
        const std::size_t n_buckets =
            static_cast<std::size_t>((observations[j - 1].timestamp_minutes - t0) / period_min) + 1;

        Mat sums = Mat::Zero(static_cast<long>(n_buckets), static_cast<long>(n));
        Mat counts = Mat::Zero(static_cast<long>(n_buckets), static_cast<long>(n));
        for (std::size_t k = i; k < j; ++k) {
            const long b = static_cast<long>((observations[k].timestamp_minutes - t0) / period_min);
            for (std::size_t f = 0; f < n; ++f)
                if (observations[k].values[f]) {
                    sums(b, static_cast<long>(f)) += *observations[k].values[f];
                    counts(b, static_cast<long>(f)) += 1.0;
                }
        }

        PatientSeries ps;
        ps.patient_id = observations[i].patient_id;
        ps.label_critical = observations[i].outcome_critical;
        for (std::size_t f = 0; f < n; ++f) {
            const long fc = static_cast<long>(f);
            double total = sums.col(fc).sum();
            double cnt = counts.col(fc).sum();
            double patient_mean = cnt > 0 ? total / cnt : fallback[fc];
            // static features broadcast their patient-level mean to every slice
            bool is_static = schema.at(f).kind == FeatureKind::Static;
            for (long b = 0; b < static_cast<long>(n_buckets); ++b) {
                if (is_static || counts(b, fc) == 0.0)
                    sums(b, fc) = patient_mean;
                else
                    sums(b, fc) = sums(b, fc) / counts(b, fc);
            }
        }
        for (long b = 0; b < static_cast<long>(n_buckets); ++b) {
            Vec slice = sums.row(b).transpose();
            if (!slice.allFinite()) throw NumericError("non-finite slice after resampling");
            ps.slices.push_back(std::move(slice));
        }
        cohort.patients.push_back(std::move(ps));
        i = j;
    }
    return cohort;
}

// Freeze per-feature means of a (training) cohort into a schema copy, so
// test-time resampling imputes from training statistics only.
inline FeatureSchema with_frozen_means(const FeatureSchema& schema, const Cohort& train) {
    Vec sum = Vec::Zero(static_cast<long>(schema.size()));
    std::int64_t count = 0;
    for (const auto& p : train.patients)
        for (const auto& s : p.slices) {
            sum += s;
            ++count;
        }
    if (count == 0) throw DataError("cannot freeze means from an empty cohort");
    FeatureSchema out = schema;
    out.freeze_fallback_means(sum / static_cast<double>(count));
    return out;
}

inline TransitionDataset build_transitions(const Cohort& cohort) {
    if (cohort.patients.empty()) throw DataError("empty cohort");
    const long n = static_cast<long>(cohort.schema.size());
    std::size_t n_rows = 0;
    for (const auto& p : cohort.patients)
        if (p.slices.size() > 1) n_rows += p.slices.size() - 1;
    if (n_rows == 0)
        throw DataError("no patient has two or more slices; transition model untrainable");

    TransitionDataset out;
    out.rows.resize(static_cast<long>(n_rows), 2 * n);
    long r = 0;
    for (const auto& p : cohort.patients)
        for (std::size_t t = 0; t + 1 < p.slices.size(); ++t) {
            out.rows.row(r).head(n) = p.slices[t].transpose();
            out.rows.row(r).tail(n) = p.slices[t + 1].transpose();
            out.provenance.emplace_back(p.patient_id, static_cast<int>(t));
            ++r;
        }
    return out;
}

// Patient-level split, stratified on the outcome label.
inline std::pair<Cohort, Cohort> split_patients(const Cohort& cohort, double train_fraction,
                                                std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must lie in (0, 1)");

    std::vector<std::size_t> strata[2];
    for (std::size_t i = 0; i < cohort.patients.size(); ++i)
        strata[cohort.patients[i].label_critical ? 1 : 0].push_back(i);

    std::mt19937_64 rng(derive_seed(seed, "split_patients"));
    std::vector<bool> in_train(cohort.patients.size(), false);
    for (auto& stratum : strata) {
        if (stratum.size() < 2)
            throw DataError("a label stratum has fewer than 2 patients; cannot split");
        std::shuffle(stratum.begin(), stratum.end(), rng);
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(stratum.size())));
        n_train = std::min(n_train, stratum.size());
        for (std::size_t k = 0; k < n_train; ++k) in_train[stratum[k]] = true;
    }

    Cohort train, test;
    train.schema = cohort.schema;
    test.schema = cohort.schema;
    for (std::size_t i = 0; i < cohort.patients.size(); ++i)
        (in_train[i] ? train : test).patients.push_back(cohort.patients[i]);
    return {std::move(train), std::move(test)};
}

}  // namespace dbnet
