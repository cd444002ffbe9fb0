#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dbnet/core.hpp"
#include "dbnet/util.hpp"

namespace dbnet {

enum class ParamKind { Real, Integer, LogReal };

struct ParamSpec {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    ParamKind kind = ParamKind::Real;
};

struct ParamSpace {
    std::vector<ParamSpec> params;

    void validate() const {
        if (params.empty()) throw ConfigError("parameter space is empty");
        for (const auto& p : params) {
            if (!(p.lower < p.upper))
                throw ConfigError("parameter '" + p.name + "' needs lower < upper");
            if (p.kind == ParamKind::LogReal && p.lower <= 0)
                throw ConfigError("log-scaled parameter '" + p.name + "' needs a positive lower bound");
        }
    }
};

struct DeConfig {
    int population_size = 0;  // 0 = 10 * number of parameters
    double weight = 0.8;      // differential weight F
    double crossover = 0.9;   // crossover rate CR
    int max_generations = 50;
    std::uint64_t seed = 0;

    void validate(std::size_t n_params) const {
        if (resolved_np(n_params) < 4) throw ConfigError("population size must be >= 4");
        if (!(weight > 0 && weight <= 2)) throw ConfigError("weight must be in (0, 2]");
        if (!(crossover >= 0 && crossover <= 1)) throw ConfigError("crossover must be in [0, 1]");
        if (max_generations < 1) throw ConfigError("max_generations must be >= 1");
    }

    int resolved_np(std::size_t n_params) const {
        return population_size > 0 ? population_size : 10 * static_cast<int>(n_params);
    }
};

struct DeTraceRow {
    int generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
};

struct DeResult {
    std::map<std::string, double> best;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<DeTraceRow> trace;
};

namespace detail {

// genomes live in a continuous internal space: log-scaled coordinates are
// stored as logarithms, integer coordinates are rounded only at evaluation
inline double internal_lower(const ParamSpec& p) {
    return p.kind == ParamKind::LogReal ? std::log(p.lower) : p.lower;
}
inline double internal_upper(const ParamSpec& p) {
    return p.kind == ParamKind::LogReal ? std::log(p.upper) : p.upper;
}

inline double decode_coord(const ParamSpec& p, double v) {
    switch (p.kind) {
        case ParamKind::Real: return v;
        case ParamKind::LogReal: return std::exp(v);
        case ParamKind::Integer: return std::round(v);
    }
    throw ConfigError("unknown parameter kind");
}

inline double reflect(double v, double lo, double hi) {
    while (v < lo || v > hi) {
        if (v < lo) v = 2 * lo - v;
        if (v > hi) v = 2 * hi - v;
    }
    return v;
}

inline std::map<std::string, double> decode(const ParamSpace& space, const std::vector<double>& genome) {
    std::map<std::string, double> out;
    for (std::size_t d = 0; d < space.params.size(); ++d)
        out[space.params[d].name] = decode_coord(space.params[d], genome[d]);
    return out;
}

}  // namespace detail

// DE/rand/1/bin maximization with reflecting bounds. Objective failures count
// as -inf fitness; diagnostics for them are collected in the result trace via
// the caller's own logging if needed.
inline DeResult de_optimize(const std::function<double(const std::map<std::string, double>&)>& objective,
                            const ParamSpace& space, const DeConfig& cfg) {
    space.validate();
    const std::size_t dims = space.params.size();
    cfg.validate(dims);
    const int np = cfg.resolved_np(dims);

    std::mt19937_64 rng(derive_seed(cfg.seed, "de"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto safe_eval = [&](const std::vector<double>& genome) {
        try {
            const double v = objective(detail::decode(space, genome));
            return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
        } catch (const std::exception&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    std::vector<std::vector<double>> pop(static_cast<std::size_t>(np), std::vector<double>(dims));
    for (auto& member : pop)
        for (std::size_t d = 0; d < dims; ++d) {
            const double lo = detail::internal_lower(space.params[d]);
            const double hi = detail::internal_upper(space.params[d]);
            member[d] = lo + unif(rng) * (hi - lo);
        }

    std::vector<double> fitness(static_cast<std::size_t>(np));
    parallel_for(static_cast<std::size_t>(np), [&](std::size_t i) { fitness[i] = safe_eval(pop[i]); });

    DeResult result;
    auto record = [&](int generation) {
        double best = -std::numeric_limits<double>::infinity(), sum = 0.0;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < fitness.size(); ++i) {
            if (fitness[i] > best) {
                best = fitness[i];
                best_i = i;
            }
            sum += fitness[i];
        }
        result.trace.push_back({generation, best, sum / static_cast<double>(np)});
        if (best > result.best_value) {
            result.best_value = best;
            result.best = detail::decode(space, pop[best_i]);
        }
    };
    record(0);

    std::uniform_int_distribution<int> pick(0, np - 1);
    std::uniform_int_distribution<std::size_t> pick_dim(0, dims - 1);
    for (int gen = 1; gen <= cfg.max_generations; ++gen) {
        // children are generated from the unmodified parent generation and
        // applied as a barrier in member-index order
        std::vector<std::vector<double>> children(static_cast<std::size_t>(np));
        for (int i = 0; i < np; ++i) {
            int a, b, c;
            do a = pick(rng); while (a == i);
            do b = pick(rng); while (b == i || b == a);
            do c = pick(rng); while (c == i || c == b || c == a);
            const std::size_t forced = pick_dim(rng);
            std::vector<double> child = pop[static_cast<std::size_t>(i)];
            for (std::size_t d = 0; d < dims; ++d) {
                if (d != forced && unif(rng) > cfg.crossover) continue;
                const double v = pop[static_cast<std::size_t>(a)][d] +
                                 cfg.weight * (pop[static_cast<std::size_t>(b)][d] -
                                               pop[static_cast<std::size_t>(c)][d]);
                child[d] = detail::reflect(v, detail::internal_lower(space.params[d]),
                                           detail::internal_upper(space.params[d]));
            }
            children[static_cast<std::size_t>(i)] = std::move(child);
        }
        std::vector<double> child_fitness(static_cast<std::size_t>(np));
        parallel_for(static_cast<std::size_t>(np),
                     [&](std::size_t i) { child_fitness[i] = safe_eval(children[i]); });
        for (std::size_t i = 0; i < static_cast<std::size_t>(np); ++i)
            if (child_fitness[i] >= fitness[i]) {
                pop[i] = std::move(children[i]);
                fitness[i] = child_fitness[i];
            }
        record(gen);
    }
    return result;
}

}  // namespace dbnet
