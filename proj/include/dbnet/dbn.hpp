#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dbnet/core.hpp"

namespace dbnet {

// A node of the two-slice graph: slice 0 is the conditioning instant, slice 1
// the predicted one. Arcs may only point into slice 1.
struct SliceNode {
    int var = 0;
    int slice = 0;

    auto operator<=>(const SliceNode&) const = default;
};

inline std::string slice_node_name(const SliceNode& node, const FeatureSchema& schema) {
    return schema.at(static_cast<std::size_t>(node.var)).name + (node.slice == 0 ? "_t0" : "_t1");
}

inline SliceNode slice_node_from_name(const std::string& name, const FeatureSchema& schema) {
    if (name.size() < 4) throw DataError("bad slice node name: " + name);
    std::string suffix = name.substr(name.size() - 3);
    int slice = suffix == "_t0" ? 0 : suffix == "_t1" ? 1 : throw DataError("bad slice node name: " + name);
    return {static_cast<int>(schema.index_of(name.substr(0, name.size() - 3))), slice};
}

// Generic named digraph; used for DOT export and neighborhood queries.
struct ArcGraph {
    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> arcs;
};

class DbnStructure {
public:
    DbnStructure() = default;
    explicit DbnStructure(int n_vars) : parents_(static_cast<std::size_t>(n_vars)) {}

    int n_vars() const { return static_cast<int>(parents_.size()); }
    const std::vector<SliceNode>& parents_of(int child) const {
        return parents_[static_cast<std::size_t>(child)];
    }

    bool has_arc(const SliceNode& parent, int child) const {
        const auto& ps = parents_[static_cast<std::size_t>(child)];
        return std::find(ps.begin(), ps.end(), parent) != ps.end();
    }

    std::size_t n_arcs() const {
        std::size_t total = 0;
        for (const auto& ps : parents_) total += ps.size();
        return total;
    }

    // Would adding parent -> child (child in t1) keep the t1 subgraph acyclic?
    bool add_keeps_acyclic(const SliceNode& parent, int child) const {
        if (parent.slice == 0) return true;
        if (parent.var == child) return false;
        return !reaches(child, parent.var);
    }

    void add_arc(const SliceNode& parent, int child) {
        if (parent.slice == 1 && parent.var == child) throw DataError("self arc rejected");
        if (has_arc(parent, child)) throw DataError("arc already present");
        if (!add_keeps_acyclic(parent, child)) throw DataError("arc would create a cycle");
        auto& ps = parents_[static_cast<std::size_t>(child)];
        ps.insert(std::upper_bound(ps.begin(), ps.end(), parent), parent);
    }

    void remove_arc(const SliceNode& parent, int child) {
        auto& ps = parents_[static_cast<std::size_t>(child)];
        auto it = std::find(ps.begin(), ps.end(), parent);
        if (it == ps.end()) throw DataError("arc not present");
        ps.erase(it);
    }

    // Topological order of the t1 nodes under intra-slice arcs (Kahn).
    std::vector<int> topological_order() const {
        const int n = n_vars();
        std::vector<int> in_degree(static_cast<std::size_t>(n), 0);
        for (int c = 0; c < n; ++c)
            for (const auto& p : parents_of(c))
                if (p.slice == 1) ++in_degree[static_cast<std::size_t>(c)];
        std::vector<int> order;
        std::vector<int> queue;
        for (int v = 0; v < n; ++v)
            if (in_degree[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
        while (!queue.empty()) {
            int v = queue.back();
            queue.pop_back();
            order.push_back(v);
            for (int c = 0; c < n; ++c)
                if (has_arc({v, 1}, c) && --in_degree[static_cast<std::size_t>(c)] == 0)
                    queue.push_back(c);
        }
        if (static_cast<int>(order.size()) != n) throw DataError("intra-slice graph has a cycle");
        return order;
    }

    ArcGraph to_arc_graph(const FeatureSchema& schema) const {
        ArcGraph g;
        for (int v = 0; v < n_vars(); ++v) {
            g.nodes.push_back(slice_node_name({v, 0}, schema));
            g.nodes.push_back(slice_node_name({v, 1}, schema));
        }
        for (int c = 0; c < n_vars(); ++c)
            for (const auto& p : parents_of(c))
                g.arcs.emplace_back(slice_node_name(p, schema), slice_node_name({c, 1}, schema));
        std::sort(g.nodes.begin(), g.nodes.end());
        std::sort(g.arcs.begin(), g.arcs.end());
        return g;
    }

private:
    std::vector<std::vector<SliceNode>> parents_;  // index = t1 child var

    bool reaches(int from, int to) const {
        // DFS over t1 -> t1 arcs
        std::vector<int> stack{from};
        std::vector<bool> seen(static_cast<std::size_t>(n_vars()), false);
        seen[static_cast<std::size_t>(from)] = true;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            if (v == to) return true;
            for (int c = 0; c < n_vars(); ++c)
                if (!seen[static_cast<std::size_t>(c)] && has_arc({v, 1}, c)) {
                    seen[static_cast<std::size_t>(c)] = true;
                    stack.push_back(c);
                }
        }
        return false;
    }
};

namespace detail {

inline std::string dot_id(const std::string& name) {
    bool plain = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0]));
    for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') plain = false;
    return plain ? name : '"' + name + '"';
}

}  // namespace detail

inline std::string export_dot(const ArcGraph& g) {
    std::ostringstream out;
    out << "digraph dbn {\n";
    std::set<std::string> with_arcs;
    for (const auto& [a, b] : g.arcs) {
        with_arcs.insert(a);
        with_arcs.insert(b);
    }
    for (const auto& node : g.nodes)
        if (!with_arcs.count(node)) out << "  " << detail::dot_id(node) << ";\n";
    for (const auto& [a, b] : g.arcs)
        out << "  " << detail::dot_id(a) << " -> " << detail::dot_id(b) << ";\n";
    out << "}\n";
    return out.str();
}

inline std::string export_dot(const DbnStructure& structure, const FeatureSchema& schema) {
    return export_dot(structure.to_arc_graph(schema));
}

// --- scoring -----------------------------------------------------------------

constexpr double kVarianceFloor = 1e-9;

struct OlsFit {
    double intercept = 0.0;
    Vec coefficients;
    double residual_variance = kVarianceFloor;
    bool ridged = false;
};

namespace detail {

inline long data_column(const SliceNode& node, std::size_t n_vars) {
    return node.slice == 0 ? node.var : static_cast<long>(n_vars) + node.var;
}

// Least squares of child on parents with intercept; falls back to a
// trace-scaled ridge when the normal matrix is numerically singular.
inline OlsFit ols_fit(const TransitionDataset& data, int child,
                      const std::vector<SliceNode>& parents) {
    const long N = data.rows.rows();
    const long p = static_cast<long>(parents.size());
    Mat design(N, p + 1);
    design.col(0).setOnes();
    for (long j = 0; j < p; ++j)
        design.col(j + 1) = data.rows.col(data_column(parents[static_cast<std::size_t>(j)], data.n_vars()));
    Vec target = data.rows.col(static_cast<long>(data.n_vars()) + child);

    Mat gram = design.transpose() * design;
    Vec rhs = design.transpose() * target;

    OlsFit fit;
    Eigen::FullPivLU<Mat> lu(gram);
    lu.setThreshold(1e-10);
    Vec beta;
    if (lu.isInvertible()) {
        beta = lu.solve(rhs);
    } else {
        const double lambda = 1e-6 * gram.trace() / static_cast<double>(p + 1);
        beta = (gram + lambda * Mat::Identity(p + 1, p + 1)).ldlt().solve(rhs);
        fit.ridged = true;
    }
    Vec residual = target - design * beta;
    fit.intercept = beta[0];
    fit.coefficients = beta.tail(p);
    fit.residual_variance =
        std::max(kVarianceFloor, residual.squaredNorm() / static_cast<double>(N));
    return fit;
}

}  // namespace detail

// Gaussian log-likelihood of the child regression minus (k/2) ln N,
// k = |parents| + 2. Higher is better.
inline double bic_score(int child, const std::vector<SliceNode>& parents,
                        const TransitionDataset& data) {
    const long N = data.rows.rows();
    if (N < static_cast<long>(parents.size()) + 2)
        throw DataError("too few rows to score this parent set");
    std::set<SliceNode> unique(parents.begin(), parents.end());
    if (unique.size() != parents.size()) throw DataError("duplicate parent in candidate set");

    const auto fit = detail::ols_fit(data, child, parents);
    const double n = static_cast<double>(N);
    const double loglik = -0.5 * n * (std::log(2.0 * M_PI * fit.residual_variance) + 1.0);
    const double k = static_cast<double>(parents.size()) + 2.0;
    return loglik - 0.5 * k * std::log(n);
}

// --- structure search --------------------------------------------------------

struct StructureLearnResult {
    DbnStructure structure;
    double score = 0.0;
    std::vector<std::vector<double>> traces;  // total score after each accepted move, per restart
};

namespace detail {

class ScoreCache {
public:
    explicit ScoreCache(const TransitionDataset& data) : data_(data) {}

    double operator()(int child, const std::vector<SliceNode>& parents) {
        auto key = std::make_pair(child, parents);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        double s = bic_score(child, parents, data_);
        cache_.emplace(std::move(key), s);
        return s;
    }

private:
    const TransitionDataset& data_;
    std::map<std::pair<int, std::vector<SliceNode>>, double> cache_;
};

inline std::vector<SliceNode> with_parent(std::vector<SliceNode> ps, const SliceNode& p) {
    ps.insert(std::upper_bound(ps.begin(), ps.end(), p), p);
    return ps;
}

inline std::vector<SliceNode> without_parent(std::vector<SliceNode> ps, const SliceNode& p) {
    ps.erase(std::find(ps.begin(), ps.end(), p));
    return ps;
}

}  // namespace detail

// Greedy hill climbing over {add, delete, reverse}, children always in t1.
// Moves are enumerated in lexicographic (child, parent) order and accepted on
// strict improvement, which fixes tie-breaking deterministically.
inline StructureLearnResult learn_structure_traced(const TransitionDataset& data, int max_parents = 5,
                                                   int restarts = 1, std::uint64_t seed = 0) {
    if (data.rows.rows() == 0) throw DataError("empty transition dataset");
    if (max_parents < 1) throw ConfigError("max_parents must be >= 1");
    if (restarts < 1) throw ConfigError("restarts must be >= 1");

    const int n = static_cast<int>(data.n_vars());
    detail::ScoreCache score(data);

    StructureLearnResult best;
    bool have_best = false;

    for (int restart = 0; restart < restarts; ++restart) {
        DbnStructure structure(n);
        if (restart > 0) {
            // random legal initial structure
            std::mt19937_64 rng(derive_seed(seed, "hc_restart", static_cast<std::uint64_t>(restart)));
            std::uniform_int_distribution<int> n_parents(0, max_parents);
            std::uniform_int_distribution<int> pick_var(0, n - 1);
            std::bernoulli_distribution pick_slice(0.5);
            for (int c = 0; c < n; ++c) {
                int want = n_parents(rng);
                for (int k = 0; k < want; ++k) {
                    SliceNode p{pick_var(rng), pick_slice(rng) ? 1 : 0};
                    if (p.slice == 1 && p.var == c) continue;
                    if (structure.has_arc(p, c)) continue;
                    if (!structure.add_keeps_acyclic(p, c)) continue;
                    structure.add_arc(p, c);
                }
            }
        }

        std::vector<double> child_score(static_cast<std::size_t>(n));
        double total = 0.0;
        for (int c = 0; c < n; ++c) {
            child_score[static_cast<std::size_t>(c)] = score(c, structure.parents_of(c));
            total += child_score[static_cast<std::size_t>(c)];
        }

        std::vector<double> trace{total};
        for (;;) {
            // best move this sweep: kind 0=add, 1=delete, 2=reverse
            double best_delta = 1e-9;
            int best_kind = -1;
            SliceNode best_parent;
            int best_child = -1;

            auto consider = [&](int kind, const SliceNode& p, int c, double delta) {
                if (delta > best_delta) {
                    best_delta = delta;
                    best_kind = kind;
                    best_parent = p;
                    best_child = c;
                }
            };

            for (int c = 0; c < n; ++c) {
                const auto& ps = structure.parents_of(c);
                const double old_c = child_score[static_cast<std::size_t>(c)];
                for (int v = 0; v < n; ++v)
                    for (int s = 0; s < 2; ++s) {
                        SliceNode p{v, s};
                        if (structure.has_arc(p, c)) continue;
                        if (s == 1 && v == c) continue;
                        if (static_cast<int>(ps.size()) >= max_parents) continue;
                        if (!structure.add_keeps_acyclic(p, c)) continue;
                        consider(0, p, c, score(c, detail::with_parent(ps, p)) - old_c);
                    }
                for (const auto& p : ps)
                    consider(1, p, c, score(c, detail::without_parent(ps, p)) - old_c);
                for (const auto& p : ps) {
                    if (p.slice != 1) continue;  // reverse only t1 -> t1 arcs
                    const int u = p.var;
                    const auto& ups = structure.parents_of(u);
                    if (static_cast<int>(ups.size()) >= max_parents) continue;
                    // remove p -> c, then check c -> u keeps acyclicity
                    DbnStructure probe = structure;
                    probe.remove_arc(p, c);
                    if (!probe.add_keeps_acyclic({c, 1}, u)) continue;
                    const double delta = score(c, detail::without_parent(ps, p)) - old_c +
                                         score(u, detail::with_parent(ups, {c, 1})) -
                                         child_score[static_cast<std::size_t>(u)];
                    consider(2, p, c, delta);
                }
            }

            if (best_kind < 0) break;
            if (best_kind == 0) {
                structure.add_arc(best_parent, best_child);
            } else if (best_kind == 1) {
                structure.remove_arc(best_parent, best_child);
            } else {
                structure.remove_arc(best_parent, best_child);
                structure.add_arc({best_child, 1}, best_parent.var);
                child_score[static_cast<std::size_t>(best_parent.var)] =
                    score(best_parent.var, structure.parents_of(best_parent.var));
            }
            child_score[static_cast<std::size_t>(best_child)] =
                score(best_child, structure.parents_of(best_child));
            total += best_delta;
            trace.push_back(total);
        }

        if (!have_best || total > best.score) {
            best.structure = structure;
            best.score = total;
            have_best = true;
        }
        best.traces.push_back(std::move(trace));
    }
    return best;
}

inline DbnStructure learn_structure(const TransitionDataset& data, int max_parents = 5,
                                    int restarts = 1, std::uint64_t seed = 0) {
    return learn_structure_traced(data, max_parents, restarts, seed).structure;
}

// --- model -------------------------------------------------------------------

struct LinearGaussianCpd {
    int child = 0;                    // t1 variable index
    std::vector<SliceNode> parents;   // ordered; coefficients align
    double intercept = 0.0;
    Vec coefficients;
    double residual_variance = kVarianceFloor;
};

class DbnModel {
public:
    DbnModel() = default;
    DbnModel(FeatureSchema schema, DbnStructure structure, std::vector<LinearGaussianCpd> cpds)
        : schema_(std::move(schema)), structure_(std::move(structure)), cpds_(std::move(cpds)) {
        if (cpds_.size() != static_cast<std::size_t>(structure_.n_vars()))
            throw DataError("need exactly one CPD per t1 node");
        for (int c = 0; c < structure_.n_vars(); ++c) {
            if (cpds_[static_cast<std::size_t>(c)].child != c ||
                cpds_[static_cast<std::size_t>(c)].parents != structure_.parents_of(c))
                throw DataError("CPD parents disagree with the structure");
            if (!(cpds_[static_cast<std::size_t>(c)].residual_variance > 0))
                throw DataError("residual variance must be positive");
        }
        topo_order_ = structure_.topological_order();
    }

    const FeatureSchema& schema() const { return schema_; }
    const DbnStructure& structure() const { return structure_; }
    const LinearGaussianCpd& cpd(int child) const { return cpds_.at(static_cast<std::size_t>(child)); }

    // Conditional-mean propagation, one step.
    Vec predict_step(const Vec& s0) const {
        check_state(s0);
        Vec s1(s0.size());
        for (int child : topo_order_) {
            const auto& cpd = cpds_[static_cast<std::size_t>(child)];
            double mean = cpd.intercept;
            for (std::size_t j = 0; j < cpd.parents.size(); ++j) {
                const auto& p = cpd.parents[j];
                mean += cpd.coefficients[static_cast<long>(j)] * (p.slice == 0 ? s0[p.var] : s1[p.var]);
            }
            s1[child] = mean;
        }
        return s1;
    }

    std::vector<Vec> forecast(const Vec& s0, int horizon) const {
        if (horizon < 1) throw ConfigError("horizon must be >= 1");
        std::vector<Vec> out;
        Vec current = s0;
        for (int h = 0; h < horizon; ++h) {
            current = predict_step(current);
            if (!current.allFinite())
                throw NumericError("forecast diverged at step " + std::to_string(h + 1));
            out.push_back(current);
        }
        return out;
    }

    double joint_log_density(const Vec& s0, const Vec& s1) const {
        check_state(s0);
        check_state(s1);
        double total = 0.0;
        for (const auto& cpd : cpds_) {
            double mean = cpd.intercept;
            for (std::size_t j = 0; j < cpd.parents.size(); ++j) {
                const auto& p = cpd.parents[j];
                mean += cpd.coefficients[static_cast<long>(j)] * (p.slice == 0 ? s0[p.var] : s1[p.var]);
            }
            const double diff = s1[cpd.child] - mean;
            total += -0.5 * std::log(2.0 * M_PI * cpd.residual_variance) -
                     0.5 * diff * diff / cpd.residual_variance;
        }
        return total;
    }

    // Fig.-5-style query: the t1 node of `variable`, its parents, its children
    // and the connecting arcs.
    ArcGraph neighborhood(const std::string& variable) const {
        const int v = static_cast<int>(schema_.index_of(variable));
        ArcGraph g;
        std::set<std::string> nodes;
        const std::string center = slice_node_name({v, 1}, schema_);
        nodes.insert(center);
        for (const auto& p : structure_.parents_of(v)) {
            nodes.insert(slice_node_name(p, schema_));
            g.arcs.emplace_back(slice_node_name(p, schema_), center);
        }
        for (int c = 0; c < structure_.n_vars(); ++c)
            if (structure_.has_arc({v, 1}, c)) {
                nodes.insert(slice_node_name({c, 1}, schema_));
                g.arcs.emplace_back(center, slice_node_name({c, 1}, schema_));
            }
        g.nodes.assign(nodes.begin(), nodes.end());
        std::sort(g.arcs.begin(), g.arcs.end());
        return g;
    }

    json to_json() const {
        json arcs = json::array();
        for (int c = 0; c < structure_.n_vars(); ++c)
            for (const auto& p : structure_.parents_of(c))
                arcs.push_back({slice_node_name(p, schema_), slice_node_name({c, 1}, schema_)});
        json cpds = json::array();
        for (const auto& cpd : cpds_) {
            json parents = json::array();
            for (const auto& p : cpd.parents) parents.push_back(slice_node_name(p, schema_));
            cpds.push_back({{"child", slice_node_name({cpd.child, 1}, schema_)},
                            {"parents", parents},
                            {"intercept", cpd.intercept},
                            {"coefficients",
                             std::vector<double>(cpd.coefficients.begin(), cpd.coefficients.end())},
                            {"variance", cpd.residual_variance}});
        }
        return {{"schema", schema_.to_json()}, {"arcs", arcs}, {"cpds", cpds}};
    }

    static DbnModel from_json(const json& j) {
        FeatureSchema schema = FeatureSchema::from_json(j.at("schema"));
        DbnStructure structure(static_cast<int>(schema.size()));
        for (const auto& arc : j.at("arcs")) {
            SliceNode parent = slice_node_from_name(arc.at(0).get<std::string>(), schema);
            SliceNode child = slice_node_from_name(arc.at(1).get<std::string>(), schema);
            if (child.slice != 1) throw DataError("arc child must be a t1 node");
            structure.add_arc(parent, child.var);
        }
        std::vector<LinearGaussianCpd> cpds(schema.size());
        for (const auto& cj : j.at("cpds")) {
            LinearGaussianCpd cpd;
            SliceNode child = slice_node_from_name(cj.at("child").get<std::string>(), schema);
            cpd.child = child.var;
            for (const auto& pj : cj.at("parents"))
                cpd.parents.push_back(slice_node_from_name(pj.get<std::string>(), schema));
            cpd.intercept = cj.at("intercept").get<double>();
            auto coeffs = cj.at("coefficients").get<std::vector<double>>();
            cpd.coefficients = Eigen::Map<const Vec>(coeffs.data(), static_cast<long>(coeffs.size()));
            cpd.residual_variance = cj.at("variance").get<double>();
            cpds[static_cast<std::size_t>(cpd.child)] = std::move(cpd);
        }
        return DbnModel(std::move(schema), std::move(structure), std::move(cpds));
    }

private:
    FeatureSchema schema_;
    DbnStructure structure_;
    std::vector<LinearGaussianCpd> cpds_;
    std::vector<int> topo_order_;

    void check_state(const Vec& s) const {
        if (static_cast<std::size_t>(s.size()) != schema_.size())
            throw DataError("state vector length does not match schema");
    }
};

inline DbnModel fit_parameters(const DbnStructure& structure, const FeatureSchema& schema,
                               const TransitionDataset& data) {
    if (static_cast<int>(data.n_vars()) != structure.n_vars())
        throw DataError("structure/data width mismatch");
    long max_parents = 0;
    for (int c = 0; c < structure.n_vars(); ++c)
        max_parents = std::max(max_parents, static_cast<long>(structure.parents_of(c).size()));
    if (data.rows.rows() < max_parents + 2)
        throw DataError("too few transition rows to fit parameters");

    std::vector<LinearGaussianCpd> cpds;
    for (int c = 0; c < structure.n_vars(); ++c) {
        const auto fit = detail::ols_fit(data, c, structure.parents_of(c));
        LinearGaussianCpd cpd;
        cpd.child = c;
        cpd.parents = structure.parents_of(c);
        cpd.intercept = fit.intercept;
        cpd.coefficients = fit.coefficients;
        cpd.residual_variance = fit.residual_variance;
        cpds.push_back(std::move(cpd));
    }
    return DbnModel(schema, structure, std::move(cpds));
}

}  // namespace dbnet
