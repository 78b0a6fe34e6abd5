#include "g2d/embed.hpp"

#include "g2d/log.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace g2d {

void WalkConfig::validate() const
{
    if (!(p > 0.0) || !(q > 0.0)) throw ConfigError("node2vec p and q must be positive");
    if (walks_per_node < 1 || walk_length < 1) throw ConfigError("walks_per_node and walk_length must be positive");
    if (context_size < 1) throw ConfigError("context size must be at least 1");
    if (walk_length > 1 && context_size > walk_length - 1)
        throw ConfigError("context size must not exceed walk_length - 1");
}

void EmbeddingConfig::validate() const
{
    if (dimensions < 2) throw ConfigError("embedding dimensionality must be at least 2");
    if (negative_samples < 0) throw ConfigError("negative sample count must be nonnegative");
    if (epochs < 0) throw ConfigError("epoch count must be nonnegative");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

nlohmann::json to_json(const WalkConfig& c)
{
    return {{"p", c.p}, {"q", c.q}, {"walks_per_node", c.walks_per_node}, {"walk_length", c.walk_length},
            {"context_size", c.context_size}};
}

nlohmann::json to_json(const EmbeddingConfig& c)
{
    return {{"dimensions", c.dimensions},     {"negative_samples", c.negative_samples},
            {"epochs", c.epochs},             {"learning_rate", c.learning_rate},
            {"seed", c.seed},                 {"noise_distribution", "context_frequency^0.75"},
            {"lr_schedule", "linear_to_1e-4"}};
}

WalkConfig walk_config_from_json(const nlohmann::json& j)
{
    WalkConfig c;
    c.p = j.value("p", c.p);
    c.q = j.value("q", c.q);
    c.walks_per_node = j.value("walks_per_node", c.walks_per_node);
    c.walk_length = j.value("walk_length", c.walk_length);
    c.context_size = j.value("context_size", c.context_size);
    return c;
}

EmbeddingConfig embedding_config_from_json(const nlohmann::json& j)
{
    EmbeddingConfig c;
    c.dimensions = j.value("dimensions", c.dimensions);
    c.negative_samples = j.value("negative_samples", c.negative_samples);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    return c;
}

// ---------------------------------------------------------------------------

AliasTable::AliasTable(std::span<const double> weights)
{
    const std::size_t n = weights.size();
    if (n == 0) throw ConfigError("alias table needs at least one outcome");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("alias weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("alias weights sum to zero");

    prob_.resize(n);
    alias_.assign(n, 0);
    std::vector<int> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        prob_[i] = weights[i] * static_cast<double>(n) / total;
        (prob_[i] < 1.0 ? small : large).push_back(static_cast<int>(i));
    }
    while (!small.empty() && !large.empty()) {
        int s = small.back(), l = large.back();
        small.pop_back();
        large.pop_back();
        alias_[s] = l;
        prob_[l] -= 1.0 - prob_[s];
        (prob_[l] < 1.0 ? small : large).push_back(l);
    }
    // Leftovers differ from 1 only by rounding.
    for (int i : small) prob_[i] = 1.0;
    for (int i : large) prob_[i] = 1.0;
}

double AliasTable::probability(int i) const
{
    const double n = static_cast<double>(prob_.size());
    double mass = prob_[i];
    for (std::size_t j = 0; j < prob_.size(); ++j)
        if (alias_[j] == i && prob_[j] < 1.0 && static_cast<int>(j) != i) mass += 1.0 - prob_[j];
    return mass / n;
}

// ---------------------------------------------------------------------------

std::vector<double> transition_weights(int prev, int current, const Graph& graph, double p, double q)
{
    if (!(p > 0.0) || !(q > 0.0)) throw ConfigError("node2vec p and q must be positive");
    auto nbrs = graph.neighbors(current);
    std::vector<double> w;
    w.reserve(nbrs.size());
    for (int x : nbrs) {
        if (x == prev)
            w.push_back(1.0 / p);
        else if (graph.has_edge(x, prev))
            w.push_back(1.0);
        else
            w.push_back(1.0 / q);
    }
    return w;
}

std::vector<Walk> generate_walks(const Graph& graph, const WalkConfig& config, std::uint64_t seed)
{
    config.validate();
    const int n = graph.node_count();

    // One alias table per directed edge (prev -> cur), indexed by the
    // position of cur in prev's adjacency list.
    std::vector<int> edge_base(n + 1, 0);
    for (int v = 0; v < n; ++v) edge_base[v + 1] = edge_base[v] + graph.degree(v);
    std::vector<AliasTable> second_order(edge_base.back());
    for (int prev = 0; prev < n; ++prev) {
        auto nbrs = graph.neighbors(prev);
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            auto w = transition_weights(prev, nbrs[k], graph, config.p, config.q);
            second_order[edge_base[prev] + k] = AliasTable(w);
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Walk> walks;
    walks.reserve(static_cast<std::size_t>(n) * config.walks_per_node);
    for (int iter = 0; iter < config.walks_per_node; ++iter) {
        std::shuffle(order.begin(), order.end(), rng);
        for (int start : order) {
            Walk walk;
            walk.reserve(config.walk_length);
            walk.push_back(start);
            if (config.walk_length > 1 && graph.degree(start) > 0) {
                std::uniform_int_distribution<int> first(0, graph.degree(start) - 1);
                int k = first(rng);
                int edge = edge_base[start] + k;
                walk.push_back(graph.neighbors(start)[k]);
                while (static_cast<int>(walk.size()) < config.walk_length) {
                    const int cur = walk.back();
                    k = second_order[edge].sample(rng);
                    edge = edge_base[cur] + k;
                    walk.push_back(graph.neighbors(cur)[k]);
                }
            }
            walks.push_back(std::move(walk));
        }
    }
    return walks;
}

std::vector<std::pair<int, int>> context_pairs(const std::vector<Walk>& walks, int context_size)
{
    if (context_size < 1) throw ConfigError("context size must be at least 1");
    std::vector<std::pair<int, int>> pairs;
    for (const auto& walk : walks) {
        const int len = static_cast<int>(walk.size());
        for (int i = 0; i < len; ++i) {
            const int lo = std::max(0, i - context_size), hi = std::min(len - 1, i + context_size);
            for (int j = lo; j <= hi; ++j)
                if (j != i) pairs.emplace_back(walk[i], walk[j]);
        }
    }
    return pairs;
}

namespace {

inline double sigmoid(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x)
{
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

NodeEmbeddings skipgram_train(std::span<const std::pair<int, int>> pairs, int node_count, const EmbeddingConfig& config)
{
    config.validate();
    const int d = config.dimensions;
    if (d > node_count)
        throw ConfigError("embedding dimensionality " + std::to_string(d) + " exceeds node count " +
                          std::to_string(node_count) + "; shrink the dimensionality");
    if (config.epochs > 0 && pairs.empty()) throw ConfigError("skip-gram training needs at least one context pair");

    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    std::mt19937_64 rng(config.seed);
    RowMatrix input(node_count, d);
    {
        std::uniform_real_distribution<double> init(-0.5 / d, 0.5 / d);
        for (Eigen::Index i = 0; i < input.size(); ++i) input.data()[i] = init(rng);
    }
    RowMatrix output = RowMatrix::Zero(node_count, d);

    NodeEmbeddings result;
    if (config.epochs == 0) {
        result.matrix = input;
        return result;
    }

    std::vector<double> noise_weight(node_count, 0.0);
    for (const auto& pr : pairs) {
        if (pr.first < 0 || pr.first >= node_count || pr.second < 0 || pr.second >= node_count)
            throw ConfigError("context pair references a node outside [0, node_count)");
        noise_weight[pr.second] += 1.0;
    }
    for (double& w : noise_weight) w = std::pow(w, 0.75);
    const AliasTable noise(noise_weight);

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double total_steps = static_cast<double>(pairs.size()) * config.epochs;
    const double lr0 = config.learning_rate;
    std::vector<double> grad_in(d);
    double step = 0.0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss = 0.0;
        for (std::size_t idx : order) {
            const auto [target, context] = pairs[idx];
            const double lr = lr0 * std::max(1e-4, 1.0 - step / total_steps);
            step += 1.0;
            double* u = input.row(target).data();
            std::fill(grad_in.begin(), grad_in.end(), 0.0);
            for (int s = 0; s <= config.negative_samples; ++s) {
                int other;
                double label;
                if (s == 0) {
                    other = context;
                    label = 1.0;
                } else {
                    other = noise.sample(rng);
                    if (other == context) continue;
                    label = 0.0;
                }
                double* v = output.row(other).data();
                double dot = 0.0;
                for (int k = 0; k < d; ++k) dot += u[k] * v[k];
                loss -= label > 0 ? log_sigmoid(dot) : log_sigmoid(-dot);
                const double g = (label - sigmoid(dot)) * lr;
                for (int k = 0; k < d; ++k) {
                    grad_in[k] += g * v[k];
                    v[k] += g * u[k];
                }
            }
            for (int k = 0; k < d; ++k) u[k] += grad_in[k];
        }
        result.epoch_loss.push_back(loss / static_cast<double>(pairs.size()));
    }
    result.matrix = input;
    if (!result.matrix.allFinite()) throw std::runtime_error("skip-gram produced non-finite embeddings");
    return result;
}

NodeEmbeddings embed_graph(const Graph& graph, int graph_id, const WalkConfig& walk, const EmbeddingConfig& emb)
{
    auto walks = generate_walks(graph, walk, emb.seed);
    auto pairs = context_pairs(walks, walk.context_size);
    EmbeddingConfig cfg = emb;
    if (pairs.empty()) {
        log::warn("graph ", graph_id, " has no edges; using the random initialization as its embedding");
        cfg.epochs = 0;
    }
    auto out = skipgram_train(pairs, graph.node_count(), cfg);
    out.graph_id = graph_id;
    return out;
}

}  // namespace g2d
