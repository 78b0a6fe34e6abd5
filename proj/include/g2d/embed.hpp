#pragma once

#include "g2d/graph.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace g2d {

struct WalkConfig {
    double p = 1.0;  ///< return parameter
    double q = 1.0;  ///< in-out parameter
    int walks_per_node = 10;
    int walk_length = 80;
    int context_size = 10;

    void validate() const;
};

struct EmbeddingConfig {
    int dimensions = 128;
    int negative_samples = 5;
    int epochs = 1;
    double learning_rate = 0.025;
    std::uint64_t seed = 1;

    void validate() const;
};

nlohmann::json to_json(const WalkConfig& c);
nlohmann::json to_json(const EmbeddingConfig& c);
WalkConfig walk_config_from_json(const nlohmann::json& j);
EmbeddingConfig embedding_config_from_json(const nlohmann::json& j);

struct NodeEmbeddings {
    Eigen::MatrixXd matrix;  ///< |V| x dimensions
    int graph_id = 0;
    std::vector<double> epoch_loss;  ///< mean negative-sampling loss per epoch
};

using Walk = std::vector<int>;

/// Walker's alias table: O(1) draws from a fixed discrete distribution.
class AliasTable {
public:
    AliasTable() = default;
    /// Weights need not be normalized; they must be nonnegative with a positive sum.
    explicit AliasTable(std::span<const double> weights);

    template <class Rng>
    int sample(Rng& rng) const
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double x = u(rng) * static_cast<double>(prob_.size());
        auto i = static_cast<std::size_t>(x);
        if (i >= prob_.size()) i = prob_.size() - 1;
        return (x - static_cast<double>(i)) < prob_[i] ? static_cast<int>(i) : alias_[i];
    }

    std::size_t size() const { return prob_.size(); }
    /// Probability mass the table assigns to outcome i (for verification).
    double probability(int i) const;

private:
    std::vector<double> prob_;
    std::vector<int> alias_;
};

/// Unnormalized second-order transition weights from `current` given the walk
/// arrived from `prev`, one per entry of graph.neighbors(current):
/// 1/p back to prev, 1 to neighbors of prev, 1/q otherwise.
std::vector<double> transition_weights(int prev, int current, const Graph& graph, double p, double q);

std::vector<Walk> generate_walks(const Graph& graph, const WalkConfig& config, std::uint64_t seed);

/// (target, context) pairs for every walk position and every other position within `context_size`.
std::vector<std::pair<int, int>> context_pairs(const std::vector<Walk>& walks, int context_size);

/// Skip-gram with negative sampling. The noise distribution is the context
/// frequency raised to 3/4; the learning rate decays linearly to 1e-4 of its
/// initial value over all epochs. Returns the input-side vectors.
NodeEmbeddings skipgram_train(std::span<const std::pair<int, int>> pairs, int node_count,
                              const EmbeddingConfig& config);

/// Walks, pairs and skip-gram for one graph.
NodeEmbeddings embed_graph(const Graph& graph, int graph_id, const WalkConfig& walk, const EmbeddingConfig& emb);

}  // namespace g2d
