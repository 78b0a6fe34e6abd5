#include "g2d/harness.hpp"

#include "g2d/log.hpp"
#include "g2d/raster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace g2d {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<Eigen::Index> as_index(std::span<const std::size_t> rows)
{
    return {rows.begin(), rows.end()};
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

}  // namespace

void CvConfig::validate() const
{
    if (folds < 2) throw ConfigError("cross validation needs at least 2 folds");
    if (repeats < 1) throw ConfigError("cross validation needs at least 1 repeat");
    if (!(inner_validation_fraction > 0.0 && inner_validation_fraction < 1.0))
        throw ConfigError("inner validation fraction must lie in (0, 1)");
}

std::vector<int> stratified_kfold(std::span<const int> labels, int folds, std::uint64_t seed)
{
    if (folds < 2) throw ConfigError("stratified_kfold needs folds >= 2");
    int classes = 0;
    for (int l : labels) {
        if (l < 0) throw ConfigError("labels must be nonnegative class indices");
        classes = std::max(classes, l + 1);
    }
    std::vector<std::vector<std::size_t>> members(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    for (int c = 0; c < classes; ++c) {
        if (!members[c].empty() && static_cast<int>(members[c].size()) < folds)
            throw ConfigError("class " + std::to_string(c) + " has " + std::to_string(members[c].size()) +
                              " samples but " + std::to_string(folds) +
                              " folds were requested; lower the fold count or drop the class");
    }
    std::mt19937_64 rng(seed);
    std::vector<int> fold(labels.size(), -1);
    std::size_t offset = 0;
    for (auto& m : members) {
        std::shuffle(m.begin(), m.end(), rng);
        for (std::size_t k = 0; k < m.size(); ++k) fold[m[k]] = static_cast<int>((offset + k) % folds);
        offset += m.size();
    }
    return fold;
}

GridSearchResult grid_search_kernel(const std::vector<Eigen::MatrixXd>& kernels, std::span<const int> h_grid,
                                    std::span<const int> labels, int classes, std::span<const double> c_grid,
                                    double validation_fraction, std::uint64_t seed, double tolerance)
{
    if (kernels.empty() || kernels.size() != h_grid.size()) throw ConfigError("one kernel matrix per h candidate required");
    if (c_grid.empty()) throw ConfigError("empty C grid");
    const auto n = static_cast<Eigen::Index>(labels.size());
    for (const auto& k : kernels)
        if (k.rows() != n || k.cols() != n) throw ConfigError("kernel matrix does not match the label count");

    auto [inner, val] = nn::stratified_holdout(labels, validation_fraction, seed);
    const auto inner_idx = as_index(inner), val_idx = as_index(val);
    std::vector<int> inner_labels, val_labels;
    for (auto i : inner) inner_labels.push_back(labels[i]);
    for (auto i : val) val_labels.push_back(labels[i]);

    GridSearchResult best;
    best.accuracy = -1.0;
    for (std::size_t k = 0; k < kernels.size(); ++k) {
        const Eigen::MatrixXd train_k = kernels[k](inner_idx, inner_idx);
        const Eigen::MatrixXd val_k = kernels[k](val_idx, inner_idx);
        for (double C : c_grid) {
            CsvmConfig cfg;
            cfg.C = C;
            cfg.tolerance = tolerance;
            const auto model = train_multiclass(train_k, inner_labels, classes, cfg);
            ++best.trainings;
            const double acc = nn::accuracy(predict_multiclass(model, val_k), val_labels);
            const int h = h_grid[k];
            if (acc > best.accuracy ||
                (acc == best.accuracy && (h < best.iterations || (h == best.iterations && C < best.C)))) {
                best.accuracy = acc;
                best.iterations = h;
                best.C = C;
            }
        }
    }
    return best;
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty()) throw ConfigError("Mann-Whitney U needs two nonempty samples");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return pooled[x] < pooled[y]; });
    std::vector<double> rank(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    const double base = 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
    double ra = 0.0;
    for (std::size_t i = 0; i < na; ++i) ra += rank[i];
    MannWhitneyResult out;
    out.u = ra - base;
    const double mu = 0.5 * static_cast<double>(na) * static_cast<double>(nb);

    if (pooled[order.front()] == pooled[order.back()]) {
        out.p_value = 1.0;
        out.exact = n <= 20;
        return out;
    }

    if (n <= 20) {
        // Every assignment of na of the pooled ranks to sample a.
        out.exact = true;
        std::size_t total = 0, le = 0, ge = 0;
        constexpr double eps = 1e-9;
        std::uint32_t mask = (1u << na) - 1u;
        const std::uint32_t limit = 1u << n;
        while (mask < limit) {
            double r = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                if (mask >> k & 1u) r += rank[k];
            const double u = r - base;
            ++total;
            if (u <= out.u + eps) ++le;
            if (u >= out.u - eps) ++ge;
            const std::uint32_t c = mask & (~mask + 1u);
            const std::uint32_t next = mask + c;
            mask = (((next ^ mask) >> 2) / c) | next;
        }
        out.p_value = std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(total));
        return out;
    }

    const double nn_ = static_cast<double>(n);
    const double var = mu / 6.0 * ((nn_ + 1.0) - tie_term / (nn_ * (nn_ - 1.0)));
    const double z = std::max(0.0, std::abs(out.u - mu) - 0.5) / std::sqrt(var);
    out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return out;
}

// ---------------------------------------------------------------------------

void RandomGraphSpec::validate() const
{
    if (nodes < 1) throw ConfigError("random graphs need at least one node");
    if (kind == Kind::uniform_edges) {
        if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) throw ConfigError("edge probability must lie in [0, 1]");
    } else if (attachment < 1 || attachment >= nodes) {
        throw ConfigError("attachment count must lie in [1, nodes)");
    }
}

std::string RandomGraphSpec::describe() const
{
    std::ostringstream s;
    if (kind == Kind::uniform_edges)
        s << "er:" << nodes << ':' << edge_probability;
    else
        s << "ba:" << nodes << ':' << attachment;
    return s.str();
}

Graph uniform_random_graph(int nodes, double edge_probability, std::mt19937_64& rng)
{
    std::bernoulli_distribution coin(edge_probability);
    std::vector<Edge> edges;
    for (int u = 0; u < nodes; ++u)
        for (int v = u + 1; v < nodes; ++v)
            if (coin(rng)) edges.emplace_back(u, v);
    return Graph(nodes, std::move(edges));
}

Graph preferential_attachment_graph(int nodes, int attachment, std::mt19937_64& rng)
{
    const int m = attachment;
    if (m < 1 || m >= nodes) throw ConfigError("attachment count must lie in [1, nodes)");
    std::vector<Edge> edges;
    std::vector<int> targets(m), repeated;
    std::iota(targets.begin(), targets.end(), 0);
    for (int source = m; source < nodes; ++source) {
        for (int t : targets) edges.emplace_back(t, source);
        repeated.insert(repeated.end(), targets.begin(), targets.end());
        repeated.insert(repeated.end(), m, source);
        std::vector<int> chosen;
        std::uniform_int_distribution<std::size_t> pick(0, repeated.size() - 1);
        while (static_cast<int>(chosen.size()) < m) {
            const int x = repeated[pick(rng)];
            if (std::find(chosen.begin(), chosen.end(), x) == chosen.end()) chosen.push_back(x);
        }
        targets = std::move(chosen);
    }
    return Graph(nodes, std::move(edges));
}

namespace {

GraphDataset generate(std::span<const RandomGraphSpec> classes, std::span<const int> counts, std::uint64_t seed)
{
    if (classes.size() < 2) throw ConfigError("synthetic datasets need at least two class specs");
    GraphDataset out;
    out.class_count = static_cast<int>(classes.size());
    std::ostringstream name;
    name << "synthetic";
    std::mt19937_64 rng(seed);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto& spec = classes[c];
        spec.validate();
        if (counts[c] < 1) throw ConfigError("synthetic class count must be positive");
        name << (c ? '+' : ':') << spec.describe() << ':' << counts[c];
        out.original_labels.push_back(static_cast<long long>(c));
        for (int k = 0; k < counts[c]; ++k) {
            Graph g = spec.kind == RandomGraphSpec::Kind::uniform_edges
                          ? uniform_random_graph(spec.nodes, spec.edge_probability, rng)
                          : preferential_attachment_graph(spec.nodes, spec.attachment, rng);
            g.set_label(static_cast<int>(c));
            out.graphs.push_back(std::move(g));
        }
    }
    name << '@' << seed;
    out.name = name.str();
    return out;
}

}  // namespace

GraphDataset generate_synthetic_dataset(std::span<const RandomGraphSpec> classes, int count, std::uint64_t seed)
{
    std::vector<int> counts(classes.size(), count);
    return generate(classes, counts, seed);
}

GraphDataset parse_synthetic_dataset(const std::string& description)
{
    std::string body = description;
    if (body.rfind("synthetic:", 0) == 0) body = body.substr(10);
    std::uint64_t seed = 1;
    if (auto at = body.find('@'); at != std::string::npos) {
        seed = std::stoull(body.substr(at + 1));
        body = body.substr(0, at);
    }
    std::vector<RandomGraphSpec> specs;
    std::vector<int> counts;
    for (const auto& part : split(body, '+')) {
        const auto f = split(part, ':');
        if (f.size() != 4) throw ConfigError("synthetic class '" + part + "' must read kind:nodes:param:count");
        RandomGraphSpec s;
        try {
            s.nodes = std::stoi(f[1]);
            if (f[0] == "er") {
                s.kind = RandomGraphSpec::Kind::uniform_edges;
                s.edge_probability = std::stod(f[2]);
            } else if (f[0] == "ba") {
                s.kind = RandomGraphSpec::Kind::preferential_attachment;
                s.attachment = std::stoi(f[2]);
            } else {
                throw ConfigError("unknown synthetic graph kind '" + f[0] + "' (expected er or ba)");
            }
            counts.push_back(std::stoi(f[3]));
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const ConfigError*>(&e)) throw;
            throw ConfigError("malformed synthetic class '" + part + "'");
        }
        specs.push_back(s);
    }
    return generate(specs, counts, seed);
}

GraphDataset synthetic_fixture(std::uint64_t seed)
{
    RandomGraphSpec er, ba;
    er.kind = RandomGraphSpec::Kind::uniform_edges;
    er.nodes = 60;
    er.edge_probability = 0.1;
    ba.kind = RandomGraphSpec::Kind::preferential_attachment;
    ba.nodes = 60;
    ba.attachment = 3;
    const std::vector<RandomGraphSpec> specs{er, ba};
    return generate_synthetic_dataset(specs, 100, seed);
}

// ---------------------------------------------------------------------------

Method method_from_string(const std::string& s)
{
    if (s == "cnn") return Method::cnn;
    if (s == "wl") return Method::wl;
    if (s == "graphlet") return Method::graphlet;
    if (s == "majority") return Method::majority;
    throw ConfigError("unknown method '" + s + "' (expected cnn, wl, graphlet or majority)");
}

std::string to_string(Method m)
{
    switch (m) {
    case Method::cnn: return "cnn";
    case Method::wl: return "wl";
    case Method::graphlet: return "graphlet";
    case Method::majority: return "majority";
    }
    return "?";
}

nlohmann::json MethodConfig::to_json() const
{
    nlohmann::json j;
    j["method"] = to_string(method);
    j["cnn"] = {
        {"walk", g2d::to_json(cnn.walk)},
        {"embedding", g2d::to_json(cnn.embedding)},
        {"channels", cnn.channels},
        {"attribute_channels", cnn.attribute_channels},
        {"resolution", cnn.resolution},
        {"normalize_histograms", cnn.normalize_histograms},
        {"pca_scope", cnn.pca_scope == PcaScope::global ? "global" : "per_graph"},
        {"global_preprocessing", cnn.global_preprocessing},
        {"hidden", cnn.hidden},
        {"train", cnn.train.to_json()},
    };
    j["kernel"] = {
        {"c_grid", kernel.c_grid},
        {"wl_iterations", kernel.wl_iterations},
        {"tolerance", kernel.tolerance},
        {"graphlet",
         {{"samples_per_graph", kernel.graphlet.samples_per_graph},
          {"min_size", kernel.graphlet.min_size},
          {"max_size", kernel.graphlet.max_size},
          {"connected_only", kernel.graphlet.connected_only},
          {"seed", kernel.graphlet.seed}}},
    };
    return j;
}

MethodConfig MethodConfig::from_json(const nlohmann::json& j)
{
    MethodConfig m;
    if (j.contains("method")) m.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("preset")) m.cnn = preset(j.at("preset").get<std::string>());
    if (j.contains("cnn")) {
        const auto& c = j.at("cnn");
        if (c.contains("walk")) m.cnn.walk = walk_config_from_json(c.at("walk"));
        if (c.contains("embedding")) m.cnn.embedding = embedding_config_from_json(c.at("embedding"));
        m.cnn.channels = c.value("channels", m.cnn.channels);
        m.cnn.attribute_channels = c.value("attribute_channels", m.cnn.attribute_channels);
        m.cnn.resolution = c.value("resolution", m.cnn.resolution);
        m.cnn.normalize_histograms = c.value("normalize_histograms", m.cnn.normalize_histograms);
        if (c.contains("pca_scope")) {
            const auto s = c.at("pca_scope").get<std::string>();
            if (s == "global")
                m.cnn.pca_scope = PcaScope::global;
            else if (s == "per_graph" || s == "per-graph")
                m.cnn.pca_scope = PcaScope::per_graph;
            else
                throw ConfigError("pca_scope must be global or per_graph");
        }
        m.cnn.global_preprocessing = c.value("global_preprocessing", m.cnn.global_preprocessing);
        m.cnn.hidden = c.value("hidden", m.cnn.hidden);
        if (c.contains("train")) m.cnn.train = nn::TrainConfig::from_json(c.at("train"));
    }
    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        if (k.contains("c_grid")) m.kernel.c_grid = k.at("c_grid").get<std::vector<double>>();
        if (k.contains("wl_iterations")) m.kernel.wl_iterations = k.at("wl_iterations").get<std::vector<int>>();
        m.kernel.tolerance = k.value("tolerance", m.kernel.tolerance);
        if (k.contains("graphlet")) {
            const auto& g = k.at("graphlet");
            auto& gc = m.kernel.graphlet;
            gc.samples_per_graph = g.value("samples_per_graph", gc.samples_per_graph);
            gc.min_size = g.value("min_size", gc.min_size);
            gc.max_size = g.value("max_size", gc.max_size);
            gc.connected_only = g.value("connected_only", gc.connected_only);
            gc.seed = g.value("seed", gc.seed);
        }
    }
    return m;
}

CnnPipelineConfig preset(const std::string& name)
{
    CnnPipelineConfig c;
    auto set = [&](double res, int channels, double p, double q) {
        c.resolution = res;
        c.channels = channels;
        c.walk.p = p;
        c.walk.q = q;
    };
    if (name == "reddit-b")
        set(9, 5, 2, 0.5);
    else if (name == "reddit-5k")
        set(9, 2, 4, 0.25);
    else if (name == "reddit-12k")
        set(9, 5, 1, 1);
    else if (name == "collab") {
        set(9, 5, 0.5, 2);
        c.walk.context_size = 2;
        c.embedding.dimensions = 12;
    } else if (name == "imdb-b")
        set(14, 5, 1, 1);
    else if (name == "proteins_full") {
        set(9, 2, 0.5, 2);
        c.attribute_channels = true;
        c.embedding.dimensions = 4;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

std::vector<std::string> preset_names()
{
    return {"reddit-b", "reddit-5k", "reddit-12k", "collab", "imdb-b", "proteins_full"};
}

// ---------------------------------------------------------------------------

std::vector<double> EvalResult::accuracies() const
{
    std::vector<double> out;
    for (const auto& f : folds) out.push_back(f.accuracy);
    return out;
}

std::pair<double, double> mean_and_std(std::span<const double> values)
{
    if (values.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n)};
}

std::vector<NodeEmbeddings> embed_dataset(const GraphDataset& dataset, const CnnPipelineConfig& config, double* seconds)
{
    const auto t0 = Clock::now();
    std::vector<NodeEmbeddings> out;
    out.reserve(dataset.size());
    for (std::size_t g = 0; g < dataset.size(); ++g) {
        EmbeddingConfig emb = config.embedding;
        emb.seed = mix_seed(config.embedding.seed, g);
        out.push_back(embed_graph(dataset.graphs[g], static_cast<int>(g), config.walk, emb));
    }
    if (seconds) *seconds = seconds_since(t0);
    return out;
}

namespace {

struct FoldSplit {
    std::vector<std::size_t> train, test;
};

FoldSplit split_fold(std::span<const int> assignment, int fold)
{
    FoldSplit s;
    for (std::size_t i = 0; i < assignment.size(); ++i) (assignment[i] == fold ? s.test : s.train).push_back(i);
    return s;
}

std::vector<int> pick(std::span<const int> labels, std::span<const std::size_t> rows)
{
    std::vector<int> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(labels[r]);
    return out;
}

struct Phase {
    std::vector<std::pair<std::string, double>>& list;
    void add(const std::string& name, double s)
    {
        for (auto& [k, v] : list)
            if (k == name) {
                v += s;
                return;
            }
        list.emplace_back(name, s);
    }
};

struct CnnInputs {
    nn::RowMatrix<float> rows;
    nn::Shape3 shape;
};

CnnInputs build_inputs(const std::vector<NodeEmbeddings>& emb, const GraphDataset& data, const CnnPipelineConfig& cfg,
                       std::span<const std::size_t> fit, FoldTrace* trace)
{
    CompressionOptions opt;
    opt.dimensions = 2 * cfg.channels;
    opt.attribute_channels = cfg.attribute_channels;
    opt.scope = cfg.pca_scope;
    auto comp = compress_collection(emb, data, opt, fit);
    const ImageSpec spec = compute_spec(comp.vectors, cfg.resolution, fit);
    const auto images = rasterize_dataset(comp.vectors, data, spec);
    if (trace) {
        trace->pca_fit = cfg.pca_scope == PcaScope::global || cfg.attribute_channels ? comp.fit_indices
                                                                                     : std::vector<std::size_t>{};
        trace->extent_fit = comp.fit_indices;
    }
    return {images_to_rows<float>(images, cfg.normalize_histograms), nn::Shape3{spec.channels(), spec.height(), spec.width()}};
}

}  // namespace

EvalResult run_experiment(const GraphDataset& input, const MethodConfig& method, const CvConfig& cv,
                          const std::vector<NodeEmbeddings>* embeddings)
{
    cv.validate();
    input.validate();
    const auto t_total = Clock::now();
    EvalResult result;
    result.dataset = input.name;
    result.method = method.method;
    Phase phase{result.timings};

    // Graphs too small for the requested channel count are dropped for the CNN pipeline.
    const GraphDataset* data = &input;
    GraphDataset kept;
    CnnPipelineConfig cnn = method.cnn;
    std::vector<std::size_t> kept_ids;
    if (method.method == Method::cnn) {
        const int min_nodes = 2 * cnn.channels;
        kept.name = input.name;
        kept.class_count = input.class_count;
        kept.original_labels = input.original_labels;
        int smallest = std::numeric_limits<int>::max();
        for (std::size_t g = 0; g < input.size(); ++g) {
            if (input.graphs[g].node_count() < min_nodes) continue;
            kept.graphs.push_back(input.graphs[g]);
            kept_ids.push_back(g);
            smallest = std::min(smallest, input.graphs[g].node_count());
        }
        if (kept.graphs.empty()) throw ConfigError("every graph has fewer than " + std::to_string(min_nodes) + " nodes");
        if (kept.size() != input.size()) {
            if (embeddings) throw ConfigError("precomputed embeddings must match the filtered dataset");
            log::warn(input.size() - kept.size(), " graphs with fewer than ", min_nodes, " nodes dropped");
        }
        data = &kept;
        if (cnn.embedding.dimensions > smallest) {
            log::warn("embedding dimensionality lowered from ", cnn.embedding.dimensions, " to ", smallest,
                      " (smallest graph)");
            cnn.embedding.dimensions = smallest;
        }
        if (cnn.embedding.dimensions < 2 * cnn.channels)
            throw ConfigError("embedding dimensionality " + std::to_string(cnn.embedding.dimensions) + " cannot support " +
                              std::to_string(cnn.channels) + " channels");
        result.metadata["dropped_graphs"] = input.size() - kept.size();
        result.metadata["embedding_dimensions"] = cnn.embedding.dimensions;
    }

    const auto labels = data->labels();
    const int classes = data->class_count;
    result.metadata["graphs"] = data->size();
    result.metadata["classes"] = classes;
    result.metadata["std_convention"] = "population standard deviation over all folds x repeats accuracies";
    result.metadata["cv"] = {{"folds", cv.folds},
                             {"repeats", cv.repeats},
                             {"inner_validation_fraction", cv.inner_validation_fraction},
                             {"seed", cv.seed}};
    {
        MethodConfig effective = method;
        effective.cnn = cnn;
        result.metadata["config"] = effective.to_json();
    }

    // Label-independent precomputation shared by every fold.
    std::vector<NodeEmbeddings> own_embeddings;
    const std::vector<NodeEmbeddings>* emb = embeddings;
    std::optional<CnnInputs> global_inputs;
    std::vector<Eigen::MatrixXd> kernels;
    std::vector<int> h_grid;
    if (method.method == Method::cnn) {
        if (!emb) {
            double s = 0.0;
            own_embeddings = embed_dataset(*data, cnn, &s);
            phase.add("embedding", s);
            emb = &own_embeddings;
        } else if (emb->size() != data->size()) {
            throw ConfigError("precomputed embeddings must match the dataset size");
        }
        if (cnn.global_preprocessing) {
            const auto t0 = Clock::now();
            global_inputs = build_inputs(*emb, *data, cnn, {}, nullptr);
            phase.add("rasterization", seconds_since(t0));
        }
    } else if (method.method == Method::wl) {
        if (method.kernel.wl_iterations.empty()) throw ConfigError("empty WL iteration grid");
        h_grid = method.kernel.wl_iterations;
        std::sort(h_grid.begin(), h_grid.end());
        h_grid.erase(std::unique(h_grid.begin(), h_grid.end()), h_grid.end());
        if (h_grid.front() < 1) throw ConfigError("WL iterations must be >= 1");
        double s = 0.0;
        const auto per_iteration = wl_iteration_kernels(*data, h_grid.back(), &s);
        const auto t0 = Clock::now();
        Eigen::MatrixXd acc = per_iteration[0];
        std::size_t next = 0;
        for (int t = 1; t <= h_grid.back(); ++t) {
            acc += per_iteration[t];
            if (t == h_grid[next]) {
                kernels.push_back(acc);
                ++next;
            }
        }
        phase.add("kernel_matrix", s + seconds_since(t0));
    } else if (method.method == Method::graphlet) {
        double sampling = 0.0;
        auto km = graphlet_kernel_matrix(*data, method.kernel.graphlet, &sampling);
        phase.add("kernel_matrix", km.seconds + sampling);
        kernels.push_back(std::move(km.values));
        h_grid = {0};
    }

    std::vector<double> epoch_seconds;
    for (int r = 0; r < cv.repeats; ++r) {
        const auto assignment = stratified_kfold(labels, cv.folds, mix_seed(cv.seed, r));
        for (int f = 0; f < cv.folds; ++f) {
            const std::uint64_t fold_seed = mix_seed(cv.seed, 1000 + static_cast<std::uint64_t>(r * cv.folds + f));
            auto [train_rows, test_rows] = split_fold(assignment, f);
            const auto train_labels = pick(labels, train_rows);
            const auto test_labels = pick(labels, test_rows);
            FoldResult fr;
            fr.repeat = r;
            fr.fold = f;
            fr.test_size = test_rows.size();
            FoldTrace trace;
            trace.test = test_rows;
            const auto t_fold = Clock::now();
            try {
                if (method.method == Method::cnn) {
                    CnnInputs local;
                    const CnnInputs* in = nullptr;
                    if (global_inputs) {
                        in = &*global_inputs;
                        std::vector<std::size_t> all(data->size());
                        std::iota(all.begin(), all.end(), 0);
                        trace.pca_fit = cnn.pca_scope == PcaScope::global || cnn.attribute_channels ? all
                                                                                                    : std::vector<std::size_t>{};
                        trace.extent_fit = all;
                    } else {
                        const auto t0 = Clock::now();
                        local = build_inputs(*emb, *data, cnn, train_rows, &trace);
                        phase.add("rasterization", seconds_since(t0));
                        in = &local;
                    }
                    auto [fit_pos, val_pos] = nn::stratified_holdout(train_labels, cnn.train.validation_fraction, fold_seed);
                    std::vector<std::size_t> fit_rows, val_rows;
                    for (auto p : fit_pos) fit_rows.push_back(train_rows[p]);
                    for (auto p : val_pos) val_rows.push_back(train_rows[p]);
                    trace.model_fit = fit_rows;
                    trace.early_stopping = val_rows;

                    nn::Dataset<float> all{in->rows, labels};
                    auto arch = nn::CnnArchitecture::reference(in->shape, classes, cnn.train.dropout);
                    arch.hidden = cnn.hidden;
                    nn::CnnModel<float> model(arch, fold_seed);
                    nn::TrainConfig tc = cnn.train;
                    tc.seed = fold_seed;
                    const auto t0 = Clock::now();
                    const auto history = nn::train(model, all.subset(fit_rows), all.subset(val_rows), tc);
                    fr.train_seconds = seconds_since(t0);
                    phase.add("training", fr.train_seconds);
                    fr.epochs = static_cast<int>(history.epochs.size());
                    for (const auto& e : history.epochs) epoch_seconds.push_back(e.seconds);
                    fr.seconds_per_epoch = fr.epochs ? fr.train_seconds / fr.epochs : 0.0;
                    const nn::RowMatrix<float> test_in = in->rows(as_index(test_rows), Eigen::all);
                    const auto pred = nn::predict(model, test_in);
                    fr.accuracy = nn::accuracy(pred.labels, test_labels);
                    fr.chosen = {{"epochs", fr.epochs}, {"best_epoch", history.best_epoch}};
                    if (r == 0 && f == 0) result.metadata["input_shape"] = {in->shape.channels, in->shape.height, in->shape.width};
                } else if (method.method == Method::majority) {
                    std::vector<int> counts(classes, 0);
                    for (int l : train_labels) ++counts[l];
                    const int major = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
                    trace.model_fit = train_rows;
                    std::vector<int> pred(test_rows.size(), major);
                    fr.accuracy = nn::accuracy(pred, test_labels);
                    fr.chosen = {{"class", major}};
                } else {
                    const auto t0 = Clock::now();
                    const auto tr = as_index(train_rows), te = as_index(test_rows);
                    std::vector<Eigen::MatrixXd> train_k;
                    for (const auto& k : kernels) train_k.push_back(k(tr, tr));
                    const auto best = grid_search_kernel(train_k, h_grid, train_labels, classes, method.kernel.c_grid,
                                                         cv.inner_validation_fraction, fold_seed, method.kernel.tolerance);
                    trace.grid_search = train_rows;
                    trace.model_fit = train_rows;
                    const std::size_t pos =
                        static_cast<std::size_t>(std::find(h_grid.begin(), h_grid.end(), best.iterations) - h_grid.begin());
                    CsvmConfig sc;
                    sc.C = best.C;
                    sc.tolerance = method.kernel.tolerance;
                    const auto model = train_multiclass(train_k[pos], train_labels, classes, sc);
                    const Eigen::MatrixXd test_k = kernels[pos](te, tr);
                    fr.accuracy = nn::accuracy(predict_multiclass(model, test_k), test_labels);
                    fr.train_seconds = seconds_since(t0);
                    phase.add("svm", fr.train_seconds);
                    fr.chosen = {{"C", best.C}, {"inner_accuracy", best.accuracy}, {"trainings", best.trainings}};
                    if (method.method == Method::wl) fr.chosen["h"] = best.iterations;
                }
            } catch (const std::exception& e) {
                throw std::runtime_error("repeat " + std::to_string(r) + " fold " + std::to_string(f) + ": " + e.what());
            }
            log::info(to_string(method.method), " repeat ", r, " fold ", f, ": accuracy ", fr.accuracy, " (",
                      seconds_since(t_fold), " s)");
            result.folds.push_back(std::move(fr));
            result.traces.push_back(std::move(trace));
        }
    }

    if (!epoch_seconds.empty())
        phase.add("seconds_per_epoch",
                  std::accumulate(epoch_seconds.begin(), epoch_seconds.end(), 0.0) / static_cast<double>(epoch_seconds.size()));
    phase.add("total", seconds_since(t_total));
    const auto acc = result.accuracies();
    std::tie(result.mean, result.std) = mean_and_std(acc);
    if (!kept_ids.empty() && kept_ids.size() != input.size()) result.metadata["kept_graph_ids"] = kept_ids;
    return result;
}

std::string results_csv(const EvalResult& result)
{
    std::ostringstream s;
    s.precision(17);
    s << "repeat,fold,accuracy,test_size,C,h,epochs,seconds_per_epoch,train_seconds\n";
    for (const auto& f : result.folds) {
        s << f.repeat << ',' << f.fold << ',' << f.accuracy << ',' << f.test_size << ',';
        if (f.chosen.contains("C")) s << f.chosen["C"].get<double>();
        s << ',';
        if (f.chosen.contains("h")) s << f.chosen["h"].get<int>();
        s << ',';
        if (result.method == Method::cnn) s << f.epochs;
        s << ',' << f.seconds_per_epoch << ',' << f.train_seconds << '\n';
    }
    return s.str();
}

std::string timings_csv(const EvalResult& result)
{
    std::ostringstream s;
    s << "dataset,method,phase,seconds\n";
    for (const auto& [phase, seconds] : result.timings)
        s << result.dataset << ',' << to_string(result.method) << ',' << phase << ',' << seconds << '\n';
    return s.str();
}

nlohmann::json summary_json(const EvalResult& result, const std::vector<double>* baseline, const std::string& baseline_name)
{
    nlohmann::json j;
    j["dataset"] = result.dataset;
    j["method"] = to_string(result.method);
    j["runs"] = result.folds.size();
    j["mean"] = result.mean;
    j["std"] = result.std;
    j["accuracies"] = result.accuracies();
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [k, v] : result.timings) t[k] = v;
    j["timings"] = t;
    j["metadata"] = result.metadata;
    if (baseline) {
        const auto acc = result.accuracies();
        const auto mw = mann_whitney_u(acc, *baseline);
        const auto [bm, bs] = mean_and_std(*baseline);
        j["comparison"] = {{"baseline", baseline_name}, {"baseline_mean", bm}, {"baseline_std", bs},
                           {"u", mw.u},           {"p_value", mw.p_value}, {"exact", mw.exact}};
    }
    return j;
}

std::vector<double> read_results_accuracies(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty results file");
    const auto header = split(line, ',');
    const auto it = std::find(header.begin(), header.end(), "accuracy");
    if (it == header.end()) throw FormatError(path.string() + ": no accuracy column");
    const auto col = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() <= col) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": missing accuracy field");
        out.push_back(std::stod(f[col]));
    }
    return out;
}

}  // namespace g2d
