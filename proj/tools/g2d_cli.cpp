#include "g2d/cnn.hpp"
#include "g2d/embed.hpp"
#include "g2d/graph.hpp"
#include "g2d/harness.hpp"
#include "g2d/kernels.hpp"
#include "g2d/log.hpp"
#include "g2d/persist.hpp"
#include "g2d/raster.hpp"
#include "g2d/svm.hpp"
#include "g2d/tensor_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace g2d;

namespace {

GraphDataset load_dataset(const std::string& arg)
{
    if (arg.rfind("synthetic:", 0) == 0) return parse_synthetic_dataset(arg);
    if (arg == "fixture") return synthetic_fixture();
    return load_benchmark_dataset(arg);
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    return out;
}

PcaScope parse_scope(const std::string& s)
{
    if (s == "global") return PcaScope::global;
    if (s == "per-graph" || s == "per_graph") return PcaScope::per_graph;
    throw ConfigError("--pca-scope must be global or per-graph");
}

void add_walk_flags(CLI::App* app, WalkConfig& w, EmbeddingConfig& e)
{
    app->add_option("--p", w.p, "Return parameter")->capture_default_str();
    app->add_option("--q", w.q, "In-out parameter")->capture_default_str();
    app->add_option("--walks-per-node", w.walks_per_node)->capture_default_str();
    app->add_option("--walk-length", w.walk_length)->capture_default_str();
    app->add_option("--context-size", w.context_size)->capture_default_str();
    app->add_option("--dimensions", e.dimensions, "Embedding dimensionality")->capture_default_str();
    app->add_option("--negative-samples", e.negative_samples)->capture_default_str();
    app->add_option("--embedding-epochs", e.epochs)->capture_default_str();
    app->add_option("--embedding-lr", e.learning_rate)->capture_default_str();
    app->add_option("--embedding-seed", e.seed)->capture_default_str();
}

void add_train_flags(CLI::App* app, nn::TrainConfig& t)
{
    app->add_option("--batch-size", t.batch_size)->capture_default_str();
    app->add_option("--dropout", t.dropout)->capture_default_str();
    app->add_option("--patience", t.patience)->capture_default_str();
    app->add_option("--max-epochs", t.max_epochs)->capture_default_str();
    app->add_option("--validation-fraction", t.validation_fraction)->capture_default_str();
    app->add_option("--learning-rate", t.adam.learning_rate)->capture_default_str();
    app->add_option("--beta1", t.adam.beta1)->capture_default_str();
    app->add_option("--beta2", t.adam.beta2)->capture_default_str();
    app->add_option("--epsilon", t.adam.epsilon)->capture_default_str();
    app->add_option("--seed", t.seed)->capture_default_str();
}

nn::Dataset<float> image_dataset(const ImageSet& set, bool normalize)
{
    nn::Dataset<float> d;
    d.inputs = images_to_rows<float>(set.images, normalize);
    for (const auto& img : set.images) d.labels.push_back(img.label);
    return d;
}

nn::Shape3 image_shape(const ImageSet& set)
{
    return {set.spec.channels(), set.spec.height(), set.spec.width()};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Graph classification with 2D CNNs on node-embedding histograms"};
    app.require_subcommand(1);
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "Progress messages");
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");

    // stats
    auto* stats = app.add_subcommand("stats", "Dataset statistics as CSV");
    std::vector<std::string> stats_dirs;
    stats->add_option("dirs", stats_dirs, "Dataset directories or synthetic:spec")->required();

    // embed
    auto* embed = app.add_subcommand("embed", "Per-graph node2vec embeddings");
    std::string dataset_arg, output;
    WalkConfig walk;
    EmbeddingConfig emb;
    embed->add_option("--dataset", dataset_arg)->required();
    embed->add_option("-o,--output", output, "Tensor file")->required();
    add_walk_flags(embed, walk, emb);

    // rasterize
    auto* raster = app.add_subcommand("rasterize", "Compress embeddings and build histogram images");
    std::string embeddings_path, png_dir, pca_scope = "global", pca_output;
    int channels = 5, png_limit = 10;
    double resolution = 9.0;
    bool attribute_channels = false, normalize = false;
    raster->add_option("--dataset", dataset_arg)->required();
    raster->add_option("--embeddings", embeddings_path)->required();
    raster->add_option("-o,--output", output)->required();
    raster->add_option("--channels", channels, "Embedding channels")->capture_default_str();
    raster->add_option("--resolution", resolution, "Bins per unit")->capture_default_str();
    raster->add_flag("--attribute-channels", attribute_channels, "Add channels from continuous node attributes");
    raster->add_flag("--normalize-histograms", normalize, "Record that training should use per-channel normalized counts");
    raster->add_option("--pca-scope", pca_scope, "global or per-graph")->capture_default_str();
    raster->add_option("--pca-output", pca_output, "Write the fitted embedding PCA here");
    raster->add_option("--png-dir", png_dir, "Dump per-channel PNGs");
    raster->add_option("--png-limit", png_limit, "Graphs to dump")->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "Train the CNN on an image file");
    std::string images_path, model_path, history_path;
    nn::TrainConfig train_cfg;
    int hidden = 128;
    train->add_option("--images", images_path)->required();
    train->add_option("--model", model_path, "Checkpoint output")->required();
    train->add_option("--history", history_path, "Per-epoch CSV");
    train->add_option("--hidden", hidden)->capture_default_str();
    add_train_flags(train, train_cfg);

    // predict
    auto* predict = app.add_subcommand("predict", "Classify an image file with a checkpoint");
    predict->add_option("--images", images_path)->required();
    predict->add_option("--model", model_path)->required();
    predict->add_option("-o,--output", output, "Predictions CSV");

    // kernel
    auto* kernel = app.add_subcommand("kernel", "Kernel matrix for a dataset");
    std::string kernel_type, timings_path;
    int wl_h = 3;
    GraphletConfig graphlet;
    kernel->add_option("--type", kernel_type)->required()->check(CLI::IsMember({"graphlet", "wl"}));
    kernel->add_option("--dataset", dataset_arg)->required();
    kernel->add_option("-o,--output", output)->required();
    kernel->add_option("--iterations", wl_h, "WL iterations")->capture_default_str();
    kernel->add_option("--samples", graphlet.samples_per_graph)->capture_default_str();
    kernel->add_option("--min-size", graphlet.min_size)->capture_default_str();
    kernel->add_option("--max-size", graphlet.max_size)->capture_default_str();
    kernel->add_flag("--connected-only", graphlet.connected_only);
    kernel->add_option("--seed", graphlet.seed)->capture_default_str();
    kernel->add_option("--timings", timings_path, "Append a dataset,seconds row");

    // svm-eval
    auto* svm_eval = app.add_subcommand("svm-eval", "Cross-validated C-SVM on a stored kernel matrix");
    std::string kernel_file, c_grid_arg;
    CvConfig cv;
    svm_eval->add_option("--kernel-file", kernel_file)->required();
    svm_eval->add_option("--c-grid", c_grid_arg, "Comma-separated C values (default 1e-4..1e4, 10 values)");
    svm_eval->add_option("--folds", cv.folds)->capture_default_str();
    svm_eval->add_option("--repeats", cv.repeats)->capture_default_str();
    svm_eval->add_option("--seed", cv.seed)->capture_default_str();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Full cross-validation protocol");
    std::string method_arg, config_path, output_dir = "results", baseline_path, baseline_name = "baseline", preset_name;
    bool global_pre = false;
    evaluate->add_option("--method", method_arg)->required()->check(CLI::IsMember({"cnn", "wl", "graphlet", "majority"}));
    evaluate->add_option("--dataset", dataset_arg, "Directory, synthetic:spec, or 'fixture'")->required();
    evaluate->add_option("--config", config_path, "JSON method config");
    evaluate->add_option("--preset", preset_name, "Named CNN preset");
    evaluate->add_option("-o,--output-dir", output_dir)->capture_default_str();
    evaluate->add_flag("--global-preprocessing", global_pre, "Fit PCA and extent on all graphs");
    evaluate->add_flag("--normalize-histograms", normalize);
    evaluate->add_option("--folds", cv.folds)->capture_default_str();
    evaluate->add_option("--repeats", cv.repeats)->capture_default_str();
    evaluate->add_option("--seed", cv.seed)->capture_default_str();
    evaluate->add_option("--baseline", baseline_path, "results.csv of a run to compare against");
    evaluate->add_option("--baseline-name", baseline_name)->capture_default_str();
    evaluate->add_option("--png-dir", png_dir, "Dump per-channel PNGs (globally fitted extent)");
    evaluate->add_option("--png-limit", png_limit)->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    if (quiet) log::set_level(log::Level::quiet);
    if (verbose) log::set_level(log::Level::info);

    try {
        if (*stats) {
            std::cout << stats_csv_header() << '\n';
            for (const auto& d : stats_dirs) {
                const auto ds = load_dataset(d);
                std::cout << stats_csv_row(ds.name, dataset_stats(ds)) << '\n';
            }
        } else if (*embed) {
            const auto ds = load_dataset(dataset_arg);
            CnnPipelineConfig pc;
            pc.walk = walk;
            pc.embedding = emb;
            double seconds = 0.0;
            const auto e = embed_dataset(ds, pc, &seconds);
            write_embeddings(output, e, walk, emb);
            std::cout << "embedded " << e.size() << " graphs in " << seconds << " s\n";
        } else if (*raster) {
            const auto ds = load_dataset(dataset_arg);
            const auto e = read_embeddings(embeddings_path);
            CompressionOptions opt;
            opt.dimensions = 2 * channels;
            opt.attribute_channels = attribute_channels;
            opt.scope = parse_scope(pca_scope);
            const auto comp = compress_collection(e, ds, opt);
            ImageSet set;
            set.spec = compute_spec(comp.vectors, resolution);
            set.images = rasterize_dataset(comp.vectors, ds, set.spec);
            set.class_count = ds.class_count;
            write_images(output, set, {{"normalize_histograms", normalize}, {"pca_scope", pca_scope}});
            if (!pca_output.empty() && comp.embedding_pca) write_pca_model(pca_output, *comp.embedding_pca, {{"role", "embedding"}});
            if (!png_dir.empty()) {
                fs::create_directories(png_dir);
                for (int g = 0; g < std::min<int>(png_limit, static_cast<int>(set.images.size())); ++g)
                    for (int c = 0; c < set.spec.channels(); ++c)
                        write_channel_png(set.images[g], c,
                                          fs::path(png_dir) / ("graph" + std::to_string(g) + "_ch" + std::to_string(c) + ".png"));
            }
            std::cout << set.images.size() << " images of shape (" << set.spec.channels() << "," << set.spec.height() << ","
                      << set.spec.width() << "), extent [" << set.spec.lo << ", " << set.spec.hi << "]\n";
        } else if (*train) {
            const auto set = read_images(images_path);
            const bool norm = read_manifest(images_path).value("normalize_histograms", false);
            const auto data = image_dataset(set, norm);
            auto arch = nn::CnnArchitecture::reference(image_shape(set), std::max(set.class_count, 2), train_cfg.dropout);
            arch.hidden = hidden;
            nn::CnnModel<float> model(arch, train_cfg.seed);
            const auto history = nn::train(model, data, train_cfg);
            model.save(model_path, {{"train", train_cfg.to_json()}, {"normalize_histograms", norm}});
            if (!history_path.empty()) write_text(history_path, history.to_csv());
            const auto& best = history.epochs.at(history.best_epoch - 1);
            std::cout << "best epoch " << best.epoch << ": val_loss " << best.val_loss << ", val_accuracy " << best.val_accuracy
                      << (history.early_stopped ? " (early stop)" : "") << '\n';
        } else if (*predict) {
            const auto set = read_images(images_path);
            auto model = nn::CnnModel<float>::load(model_path);
            const bool norm = read_manifest(model_path).value("normalize_histograms", false);
            const auto data = image_dataset(set, norm);
            const auto pred = nn::predict(model, data.inputs);
            if (!output.empty()) {
                std::ostringstream s;
                s << "graph_id,label,predicted\n";
                for (std::size_t i = 0; i < pred.labels.size(); ++i)
                    s << set.images[i].graph_id << ',' << data.labels[i] << ',' << pred.labels[i] << '\n';
                write_text(output, s.str());
            }
            std::cout << "accuracy " << nn::accuracy(pred.labels, data.labels) << " on " << pred.labels.size() << " graphs\n";
        } else if (*kernel) {
            const auto ds = load_dataset(dataset_arg);
            const auto t0 = std::chrono::steady_clock::now();
            Eigen::MatrixXd values;
            nlohmann::json extra{{"type", kernel_type}, {"dataset", ds.name}};
            if (kernel_type == "wl") {
                values = wl_kernel_matrix(ds, wl_h);
                extra["iterations"] = wl_h;
            } else {
                values = graphlet_kernel_matrix(ds, graphlet).values;
                extra["samples_per_graph"] = graphlet.samples_per_graph;
                extra["connected_only"] = graphlet.connected_only;
            }
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const auto labels = ds.labels();
            write_kernel_matrix(output, values, labels, ds.class_count, extra);
            if (!timings_path.empty()) {
                const bool fresh = !fs::exists(timings_path);
                std::ofstream t(timings_path, std::ios::app);
                if (fresh) t << "dataset,seconds\n";
                t << ds.name << ',' << seconds << '\n';
            }
            std::cout << kernel_type << " kernel " << values.rows() << "x" << values.cols() << " in " << seconds << " s\n";
        } else if (*svm_eval) {
            const auto k = read_kernel_matrix(kernel_file);
            const auto c_grid = c_grid_arg.empty() ? default_c_grid() : parse_list(c_grid_arg);
            cv.validate();
            const std::vector<int> h_grid{0};
            std::vector<double> accs;
            for (int r = 0; r < cv.repeats; ++r) {
                const auto folds = stratified_kfold(k.labels, cv.folds, cv.seed + static_cast<std::uint64_t>(r));
                for (int f = 0; f < cv.folds; ++f) {
                    std::vector<Eigen::Index> tr, te;
                    std::vector<int> ytr, yte;
                    for (std::size_t i = 0; i < folds.size(); ++i) {
                        (folds[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
                        (folds[i] == f ? yte : ytr).push_back(k.labels[i]);
                    }
                    const std::vector<Eigen::MatrixXd> sub{k.values(tr, tr)};
                    const auto best = grid_search_kernel(sub, h_grid, ytr, k.class_count, c_grid, cv.inner_validation_fraction,
                                                         cv.seed + 7919u * static_cast<std::uint64_t>(r * cv.folds + f));
                    CsvmConfig sc;
                    sc.C = best.C;
                    const auto model = train_multiclass(sub[0], ytr, k.class_count, sc);
                    const Eigen::MatrixXd test_k = k.values(te, tr);
                    accs.push_back(nn::accuracy(predict_multiclass(model, test_k), yte));
                    std::cout << "repeat " << r << " fold " << f << ": C=" << best.C << " accuracy " << accs.back() << '\n';
                }
            }
            const auto [mean, sd] = mean_and_std(accs);
            std::cout << "mean " << mean << " std " << sd << " over " << accs.size() << " folds\n";
        } else if (*evaluate) {
            const auto ds = load_dataset(dataset_arg);
            MethodConfig mc;
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw std::runtime_error("cannot open " + config_path);
                mc = MethodConfig::from_json(nlohmann::json::parse(in));
            } else if (!preset_name.empty()) {
                mc.cnn = preset(preset_name);
            }
            mc.method = method_from_string(method_arg);
            if (global_pre) mc.cnn.global_preprocessing = true;
            if (normalize) mc.cnn.normalize_histograms = true;

            std::vector<NodeEmbeddings> shared;
            const std::vector<NodeEmbeddings>* emb_ptr = nullptr;
            if (!png_dir.empty() && mc.method == Method::cnn) {
                bool all_fit = true;
                for (const auto& g : ds.graphs) all_fit = all_fit && g.node_count() >= 2 * mc.cnn.channels;
                if (all_fit) {
                    shared = embed_dataset(ds, mc.cnn);
                    emb_ptr = &shared;
                    CompressionOptions opt;
                    opt.dimensions = 2 * mc.cnn.channels;
                    opt.attribute_channels = mc.cnn.attribute_channels;
                    opt.scope = mc.cnn.pca_scope;
                    const auto comp = compress_collection(shared, ds, opt);
                    const auto spec = compute_spec(comp.vectors, mc.cnn.resolution);
                    fs::create_directories(png_dir);
                    for (int g = 0; g < std::min<int>(png_limit, static_cast<int>(ds.size())); ++g) {
                        const auto img = rasterize_graph(comp.vectors[g], spec, g, ds.graphs[g].label());
                        for (int c = 0; c < spec.channels(); ++c)
                            write_channel_png(img, c, fs::path(png_dir) / ("graph" + std::to_string(g) + "_ch" + std::to_string(c) + ".png"));
                    }
                } else {
                    log::warn("PNG dump skipped: dataset has graphs too small for the channel count");
                }
            }

            const auto result = run_experiment(ds, mc, cv, emb_ptr);
            fs::create_directories(output_dir);
            write_text(fs::path(output_dir) / "results.csv", results_csv(result));
            write_text(fs::path(output_dir) / "timings.csv", timings_csv(result));
            std::vector<double> baseline;
            if (!baseline_path.empty()) baseline = read_results_accuracies(baseline_path);
            const auto summary = summary_json(result, baseline_path.empty() ? nullptr : &baseline, baseline_name);
            write_text(fs::path(output_dir) / "summary.json", summary.dump(2) + "\n");
            std::cout << to_string(result.method) << " on " << result.dataset << ": " << result.mean << " +- " << result.std
                      << " (" << result.folds.size() << " folds)";
            if (summary.contains("comparison")) std::cout << ", p=" << summary["comparison"]["p_value"].get<double>() << " vs " << baseline_name;
            std::cout << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
