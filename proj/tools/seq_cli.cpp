// seq: supervised-encoding quantizer pipeline.
//
// Subcommands: train-encoder, quantize, train-decoder, generate, eval,
// select-k. Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric
// failure, 5 precondition violation, 1 unexpected internal error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seq/seq.hpp"

namespace fs = std::filesystem;

namespace {

// Flag storage; CLI11 option counts decide whether a flag overrides the
// config-file value.
struct Flags {
    std::string config_path;
    std::string data_dir;
    std::string out_dir;
    std::string arch;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::size_t limit = 0;
    std::string bundle_path;

    double lr = 0.01;
    std::size_t batch = 64;
    std::size_t epochs = 0;
    bool verbose = false;

    std::size_t k = 100;
    std::vector<std::size_t> k_grid;
    double epsilon = 0.01;
    double encoder_accuracy = 0.0;
    std::size_t restarts = 1;
    std::size_t max_iter = 300;
    std::string kmeans_init = "kmeans++";

    std::string mode = "cluster-means";
    std::vector<std::size_t> ids;
    std::size_t steps = 8;
    std::string format = "pgm";
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file (schema in README)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--data-dir", f.data_dir, "dataset directory (default: $SEQ_DATA_DIR)");
    cmd->add_option("--out", f.out_dir, "output directory (default: out)");
    cmd->add_option("--arch", f.arch, "encoder architecture: lae2 | lae4 | cae4");
    cmd->add_option("--seed", f.seed, "master RNG seed");
    cmd->add_option("--threads", f.threads, "worker threads (results are thread-count invariant)");
    cmd->add_option("--limit", f.limit, "cap samples per split (0 = full dataset)");
    cmd->add_option("--bundle", f.bundle_path, "model bundle path (default: <out>/model.seq1)");
}

void add_train_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--epochs", f.epochs, "training epochs (default 20; cae4 default 10)");
    cmd->add_option("--lr", f.lr, "SGD learning rate");
    cmd->add_option("--batch-size", f.batch, "minibatch size");
    cmd->add_flag("--verbose", f.verbose, "per-epoch progress on stderr");
}

void add_kmeans_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--restarts", f.restarts, "k-means restarts (best inertia kept)");
    cmd->add_option("--max-iter", f.max_iter, "Lloyd iteration cap");
    cmd->add_option("--init", f.kmeans_init, "centroid seeding: kmeans++ | forgy");
}

// Option presence that tolerates flags a subcommand does not define.
std::size_t given(const CLI::App* cmd, const std::string& name) {
    const CLI::Option* o = cmd->get_option_no_throw(name);
    return o ? o->count() : 0;
}

seq::RunConfig resolve_config(const CLI::App* cmd, const Flags& f) {
    seq::RunConfig cfg = seq::default_config();
    if (given(cmd, "--config")) seq::apply_config_file(cfg, f.config_path);
    if (given(cmd, "--data-dir")) cfg.data_dir = f.data_dir;
    if (given(cmd, "--out")) cfg.out_dir = f.out_dir;
    if (given(cmd, "--arch")) cfg.arch = seq::arch_from_name(f.arch);
    if (given(cmd, "--seed")) {
        cfg.seed = f.seed;
        cfg.train.seed = f.seed;
        cfg.kmeans.seed = f.seed;
    }
    if (given(cmd, "--threads")) cfg.threads = f.threads;
    if (given(cmd, "--limit")) cfg.limit = f.limit;

    if (given(cmd, "--epochs")) {
        cfg.train.epochs = f.epochs;
        cfg.epochs_explicit = true;
    }
    if (given(cmd, "--lr")) cfg.train.learning_rate = f.lr;
    if (given(cmd, "--batch-size")) cfg.train.batch_size = f.batch;
    if (given(cmd, "--verbose")) cfg.train.verbose = f.verbose;

    if (given(cmd, "--k")) cfg.kmeans.k = f.k;
    if (given(cmd, "--k-grid")) cfg.k_grid = f.k_grid;
    if (given(cmd, "--epsilon")) cfg.epsilon = f.epsilon;
    if (given(cmd, "--restarts")) cfg.kmeans.restarts = f.restarts;
    if (given(cmd, "--max-iter")) cfg.kmeans.max_iter = f.max_iter;
    if (given(cmd, "--init")) {
        if (f.kmeans_init == "kmeans++")
            cfg.kmeans.init = seq::KmeansInit::kmeanspp;
        else if (f.kmeans_init == "forgy")
            cfg.kmeans.init = seq::KmeansInit::forgy;
        else
            throw seq::ConfigError("--init must be 'kmeans++' or 'forgy'");
    }
    return cfg;
}

std::string bundle_path(const Flags& f, const seq::RunConfig& cfg) {
    return f.bundle_path.empty() ? (fs::path(cfg.out_dir) / "model.seq1").string() : f.bundle_path;
}

seq::LabeledDataset load_split(const seq::RunConfig& cfg, bool train_split) {
    const std::string imgs = cfg.resolve_path(train_split ? cfg.train_images : cfg.test_images);
    const std::string labs = cfg.resolve_path(train_split ? cfg.train_labels : cfg.test_labels);
    seq::RawDataset raw = seq::parse_idx(imgs, labs);
    seq::LabeledDataset ds = seq::normalize(raw, seq::arch_layout(cfg.arch));
    ds.split_tag = train_split ? "train" : "test";
    if (cfg.limit > 0) ds = seq::head(ds, std::min(cfg.limit, ds.size()));
    return ds;
}

std::string out_file(const seq::RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

// P_E as recorded by train-encoder in the same out directory, if any.
std::optional<double> stored_encoder_accuracy(const seq::RunConfig& cfg) {
    std::ifstream f(out_file(cfg, "train_encoder_metrics.csv"));
    if (!f) return std::nullopt;
    std::string line;
    while (std::getline(f, line))
        if (line.rfind("P_E,", 0) == 0) return std::stod(line.substr(4));
    return std::nullopt;
}

int cmd_train_encoder(const CLI::App* cmd, const Flags& f) {
    seq::RunConfig cfg = resolve_config(cmd, f);
    cfg.finalize_epochs();
    cfg.validate();
    seq::set_threads(cfg.threads);
    fs::create_directories(cfg.out_dir);

    const seq::LabeledDataset train = load_split(cfg, true);
    const seq::LabeledDataset test = load_split(cfg, false);
    std::printf("training %s encoder: %zu train / %zu test samples, %zu epochs, seed %llu\n",
                seq::arch_name(cfg.arch), train.size(), test.size(), cfg.train.epochs,
                static_cast<unsigned long long>(cfg.train.seed));

    const auto t0 = std::chrono::steady_clock::now();
    seq::EncoderTrainResult r = seq::train_encoder(train, test, cfg.arch, cfg.train);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const seq::ModelBundle b = seq::bundle_from_models(r.model, nullptr, nullptr, cfg.seed,
                                                       seq::fnv1a_hex(seq::config_fingerprint(cfg)));
    const auto bytes = seq::serialize_bundle(b);
    seq::write_bytes(bundle_path(f, cfg), bytes);

    seq::MetricsCsv m;
    m.add("P_E", r.test_accuracy);
    m.add("final_epoch_loss", r.epoch_losses.empty() ? 0.0 : r.epoch_losses.back());
    m.add("epochs", static_cast<double>(cfg.train.epochs));
    m.add("train_seconds", secs);
    seq::write_text(out_file(cfg, "train_encoder_metrics.csv"), m.str());

    std::printf("P_E = %.4f  (%.1fs)\n", r.test_accuracy, secs);
    std::printf("bundle %s  hash %s\n", bundle_path(f, cfg).c_str(), seq::fnv1a_hex(bytes).c_str());
    return 0;
}

int cmd_quantize(const CLI::App* cmd, const Flags& f) {
    seq::RunConfig cfg = resolve_config(cmd, f);
    cfg.validate();
    seq::set_threads(cfg.threads);
    fs::create_directories(cfg.out_dir);

    seq::ModelBundle b = seq::load_bundle(bundle_path(f, cfg));
    const seq::EncoderModel enc = seq::encoder_from_bundle(b);
    cfg.arch = enc.arch; // dataset layout follows the stored model
    const seq::FeatureSet ftrain = seq::encode(enc, load_split(cfg, true));
    const seq::FeatureSet ftest = seq::encode(enc, load_split(cfg, false));

    const std::vector<std::size_t> ks =
        cmd->count("--k") ? std::vector<std::size_t>{cfg.kmeans.k} : cfg.k_grid;
    if (ks.empty()) throw seq::ConfigError("quantize: no cluster counts given (--k or k_grid)");
    std::vector<seq::KSweepRecord> records;
    std::vector<double> acc_test;
    std::vector<seq::Codebook> books;
    std::size_t best = 0;
    for (const std::size_t k : ks) {
        seq::KmeansConfig kc = cfg.kmeans;
        kc.k = k;
        const seq::KmeansResult fit = seq::kmeans_fit(ftrain, kc);
        for (const auto& w : fit.warnings) std::fprintf(stderr, "warning: K=%zu: %s\n", k, w.c_str());
        seq::Codebook cb = seq::build_codebook(fit, ftrain.labels, seq::kNumClasses);
        records.push_back({k, seq::clustering_accuracy(cb, ftrain), fit.inertia, kc.seed});
        acc_test.push_back(seq::clustering_accuracy(cb, ftest));
        books.push_back(std::move(cb));
        std::printf("K=%-4zu P_Q_train=%.4f acc_test=%.4f inertia=%.6g\n", k,
                    records.back().quantizer_accuracy, acc_test.back(), fit.inertia);
        if (acc_test.back() > acc_test[best]) best = acc_test.size() - 1;
    }

    seq::write_text(out_file(cfg, "sweep.csv"), seq::sweep_csv(records, acc_test));

    const std::optional<double> p_e = cmd->count("--encoder-accuracy")
                                          ? std::optional<double>(f.encoder_accuracy)
                                          : stored_encoder_accuracy(cfg);
    if (p_e) {
        for (std::size_t i = 0; i < records.size(); ++i)
            if (acc_test[i] > *p_e)
                std::fprintf(stderr,
                             "warning: K=%zu test accuracy %.4f exceeds encoder accuracy %.4f "
                             "(quantizer is expected to lower-bound the encoder)\n",
                             records[i].k, acc_test[i], *p_e);
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].quantizer_accuracy > *p_e - cfg.epsilon) {
                std::printf("accuracy rule (train P_Q > P_E - %.3g) selects K=%zu\n", cfg.epsilon,
                            records[i].k);
                break;
            }
    }

    // Persist the codebook with the best test accuracy (ties: smallest K).
    b.codebook = std::move(books[best]);
    const auto bytes = seq::serialize_bundle(b);
    seq::write_bytes(bundle_path(f, cfg), bytes);
    std::printf("stored codebook K=%zu  bundle hash %s\n", records[best].k,
                seq::fnv1a_hex(bytes).c_str());
    return 0;
}

int cmd_train_decoder(const CLI::App* cmd, const Flags& f) {
    seq::RunConfig cfg = resolve_config(cmd, f);
    cfg.validate();
    seq::set_threads(cfg.threads);
    fs::create_directories(cfg.out_dir);

    seq::ModelBundle b = seq::load_bundle(bundle_path(f, cfg));
    const seq::EncoderModel enc = seq::encoder_from_bundle(b);
    cfg.arch = enc.arch;
    cfg.finalize_epochs();
    const seq::LabeledDataset train = load_split(cfg, true);
    const seq::LabeledDataset test = load_split(cfg, false);

    seq::DecoderModel dec = seq::make_decoder(enc.arch, cfg.train.weight_init, cfg.train.seed);
    std::printf("training %s decoder: %zu samples, %zu epochs, seed %llu\n",
                seq::arch_name(enc.arch), train.size(), cfg.train.epochs,
                static_cast<unsigned long long>(cfg.train.seed));
    const seq::DecoderTrainResult r = seq::train_decoder(enc, dec, train, cfg.train);
    const double test_mse = seq::reconstruction_mse(enc, dec, test);
    const double baseline = seq::mean_image_baseline_mse(train, test);

    b.decoder_params = seq::collect_params(dec.net);
    const auto bytes = seq::serialize_bundle(b);
    seq::write_bytes(bundle_path(f, cfg), bytes);

    seq::MetricsCsv m;
    m.add("reconstruction_mse_train", r.final_train_mse);
    m.add("reconstruction_mse_test", test_mse);
    m.add("mean_image_baseline_mse_test", baseline);
    seq::write_text(out_file(cfg, "train_decoder_metrics.csv"), m.str());

    std::printf("train MSE %.5f  test MSE %.5f  (mean-image baseline %.5f)\n", r.final_train_mse,
                test_mse, baseline);
    std::printf("bundle hash %s\n", seq::fnv1a_hex(bytes).c_str());
    return 0;
}

// Deterministic sample pick when --ids is omitted: lowest-index qualifying
// cluster(s), lowest-index member features.
std::vector<std::size_t> auto_pick(const seq::Codebook& cb, const seq::FeatureSet& fs,
                                   seq::GridMode mode) {
    const seq::AssignResult ar = seq::assign(fs.matrix, cb.centroids);
    std::vector<std::vector<std::size_t>> members(cb.k());
    for (std::size_t i = 0; i < ar.assignments.size(); ++i)
        members[static_cast<std::size_t>(ar.assignments[i])].push_back(i);

    if (mode == seq::GridMode::intra_cluster) {
        for (std::size_t c = 0; c < cb.k(); ++c)
            if (members[c].size() >= 3) return {members[c][0], members[c][1], members[c][2]};
        throw seq::PreconditionError("no cluster has 3 members to build an intra-cluster grid");
    }
    for (int label = 0; label < static_cast<int>(cb.num_classes); ++label) {
        std::vector<std::size_t> picks;
        for (std::size_t c = 0; c < cb.k() && picks.size() < 3; ++c)
            if (cb.cluster_labels[c] == label && !members[c].empty()) picks.push_back(members[c][0]);
        if (picks.size() == 3) return picks;
    }
    throw seq::PreconditionError("no label owns 3 non-empty clusters for an inter-cluster grid");
}

int cmd_generate(const CLI::App* cmd, const Flags& f) {
    seq::RunConfig cfg = resolve_config(cmd, f);
    cfg.validate();
    seq::set_threads(cfg.threads);
    fs::create_directories(cfg.out_dir);
    const seq::ImageFormat fmt = seq::format_from_name(f.format);

    const seq::ModelBundle b = seq::load_bundle(bundle_path(f, cfg));
    const seq::EncoderModel enc = seq::encoder_from_bundle(b);
    const seq::DecoderModel dec = seq::decoder_from_bundle(b);
    if (!b.codebook) throw seq::PreconditionError("bundle has no codebook; run quantize first");
    cfg.arch = enc.arch;
    const seq::FeatureSet fsr = seq::encode(enc, load_split(cfg, true));

    const std::string ext = fmt == seq::ImageFormat::pgm ? ".pgm" : ".png";
    if (f.mode == "cluster-means") {
        const seq::ImageGrid grid = seq::cluster_mean_images(*b.codebook, fsr, dec);
        for (const auto& note : grid.notes) std::fprintf(stderr, "note: %s\n", note.c_str());
        const std::string path = out_file(cfg, "cluster_means" + ext);
        seq::export_grid(grid, path, fmt);
        std::printf("wrote %s (%zu cluster images in a %zux%zu grid)\n", path.c_str(), grid.filled(),
                    grid.rows, grid.cols);
        return 0;
    }

    seq::GridMode gm;
    if (f.mode == "intra")
        gm = seq::GridMode::intra_cluster;
    else if (f.mode == "inter")
        gm = seq::GridMode::inter_cluster;
    else
        throw seq::ConfigError("--mode must be cluster-means, intra or inter");

    if (cmd->count("--ids") && f.ids.size() != 3)
        throw seq::ConfigError("--ids needs exactly 3 comma-separated sample indices");
    const std::vector<std::size_t> picks =
        cmd->count("--ids") ? f.ids : auto_pick(*b.codebook, fsr, gm);
    const seq::ImageGrid grid = seq::interpolation_grid(*b.codebook, fsr, dec, gm, picks, f.steps);
    const std::string path = out_file(cfg, "grid_" + f.mode + ext);
    seq::export_grid(grid, path, fmt);

    const int label = grid.cells[0].label;
    const double agree = seq::grid_roundtrip_agreement(grid, enc, *b.codebook, label);
    std::printf("wrote %s (%zux%zu, sources %zu,%zu,%zu, label %d, blend round-trip %.0f%%)\n",
                path.c_str(), grid.rows, grid.cols, picks[0], picks[1], picks[2], label,
                100.0 * agree);
    return 0;
}

int cmd_eval(const CLI::App* cmd, const Flags& f) {
    seq::RunConfig cfg = resolve_config(cmd, f);
    cfg.validate();
    seq::set_threads(cfg.threads);
    fs::create_directories(cfg.out_dir);

    const seq::ModelBundle b = seq::load_bundle(bundle_path(f, cfg));
    if (!b.codebook) throw seq::PreconditionError("bundle has no codebook; run quantize first");
    const seq::EncoderModel enc = seq::encoder_from_bundle(b);
    cfg.arch = enc.arch;
    const seq::LabeledDataset train = load_split(cfg, true);
    const seq::LabeledDataset test = load_split(cfg, false);

    seq::MetricsCsv m;
    const double pq = seq::clustering_accuracy(*b.codebook, seq::encode(enc, train));
    const double acc = seq::clustering_accuracy(*b.codebook, seq::encode(enc, test));
    m.add("P_Q_train", pq);
    m.add("acc_test", acc);
    std::printf("P_Q_train = %.6f\nacc_test = %.6f\n", pq, acc);
    if (!b.decoder_params.empty()) {
        const seq::DecoderModel dec = seq::decoder_from_bundle(b);
        const double mse = seq::reconstruction_mse(enc, dec, test);
        m.add("reconstruction_mse_test", mse);
        std::printf("reconstruction_mse_test = %.6f\n", mse);
    }
    seq::write_text(out_file(cfg, "eval_metrics.csv"), m.str());
    return 0;
}

int cmd_select_k(const CLI::App* cmd, const Flags& f) {
    seq::RunConfig cfg = resolve_config(cmd, f);
    cfg.validate();
    seq::set_threads(cfg.threads);
    fs::create_directories(cfg.out_dir);

    const std::optional<double> p_e = cmd->count("--encoder-accuracy")
                                          ? std::optional<double>(f.encoder_accuracy)
                                          : stored_encoder_accuracy(cfg);
    if (!p_e)
        throw seq::ConfigError(
            "encoder accuracy unknown: pass --encoder-accuracy or run train-encoder with the same --out");

    const seq::ModelBundle b = seq::load_bundle(bundle_path(f, cfg));
    const seq::EncoderModel enc = seq::encoder_from_bundle(b);
    cfg.arch = enc.arch;
    const seq::FeatureSet ftrain = seq::encode(enc, load_split(cfg, true));

    const seq::SelectKResult r = seq::select_k(ftrain, *p_e, cfg.epsilon, cfg.k_grid, cfg.kmeans);
    std::string csv = "K,P_Q_train,inertia,seed\n";
    for (const auto& rec : r.records) {
        csv += std::to_string(rec.k) + "," + seq::csv_num(rec.quantizer_accuracy) + "," +
               seq::csv_num(rec.inertia) + "," + std::to_string(rec.seed) + "\n";
        std::printf("K=%-4zu P_Q_train=%.4f inertia=%.6g\n", rec.k, rec.quantizer_accuracy,
                    rec.inertia);
    }
    seq::write_text(out_file(cfg, "select_k.csv"), csv);

    if (r.k)
        std::printf("selected K=%zu (smallest K with train P_Q > %.4f - %.3g)\n", *r.k, *p_e,
                    cfg.epsilon);
    else
        std::printf("no K in the grid satisfies the accuracy rule (P_E=%.4f, epsilon=%.3g)\n", *p_e,
                    cfg.epsilon);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"supervised-encoding quantizer: encoder, k-means codebook, decoder, generation"};
    app.require_subcommand(1);
    Flags f;

    CLI::App* te = app.add_subcommand("train-encoder", "pretrain the classifier and keep the encoder");
    add_common(te, f);
    add_train_flags(te, f);

    CLI::App* qz = app.add_subcommand("quantize", "fit k-means codebook(s) over encoded features");
    add_common(qz, f);
    add_kmeans_flags(qz, f);
    qz->add_option("--k", f.k, "single cluster count (otherwise sweeps --k-grid)");
    qz->add_option("--k-grid", f.k_grid, "comma-separated ascending K values")->delimiter(',');
    qz->add_option("--epsilon", f.epsilon, "accuracy-rule slack");
    qz->add_option("--encoder-accuracy", f.encoder_accuracy, "P_E for the accuracy rule / warnings");

    CLI::App* td = app.add_subcommand("train-decoder", "train the reconstruction decoder (encoder frozen)");
    add_common(td, f);
    add_train_flags(td, f);

    CLI::App* ge = app.add_subcommand("generate", "decode cluster means or blend grids to image files");
    add_common(ge, f);
    ge->add_option("--mode", f.mode, "cluster-means | intra | inter")->capture_default_str();
    ge->add_option("--ids", f.ids, "3 comma-separated train-sample indices")->delimiter(',');
    ge->add_option("--steps", f.steps, "blend steps per axis")->capture_default_str();
    ge->add_option("--format", f.format, "pgm | png")->capture_default_str();

    CLI::App* ev = app.add_subcommand("eval", "score a stored bundle on the train/test splits");
    add_common(ev, f);

    CLI::App* sk = app.add_subcommand("select-k", "smallest K whose train accuracy clears P_E - epsilon");
    add_common(sk, f);
    add_kmeans_flags(sk, f);
    sk->add_option("--k-grid", f.k_grid, "comma-separated ascending K values")->delimiter(',');
    sk->add_option("--epsilon", f.epsilon, "accuracy-rule slack");
    sk->add_option("--encoder-accuracy", f.encoder_accuracy, "P_E (otherwise read from metrics CSV)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const auto guarded = [](const std::function<int()>& fn) {
        try {
            return fn();
        } catch (const seq::ConfigError& e) {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 2;
        } catch (const seq::DataError& e) {
            std::fprintf(stderr, "data error: %s\n", e.what());
            return 3;
        } catch (const seq::NumericError& e) {
            std::fprintf(stderr, "numeric error: %s\n", e.what());
            return 4;
        } catch (const seq::PreconditionError& e) {
            std::fprintf(stderr, "precondition violated: %s\n", e.what());
            return 5;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "internal error: %s\n", e.what());
            return 1;
        }
    };

    if (te->parsed()) return guarded([&] { return cmd_train_encoder(te, f); });
    if (qz->parsed()) return guarded([&] { return cmd_quantize(qz, f); });
    if (td->parsed()) return guarded([&] { return cmd_train_decoder(td, f); });
    if (ge->parsed()) return guarded([&] { return cmd_generate(ge, f); });
    if (ev->parsed()) return guarded([&] { return cmd_eval(ev, f); });
    if (sk->parsed()) return guarded([&] { return cmd_select_k(sk, f); });
    return 2;
}
