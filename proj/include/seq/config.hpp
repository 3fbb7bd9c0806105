#pragma once
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp" // vendored nlohmann/json single header

#include "seq/encoder.hpp"
#include "seq/errors.hpp"
#include "seq/kmeans.hpp"

namespace seq {

// Resolved run configuration. Sources, in increasing precedence:
// built-in defaults, SEQ_DATA_DIR, --config JSON file, CLI flags.
struct RunConfig {
    std::string data_dir;
    std::string train_images = "train-images-idx3-ubyte";
    std::string train_labels = "train-labels-idx1-ubyte";
    std::string test_images = "t10k-images-idx3-ubyte";
    std::string test_labels = "t10k-labels-idx1-ubyte";

    Arch arch = Arch::lae2;
    std::uint64_t seed = 1;
    TrainConfig train;
    KmeansConfig kmeans;
    std::vector<std::size_t> k_grid;
    double epsilon = 0.01;
    std::string out_dir = "out";
    std::size_t threads = 1;
    std::size_t limit = 0;       // optional sample cap per split; 0 = full
    bool epochs_explicit = false; // tracks whether epochs came from file/flag

    std::string resolve_path(const std::string& name) const {
        namespace fs = std::filesystem;
        fs::path p(name);
        if (!p.is_absolute() && !data_dir.empty()) p = fs::path(data_dir) / p;
        if (fs::exists(p)) return p.string();
        fs::path gz = p;
        gz += ".gz";
        if (fs::exists(gz)) return gz.string();
        return p.string(); // caller's validate() reports the miss
    }

    void validate() const {
        train.validate();
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
        if (kmeans.k < 1) throw ConfigError("k must be >= 1");
        if (kmeans.restarts < 1) throw ConfigError("restarts must be >= 1");
        if (threads < 1) throw ConfigError("threads must be >= 1");
        for (std::size_t i = 1; i < k_grid.size(); ++i)
            if (k_grid[i] <= k_grid[i - 1]) throw ConfigError("k_grid must be strictly ascending");
        // Missing inputs are a data problem, reported as such before any
        // training time is spent.
        for (const std::string& name : {train_images, train_labels, test_images, test_labels}) {
            const std::string p = resolve_path(name);
            if (!std::filesystem::exists(p)) throw DataError("dataset file not found: " + p);
        }
    }

    // Arch-dependent default when neither file nor flag set epochs.
    void finalize_epochs() {
        if (!epochs_explicit) train.epochs = (arch == Arch::cae4) ? 10 : 20;
    }
};

inline RunConfig default_config() {
    RunConfig cfg;
    if (const char* env = std::getenv("SEQ_DATA_DIR")) cfg.data_dir = env;
    for (std::size_t k = 10; k <= 120; k += 10) cfg.k_grid.push_back(k);
    return cfg;
}

namespace detail {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).template get<T>();
}

} // namespace detail

// JSON config file. Unknown keys are rejected so typos fail loudly.
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    try {
        if (!j.is_object()) throw ConfigError("config root must be an object");
        static const std::vector<std::string> known = {
            "version",     "data_dir", "train_images", "train_labels", "test_images",
            "test_labels", "arch",     "seed",         "train",        "kmeans",
            "k_grid",      "epsilon",  "out_dir",      "threads",      "limit"};
        for (const auto& [key, _] : j.items())
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw ConfigError("unknown config key '" + key + "' in " + path);
        if (!j.contains("version")) throw ConfigError("config file missing 'version'");
        if (j.at("version").get<int>() != 1) throw ConfigError("unsupported config version");

        detail::maybe(j, "data_dir", cfg.data_dir);
        detail::maybe(j, "train_images", cfg.train_images);
        detail::maybe(j, "train_labels", cfg.train_labels);
        detail::maybe(j, "test_images", cfg.test_images);
        detail::maybe(j, "test_labels", cfg.test_labels);
        if (j.contains("arch")) cfg.arch = arch_from_name(j.at("arch").get<std::string>());
        if (j.contains("seed")) {
            cfg.seed = j.at("seed").get<std::uint64_t>();
            cfg.train.seed = cfg.seed;
            cfg.kmeans.seed = cfg.seed;
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            detail::maybe(t, "learning_rate", cfg.train.learning_rate);
            detail::maybe(t, "batch_size", cfg.train.batch_size);
            if (t.contains("epochs")) {
                cfg.train.epochs = t.at("epochs").get<std::size_t>();
                cfg.epochs_explicit = true;
            }
            detail::maybe(t, "verbose", cfg.train.verbose);
            if (t.contains("weight_init")) {
                const auto s = t.at("weight_init").get<std::string>();
                if (s == "he")
                    cfg.train.weight_init = WeightInit::he;
                else if (s == "xavier")
                    cfg.train.weight_init = WeightInit::xavier;
                else
                    throw ConfigError("weight_init must be 'he' or 'xavier'");
            }
        }
        if (j.contains("kmeans")) {
            const auto& m = j.at("kmeans");
            detail::maybe(m, "k", cfg.kmeans.k);
            detail::maybe(m, "max_iter", cfg.kmeans.max_iter);
            detail::maybe(m, "tol", cfg.kmeans.tol);
            detail::maybe(m, "restarts", cfg.kmeans.restarts);
            if (m.contains("init")) {
                const auto s = m.at("init").get<std::string>();
                if (s == "kmeans++")
                    cfg.kmeans.init = KmeansInit::kmeanspp;
                else if (s == "forgy")
                    cfg.kmeans.init = KmeansInit::forgy;
                else
                    throw ConfigError("kmeans init must be 'kmeans++' or 'forgy'");
            }
        }
        detail::maybe(j, "k_grid", cfg.k_grid);
        detail::maybe(j, "epsilon", cfg.epsilon);
        detail::maybe(j, "out_dir", cfg.out_dir);
        detail::maybe(j, "threads", cfg.threads);
        detail::maybe(j, "limit", cfg.limit);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config field error in " + path + ": " + e.what());
    }
}

// Canonical text form of the resolved config; hashed into bundles so reruns
// can be compared without the original file.
inline std::string config_fingerprint(const RunConfig& c) {
    nlohmann::json j;
    j["arch"] = arch_name(c.arch);
    j["seed"] = c.seed;
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"batch_size", c.train.batch_size},
                  {"epochs", c.train.epochs},
                  {"weight_init", c.train.weight_init == WeightInit::he ? "he" : "xavier"}};
    j["kmeans"] = {{"k", c.kmeans.k},
                   {"init", c.kmeans.init == KmeansInit::kmeanspp ? "kmeans++" : "forgy"},
                   {"max_iter", c.kmeans.max_iter},
                   {"tol", c.kmeans.tol},
                   {"restarts", c.kmeans.restarts}};
    j["k_grid"] = c.k_grid;
    j["epsilon"] = c.epsilon;
    j["limit"] = c.limit;
    return j.dump();
}

} // namespace seq
