#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "seq/config.hpp"

namespace {

namespace fs = std::filesystem;

struct TempTree {
    fs::path root;
    TempTree() {
        root = fs::temp_directory_path() / "seq_config_test";
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }

    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = root / name;
        std::ofstream(p) << text;
        return p;
    }

    void touch_datasets() const {
        for (const char* n : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                              "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"})
            std::ofstream(root / n) << "x";
    }
};

} // namespace

TEST_CASE("defaults: grid 10..120, flat arch, single thread") {
    const seq::RunConfig cfg = seq::default_config();
    REQUIRE(cfg.k_grid == std::vector<std::size_t>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120});
    REQUIRE(cfg.arch == seq::Arch::lae2);
    REQUIRE(cfg.seed == 1);
    REQUIRE(cfg.threads == 1);
    REQUIRE(cfg.epsilon == 0.01);
    REQUIRE(cfg.out_dir == "out");
    REQUIRE_FALSE(cfg.epochs_explicit);
}

TEST_CASE("SEQ_DATA_DIR seeds the data directory") {
    setenv("SEQ_DATA_DIR", "/tmp/seq-env-dir", 1);
    const seq::RunConfig cfg = seq::default_config();
    REQUIRE(cfg.data_dir == "/tmp/seq-env-dir");
    unsetenv("SEQ_DATA_DIR");
    REQUIRE(seq::default_config().data_dir.empty());
}

TEST_CASE("a full JSON file overrides every covered field") {
    TempTree t;
    const auto p = t.write("full.json", R"({
        "version": 1,
        "data_dir": "/data/x",
        "train_images": "a.idx", "train_labels": "b.idx",
        "test_images": "c.idx", "test_labels": "d.idx",
        "arch": "cae4",
        "seed": 77,
        "train": {"learning_rate": 0.5, "batch_size": 16, "epochs": 3,
                  "verbose": true, "weight_init": "xavier"},
        "kmeans": {"k": 40, "max_iter": 55, "tol": 0.001, "restarts": 4, "init": "forgy"},
        "k_grid": [5, 15, 25],
        "epsilon": 0.05,
        "out_dir": "results",
        "threads": 8,
        "limit": 1000
    })");

    seq::RunConfig cfg = seq::default_config();
    seq::apply_config_file(cfg, p.string());
    REQUIRE(cfg.data_dir == "/data/x");
    REQUIRE(cfg.train_images == "a.idx");
    REQUIRE(cfg.test_labels == "d.idx");
    REQUIRE(cfg.arch == seq::Arch::cae4);
    REQUIRE(cfg.seed == 77);
    REQUIRE(cfg.train.seed == 77);
    REQUIRE(cfg.kmeans.seed == 77);
    REQUIRE(cfg.train.learning_rate == 0.5);
    REQUIRE(cfg.train.batch_size == 16);
    REQUIRE(cfg.train.epochs == 3);
    REQUIRE(cfg.epochs_explicit);
    REQUIRE(cfg.train.verbose);
    REQUIRE(cfg.train.weight_init == seq::WeightInit::xavier);
    REQUIRE(cfg.kmeans.k == 40);
    REQUIRE(cfg.kmeans.max_iter == 55);
    REQUIRE(cfg.kmeans.tol == 0.001);
    REQUIRE(cfg.kmeans.restarts == 4);
    REQUIRE(cfg.kmeans.init == seq::KmeansInit::forgy);
    REQUIRE(cfg.k_grid == std::vector<std::size_t>{5, 15, 25});
    REQUIRE(cfg.epsilon == 0.05);
    REQUIRE(cfg.out_dir == "results");
    REQUIRE(cfg.threads == 8);
    REQUIRE(cfg.limit == 1000);
}

TEST_CASE("config files fail loudly on typos, bad versions and bad JSON") {
    TempTree t;
    seq::RunConfig cfg = seq::default_config();

    const auto unknown = t.write("u.json", R"({"version": 1, "learning_rate": 0.1})");
    REQUIRE_THROWS_AS(seq::apply_config_file(cfg, unknown.string()), seq::ConfigError);

    const auto missing = t.write("m.json", R"({"arch": "lae2"})");
    REQUIRE_THROWS_AS(seq::apply_config_file(cfg, missing.string()), seq::ConfigError);

    const auto wrong = t.write("w.json", R"({"version": 2})");
    REQUIRE_THROWS_AS(seq::apply_config_file(cfg, wrong.string()), seq::ConfigError);

    const auto broken = t.write("b.json", "{nope");
    REQUIRE_THROWS_AS(seq::apply_config_file(cfg, broken.string()), seq::ConfigError);

    const auto badtype = t.write("t.json", R"({"version": 1, "threads": "many"})");
    REQUIRE_THROWS_AS(seq::apply_config_file(cfg, badtype.string()), seq::ConfigError);

    const auto badarch = t.write("a.json", R"({"version": 1, "arch": "resnet"})");
    REQUIRE_THROWS_AS(seq::apply_config_file(cfg, badarch.string()), seq::ConfigError);

    const auto badinit = t.write("i.json", R"({"version": 1, "kmeans": {"init": "random"}})");
    REQUIRE_THROWS_AS(seq::apply_config_file(cfg, badinit.string()), seq::ConfigError);

    REQUIRE_THROWS_AS(seq::apply_config_file(cfg, (t.root / "absent.json").string()),
                      seq::ConfigError);
}

TEST_CASE("validate checks ranges, grid order and dataset presence") {
    TempTree t;
    t.touch_datasets();
    seq::RunConfig cfg = seq::default_config();
    cfg.data_dir = t.root.string();
    cfg.validate(); // all four files exist

    seq::RunConfig bad = cfg;
    bad.epsilon = 1.5;
    REQUIRE_THROWS_AS(bad.validate(), seq::ConfigError);
    bad = cfg;
    bad.epsilon = -0.01;
    REQUIRE_THROWS_AS(bad.validate(), seq::ConfigError);
    bad = cfg;
    bad.kmeans.k = 0;
    REQUIRE_THROWS_AS(bad.validate(), seq::ConfigError);
    bad = cfg;
    bad.kmeans.restarts = 0;
    REQUIRE_THROWS_AS(bad.validate(), seq::ConfigError);
    bad = cfg;
    bad.threads = 0;
    REQUIRE_THROWS_AS(bad.validate(), seq::ConfigError);
    bad = cfg;
    bad.k_grid = {10, 10};
    REQUIRE_THROWS_AS(bad.validate(), seq::ConfigError);
    bad = cfg;
    bad.k_grid = {20, 10};
    REQUIRE_THROWS_AS(bad.validate(), seq::ConfigError);
    bad = cfg;
    bad.train_images = "missing.idx";
    REQUIRE_THROWS_AS(bad.validate(), seq::DataError);
    bad = cfg;
    bad.train.learning_rate = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), seq::ConfigError);
}

TEST_CASE("resolve_path prefers the plain name, then the .gz twin") {
    TempTree t;
    std::ofstream(t.root / "plain.idx") << "x";
    std::ofstream(t.root / "zipped.idx.gz") << "x";

    seq::RunConfig cfg = seq::default_config();
    cfg.data_dir = t.root.string();
    REQUIRE(cfg.resolve_path("plain.idx") == (t.root / "plain.idx").string());
    REQUIRE(cfg.resolve_path("zipped.idx") == (t.root / "zipped.idx.gz").string());
    REQUIRE(cfg.resolve_path("nope.idx") == (t.root / "nope.idx").string());

    // Absolute paths ignore data_dir.
    const auto abs = (t.root / "plain.idx").string();
    REQUIRE(cfg.resolve_path(abs) == abs);
}

TEST_CASE("epoch defaults depend on the architecture unless pinned") {
    seq::RunConfig cfg = seq::default_config();
    cfg.finalize_epochs();
    REQUIRE(cfg.train.epochs == 20);

    cfg.arch = seq::Arch::cae4;
    cfg.finalize_epochs();
    REQUIRE(cfg.train.epochs == 10);

    cfg.train.epochs = 5;
    cfg.epochs_explicit = true;
    cfg.finalize_epochs();
    REQUIRE(cfg.train.epochs == 5);
}

TEST_CASE("fingerprints are stable and sensitive to what matters") {
    seq::RunConfig a = seq::default_config();
    seq::RunConfig b = seq::default_config();
    REQUIRE(seq::config_fingerprint(a) == seq::config_fingerprint(b));

    b.seed = 2;
    REQUIRE(seq::config_fingerprint(a) != seq::config_fingerprint(b));

    b = seq::default_config();
    b.out_dir = "elsewhere"; // output location does not change the math
    REQUIRE(seq::config_fingerprint(a) == seq::config_fingerprint(b));
}
