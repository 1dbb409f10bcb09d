#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lte/dataset.hpp"
#include "lte/embedding.hpp"
#include "lte/label_tree.hpp"
#include "lte/synth.hpp"
#include "test_util.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#ifndef LTE_LAB_PATH
#error "LTE_LAB_PATH must point at the lte-lab binary"
#endif

using namespace lte;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs the CLI with stdout/stderr captured to files in tmp.
CliResult run_cli(const testutil::TempDir& tmp, const std::string& args) {
    static int counter = 0;
    const std::string out_path = tmp.file("cli_out_" + std::to_string(counter));
    const std::string err_path = tmp.file("cli_err_" + std::to_string(counter));
    ++counter;
    const std::string cmd = std::string("\"") + LTE_LAB_PATH + "\" " + args + " > \"" +
                            out_path + "\" 2> \"" + err_path + "\"";
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

/// Small 4-class dataset on disk; returns the CSV path.
std::string make_cli_dataset(const testutil::TempDir& tmp, const std::string& name,
                             std::uint64_t seed) {
    SynthConfig config;
    config.num_classes = 4;
    config.feature_dim = 6;
    config.depth = 2;
    config.sigma = 0.5;
    config.snippets_per_class = 4;
    config.segments_per_snippet = 2;
    config.seed = seed;
    const SynthData data = synth_hierarchy_dataset(config);
    const std::string path = tmp.file(name);
    save_dataset(data.dataset, path);
    return path;
}

} // namespace

TEST_CASE("help exits 0 and lists subcommands") {
    testutil::TempDir tmp("lte_cli");
    const CliResult r = run_cli(tmp, "--help");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("synth") != std::string::npos);
    CHECK(r.out.find("eval") != std::string::npos);
}

TEST_CASE("parse errors exit 1") {
    testutil::TempDir tmp("lte_cli");
    CHECK(run_cli(tmp, "").exit_code == 1);                    // missing subcommand
    CHECK(run_cli(tmp, "frobnicate").exit_code == 1);          // unknown subcommand
    CHECK(run_cli(tmp, "synth --bogus 1 --seed 0 --out " + tmp.file("x.csv")).exit_code ==
          1);                                                  // unknown flag
    CHECK(run_cli(tmp, "synth --out " + tmp.file("x.csv")).exit_code == 1); // missing --seed
    CHECK(run_cli(tmp, "run --config nope.ini").exit_code == 1);            // missing --seed
}

TEST_CASE("synth output matches the library call byte for byte") {
    testutil::TempDir tmp("lte_cli");
    const CliResult r = run_cli(
        tmp, "synth --classes 4 --features 6 --depth 2 --snippets 4 --segments 2 --seed 9 "
             "--out " + tmp.file("cli.csv") + " --tree-out " + tmp.file("cli_tree.json"));
    REQUIRE(r.exit_code == 0);

    const std::string lib_path = make_cli_dataset(tmp, "lib.csv", 9);
    CHECK(slurp(tmp.file("cli.csv")) == slurp(lib_path));

    const Dataset loaded = load_dataset(tmp.file("cli.csv"));
    CHECK(loaded.num_classes == 4);
    CHECK(loaded.snippets.size() == 16);
    const LabelTree planted = load_label_tree(tmp.file("cli_tree.json"));
    CHECK(planted.num_classes() == 4);
    CHECK(planted.num_splits() == 3);
}

TEST_CASE("tree build writes a loadable tree and show prints it") {
    testutil::TempDir tmp("lte_cli");
    const std::string data = make_cli_dataset(tmp, "data.csv", 11);

    const CliResult build =
        run_cli(tmp, "tree build --data " + data + " --seed 5 --trees 15 --out " +
                         tmp.file("tree.json"));
    REQUIRE(build.exit_code == 0);
    const LabelTree tree = load_label_tree(tmp.file("tree.json"));
    CHECK(tree.num_classes() == 4);

    const CliResult show = run_cli(tmp, "tree show --tree " + tmp.file("tree.json"));
    CHECK(show.exit_code == 0);
    CHECK(show.out == tree.to_text());
    CHECK(show.out.find("c1") != std::string::npos);
}

TEST_CASE("lte train, embed, gram, svm train, predict, eval chain") {
    testutil::TempDir tmp("lte_cli");
    const std::string data = make_cli_dataset(tmp, "data.csv", 13);

    REQUIRE(run_cli(tmp, "tree build --data " + data + " --seed 5 --trees 15 --out " +
                             tmp.file("tree.json"))
                .exit_code == 0);
    REQUIRE(run_cli(tmp, "lte train --data " + data + " --tree " + tmp.file("tree.json") +
                             " --seed 7 --trees 15 --out " + tmp.file("model.json"))
                .exit_code == 0);

    // In-sample embedding via the model, out-of-fold via the tree.
    REQUIRE(run_cli(tmp, "lte embed --data " + data + " --model " + tmp.file("model.json") +
                             " --out " + tmp.file("emb.csv"))
                .exit_code == 0);
    REQUIRE(run_cli(tmp, "lte embed --data " + data + " --tree " + tmp.file("tree.json") +
                             " --seed 7 --folds 2 --trees 15 --out " + tmp.file("oof.csv"))
                .exit_code == 0);
    const EmbeddedDataset emb = load_embeddings(tmp.file("emb.csv"));
    CHECK(emb.rows.size() == 16);
    CHECK(emb.rows[0].values.size() == 6); // 2 * (4 - 1)

    // --model and --tree are mutually exclusive.
    CHECK(run_cli(tmp, "lte embed --data " + data + " --model " + tmp.file("model.json") +
                           " --tree " + tmp.file("tree.json") + " --seed 1 --out " +
                           tmp.file("bad.csv"))
              .exit_code == 1);

    REQUIRE(run_cli(tmp, "gram --data " + tmp.file("emb.csv") +
                             " --kernel chi2 --out " + tmp.file("gram.csv"))
                .exit_code == 0);
    CHECK(slurp(tmp.file("gram.csv")).find("id,") == 0);

    REQUIRE(run_cli(tmp, "svm train --data " + tmp.file("oof.csv") +
                             " --kernel chi2 --c 10 --out " + tmp.file("svm.json"))
                .exit_code == 0);
    REQUIRE(run_cli(tmp, "svm predict --model " + tmp.file("svm.json") + " --data " +
                             tmp.file("emb.csv") + " --out " + tmp.file("pred.csv"))
                .exit_code == 0);
    const std::string pred = slurp(tmp.file("pred.csv"));
    CHECK(pred.find("snippet_id,label\n") == 0);
    CHECK(pred.find("c1_s1,") != std::string::npos);

    const CliResult eval =
        run_cli(tmp, "eval --truth " + data + " --pred " + tmp.file("pred.csv") +
                         " --out " + tmp.file("metrics.json"));
    CHECK(eval.exit_code == 0);
    CHECK(eval.out.find("Acc.") != std::string::npos);
    CHECK(slurp(tmp.file("metrics.json")).find("\"accuracy\"") != std::string::npos);
}

TEST_CASE("validation failures exit 2 with the cause on stderr") {
    testutil::TempDir tmp("lte_cli");
    const std::string data = make_cli_dataset(tmp, "data.csv", 17);

    // More categories requested than the aux dataset has.
    const CliResult r = run_cli(tmp, "closeness --data " + data + " --aux-data " + data +
                                         " --top-n 99 --seed 3 --trees 15 --out " +
                                         tmp.file("close.json"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("exceeds category count") != std::string::npos);

    const CliResult missing =
        run_cli(tmp, "run --config " + tmp.file("nosuch.ini") + " --seed 1 --out " +
                         tmp.file("out"));
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("error:") != std::string::npos);
}

TEST_CASE("closeness on the scene's own classes puts each class nearest itself") {
    testutil::TempDir tmp("lte_cli");
    const std::string data = make_cli_dataset(tmp, "data.csv", 19);
    const CliResult r = run_cli(tmp, "closeness --data " + data + " --aux-data " + data +
                                         " --top-n 1 --seed 3 --trees 25 --out " +
                                         tmp.file("close.json"));
    REQUIRE(r.exit_code == 0);
    // Output lines read "<scene>: <top category> (<kappa>)".
    for (const char* name : {"c1", "c2", "c3", "c4"}) {
        const std::string line = std::string(name) + ": " + name + " (";
        CHECK(r.out.find(line) != std::string::npos);
    }
}

TEST_CASE("eval scores toy files and reports accuracy") {
    testutil::TempDir tmp("lte_cli");
    std::ofstream(tmp.file("truth.csv")) << "snippet_id,label\na,x\nb,x\nc,y\nd,y\n";
    std::ofstream(tmp.file("pred.csv")) << "snippet_id,label\na,x\nb,y\nc,y\nd,y\n";
    const CliResult r =
        run_cli(tmp, "eval --truth " + tmp.file("truth.csv") + " --pred " + tmp.file("pred.csv"));
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("Acc. 0.750") != std::string::npos);
}

TEST_CASE("run executes a config end to end and prints the metrics table") {
    testutil::TempDir tmp("lte_cli");
    SynthConfig sc;
    sc.num_classes = 4;
    sc.feature_dim = 6;
    sc.depth = 2;
    sc.sigma = 0.5;
    sc.snippets_per_class = 8;
    sc.segments_per_snippet = 2;
    sc.seed = 23;
    const SynthData synth = synth_hierarchy_dataset(sc);
    auto [train, test] = stratified_split(synth.dataset, 0.5, 4);
    save_dataset(train, tmp.file("train.csv"));
    save_dataset(test, tmp.file("test.csv"));
    std::ofstream(tmp.file("run.ini"))
        << "[channels]\nlist = main\n\n[channel:main]\nkind = scene\ntrain = train.csv\n"
           "test = test.csv\n\n[forest]\nnum_trees = 15\n\n[embedding]\nfolds = 2\n\n"
           "[svm]\nkernel = chi2\nc_grid = 1, 10\nfolds = 2\ntol = 0.001\n";

    const CliResult r = run_cli(tmp, "run --config " + tmp.file("run.ini") + " --seed 6 --out " +
                                         tmp.file("out"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("Acc.") != std::string::npos);
    CHECK(std::filesystem::exists(std::filesystem::path(tmp.file("out")) / "manifest.json"));
}
