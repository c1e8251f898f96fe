// CLI surface tests: exit-code contract, config/flag precedence, replayable
// outputs. Commands are driven through run_cli exactly as main() does.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "remnet/cli_commands.hpp"
#include "remnet/config.hpp"
#include "remnet/dataset.hpp"
#include "test_support.hpp"

using namespace remnet;
namespace fs = std::filesystem;

namespace {

int run(std::initializer_list<std::string> args) {
    return remnet::cli::run_cli(std::vector<std::string>(args));
}

std::string file_bytes(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// Shared tiny dataset generated through the CLI itself.
const std::string& cli_dataset() {
    static const std::string root = [] {
        const std::string dir = test_support::scratch_dir("cli_dataset");
        REQUIRE(run({"gen", "--out", dir, "--seed", "21", "--models", "2",
                     "--devices-per-model", "2", "--scenes", "6", "--val-scenes", "1",
                     "--test-scenes", "1"}) == 0);
        return dir;
    }();
    return root;
}

}  // namespace

TEST_CASE("gen refuses to overwrite without --force and is seed-deterministic") {
    const std::string& root = cli_dataset();
    CHECK(fs::exists(fs::path(root) / "manifest.json"));
    CHECK(fs::exists(fs::path(root) / "dataset_meta.json"));
    CHECK(fs::exists(fs::path(root) / "run_config.txt"));

    // Existing dataset without --force: refusal with the usage exit code.
    CHECK(run({"gen", "--out", root, "--seed", "21", "--models", "2", "--devices-per-model",
               "2", "--scenes", "6", "--val-scenes", "1", "--test-scenes", "1"}) == 1);

    // --force overwrites; same seed gives identical bytes.
    const std::string before = file_bytes(fs::path(root) / "manifest.json");
    const data::SplitManifest manifest =
        data::SplitManifest::load(root + "/manifest.json");
    const std::string image_before = file_bytes(fs::path(root) / manifest.train[0].path);
    CHECK(run({"gen", "--out", root, "--seed", "21", "--models", "2", "--devices-per-model",
               "2", "--scenes", "6", "--val-scenes", "1", "--test-scenes", "1", "--force"}) == 0);
    CHECK(file_bytes(fs::path(root) / "manifest.json") == before);
    CHECK(file_bytes(fs::path(root) / manifest.train[0].path) == image_before);
}

TEST_CASE("unknown flags and missing required options exit with code 1") {
    CHECK(run({"gen", "--no-such-flag"}) == 1);
    CHECK(run({"train"}) == 1);          // missing --data/--out
    CHECK(run({"eval", "--data", "x"}) == 1);
    CHECK(run({"predict"}) == 1);
    CHECK(run({"bogus-command"}) == 1);
}

TEST_CASE("train, eval, and predict run end to end with stable artifacts") {
    const std::string& root = cli_dataset();
    const std::string out = test_support::scratch_dir("cli_train");

    REQUIRE(run({"train", "--data", root, "--out", out, "--task", "cmi", "--epochs", "2",
                 "--width-scale", "0.015625", "--batch-size", "32", "--seed", "5"}) == 0);
    CHECK(fs::exists(fs::path(out) / "checkpoint.rmck"));
    CHECK(fs::exists(fs::path(out) / "training_log.csv"));
    CHECK(fs::exists(fs::path(out) / "run_config.txt"));

    const std::string eval_out = test_support::scratch_dir("cli_eval");
    REQUIRE(run({"eval", "--data", root, "--checkpoint", out + "/checkpoint.rmck", "--out",
                 eval_out, "--split", "test"}) == 0);
    CHECK(fs::exists(fs::path(eval_out) / "report.json"));
    CHECK(fs::exists(fs::path(eval_out) / "report.csv"));

    // Manipulated evaluation applies the 12-entry test policy.
    const std::string eval_manip = test_support::scratch_dir("cli_eval_manip");
    REQUIRE(run({"eval", "--data", root, "--checkpoint", out + "/checkpoint.rmck", "--out",
                 eval_manip, "--split", "test", "--manipulate", "test"}) == 0);
    std::ifstream csv(eval_manip + "/report.csv");
    int rows = 0;
    std::string line;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 14);  // header + 12 factors + overall

    // Prediction is deterministic and delegates to the voting pipeline.
    const data::SplitManifest manifest = data::SplitManifest::load(root + "/manifest.json");
    const std::string image = root + "/" + manifest.test[0].path;
    const std::string pred_a = test_support::scratch_dir("cli_pred_a");
    const std::string pred_b = test_support::scratch_dir("cli_pred_b");
    REQUIRE(run({"predict", "--checkpoint", out + "/checkpoint.rmck", "--image", image,
                 "--json", pred_a + "/verdict.json"}) == 0);
    REQUIRE(run({"predict", "--checkpoint", out + "/checkpoint.rmck", "--image", image,
                 "--json", pred_b + "/verdict.json"}) == 0);
    CHECK(file_bytes(pred_a + "/verdict.json") == file_bytes(pred_b + "/verdict.json"));
}

TEST_CASE("loss-variant flags reach the training configuration") {
    const std::string& root = cli_dataset();

    // Ablation: no auxiliary residual loss.
    const std::string out_none = test_support::scratch_dir("cli_lw0");
    REQUIRE(run({"train", "--data", root, "--out", out_none, "--epochs", "1", "--width-scale",
                 "0.015625", "--batch-size", "32", "--loss-weight", "0"}) == 0);
    const auto kv_none = cli::load_key_values(out_none + "/run_config.txt");
    CHECK(kv_none.at("loss_weight") == "0");

    // L1 variant.
    const std::string out_l1 = test_support::scratch_dir("cli_l1");
    REQUIRE(run({"train", "--data", root, "--out", out_l1, "--epochs", "1", "--width-scale",
                 "0.015625", "--batch-size", "32", "--residual-loss", "l1"}) == 0);
    const auto kv_l1 = cli::load_key_values(out_l1 + "/run_config.txt");
    CHECK(kv_l1.at("residual_loss") == "l1");
}

TEST_CASE("config files supply defaults and flags override them") {
    const std::string dir = test_support::scratch_dir("cli_config");
    const std::string cfg_path = dir + "/run.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "# generation defaults\n";
        cfg << "seed=77\n";
        cfg << "models=2\n";
        cfg << "devices_per_model=2\n";
        cfg << "scenes=6\n";
        cfg << "val_scenes=1\n";
        cfg << "test_scenes=1\n";
    }

    const std::string out_a = dir + "/ds_a";
    REQUIRE(run({"gen", "--config", cfg_path, "--out", out_a}) == 0);
    const auto kv = cli::load_key_values(out_a + "/run_config.txt");
    CHECK(kv.at("seed") == "77");
    CHECK(kv.at("models") == "2");

    // A flag beats the file value.
    const std::string out_b = dir + "/ds_b";
    REQUIRE(run({"gen", "--config", cfg_path, "--out", out_b, "--seed", "78"}) == 0);
    CHECK(cli::load_key_values(out_b + "/run_config.txt").at("seed") == "78");

    // Same config, same seed -> identical dataset bytes.
    const std::string out_c = dir + "/ds_c";
    REQUIRE(run({"gen", "--config", cfg_path, "--out", out_c}) == 0);
    CHECK(file_bytes(out_a + "/manifest.json") == file_bytes(out_c + "/manifest.json"));
    const data::SplitManifest manifest = data::SplitManifest::load(out_a + "/manifest.json");
    CHECK(file_bytes(fs::path(out_a) / manifest.train[0].path) ==
          file_bytes(fs::path(out_c) / manifest.train[0].path));
}

TEST_CASE("runtime failures exit with code 2 and leave no partial JSON") {
    const std::string& root = cli_dataset();
    const std::string out = test_support::scratch_dir("cli_fail");

    // Train a throwaway checkpoint to drive predict.
    REQUIRE(run({"train", "--data", root, "--out", out, "--epochs", "1", "--width-scale",
                 "0.015625", "--batch-size", "32"}) == 0);

    const std::string bad_image = out + "/not_an_image.jpg";
    {
        std::ofstream os(bad_image);
        os << "this is not an image";
    }
    const std::string sidecar = out + "/verdict.json";
    CHECK(run({"predict", "--checkpoint", out + "/checkpoint.rmck", "--image", bad_image,
               "--json", sidecar}) == 2);
    CHECK_FALSE(fs::exists(sidecar));

    // Missing checkpoint file is a runtime failure as well.
    CHECK(run({"predict", "--checkpoint", out + "/nope.rmck", "--image", bad_image}) == 2);
}

TEST_CASE("key=value parser accepts comments and rejects malformed lines") {
    const std::string dir = test_support::scratch_dir("cli_kv");
    {
        std::ofstream os(dir + "/good.cfg");
        os << "# comment\n\n  key = some value  \nnum=3\n";
    }
    const auto kv = cli::load_key_values(dir + "/good.cfg");
    CHECK(kv.at("key") == "some value");
    CHECK(kv.at("num") == "3");

    {
        std::ofstream os(dir + "/bad.cfg");
        os << "not a key value line\n";
    }
    CHECK_THROWS_AS(cli::load_key_values(dir + "/bad.cfg"), std::runtime_error);
}
