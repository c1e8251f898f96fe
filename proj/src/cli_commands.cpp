#include "remnet/cli_commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "remnet/config.hpp"
#include "remnet/dataset.hpp"
#include "remnet/image_io.hpp"
#include "remnet/pipeline.hpp"

namespace remnet::cli {

namespace fs = std::filesystem;

namespace {

// Usage/config problems detected after argument parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void apply_workers(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

void write_resolved_config(const RunOptions& opt) {
    if (opt.out_dir.empty()) return;
    fs::create_directories(opt.out_dir);
    save_key_values((fs::path(opt.out_dir) / "run_config.txt").string(), opt.resolved());
}

pipeline::TrainConfig to_train_config(const RunOptions& opt) {
    pipeline::TrainConfig cfg;
    cfg.task = pipeline::task_from_string(opt.task);
    cfg.batch_size = opt.batch_size;
    cfg.initial_lr = opt.initial_lr;
    cfg.max_epochs = opt.max_epochs;
    cfg.plateau_patience = opt.plateau_patience;
    cfg.plateau_factor = opt.plateau_factor;
    cfg.loss_weight = opt.loss_weight;
    cfg.residual_loss = net::residual_kind_from_string(opt.residual_loss);
    cfg.width_scale = opt.width_scale;
    cfg.seed = opt.seed;
    cfg.augment_train = opt.augment_train || opt.manipulate == "train";
    cfg.clusters_per_image = opt.clusters_per_image;
    cfg.val_cluster_cap = opt.val_cluster_cap;
    return cfg;
}

data::DatasetSpec to_dataset_spec(const RunOptions& opt) {
    data::DatasetSpec spec;
    spec.models = opt.models;
    spec.devices_per_model = opt.devices_per_model;
    spec.scenes = opt.scenes;
    spec.images_per_scene = opt.images_per_scene;
    spec.scene_size = opt.scene_size;
    spec.val_scenes = opt.val_scenes;
    spec.test_scenes = opt.test_scenes;
    spec.seed = opt.seed;
    return spec;
}

const std::vector<data::ManifestEntry>& select_split(const data::SplitManifest& manifest,
                                                     const std::string& name) {
    if (name == "train") return manifest.train;
    if (name == "val") return manifest.val;
    if (name == "test") return manifest.test;
    throw UsageError("unknown split: " + name);
}

int cmd_gen(const RunOptions& opt) {
    if (opt.out_dir.empty()) throw UsageError("gen: --out is required");
    const fs::path manifest_path = fs::path(opt.out_dir) / "manifest.json";
    if (fs::exists(manifest_path) && !opt.force) {
        throw UsageError("gen: dataset already exists at " + opt.out_dir +
                         " (use --force to overwrite)");
    }
    write_resolved_config(opt);
    data::generate_dataset(to_dataset_spec(opt), opt.out_dir);
    const data::SplitManifest manifest = data::SplitManifest::load(manifest_path.string());
    std::cout << "generated dataset at " << opt.out_dir << ": " << manifest.train.size()
              << " train / " << manifest.val.size() << " val / " << manifest.test.size()
              << " test images\n";
    return 0;
}

int cmd_augment(const RunOptions& opt) {
    if (opt.data_root.empty()) throw UsageError("augment: --data is required");
    write_resolved_config(opt);
    const std::string policy_name = opt.manipulate == "none" ? "train" : opt.manipulate;
    const auto& policy = img::policy_by_name(policy_name);
    const data::SplitManifest manifest =
        data::SplitManifest::load(opt.data_root + "/manifest.json");
    const auto& split = select_split(manifest, opt.split);

    int written = 0;
    for (const data::ManifestEntry& entry : split) {
        const img::ImageBuffer base = img::read_image(opt.data_root + "/" + entry.path);
        const fs::path path(opt.data_root + "/" + entry.path);
        for (const img::PolicyEntry& p : policy) {
            const img::ImageBuffer variant = img::apply_manipulation(base, p);
            const std::string suffix = variant.provenance.manipulation.suffix();
            if (p.kind == img::ManipKind::Jpeg) {
                fs::path out = path.parent_path() / (path.stem().string() + suffix + ".jpg");
                img::write_jpeg(out.string(), base, static_cast<int>(p.factor));
            } else {
                fs::path out = path.parent_path() / (path.stem().string() + suffix + ".png");
                img::write_png(out.string(), variant);
            }
            ++written;
        }
    }
    std::cout << "wrote " << written << " augmented images (" << policy_name << " policy, "
              << opt.split << " split)\n";
    return 0;
}

int cmd_extract(const RunOptions& opt) {
    if (opt.data_root.empty()) throw UsageError("extract: --data is required");
    if (opt.clusters_file.empty()) throw UsageError("extract: --clusters output path is required");
    write_resolved_config(opt);
    const data::SplitManifest manifest =
        data::SplitManifest::load(opt.data_root + "/manifest.json");
    const auto& split = select_split(manifest, opt.split);
    const pipeline::Task task = pipeline::task_from_string(opt.task);

    std::vector<std::string> class_names;
    if (task == pipeline::Task::Cmi) {
        class_names = manifest.model_ids();
    } else {
        for (int k = 0; k < img::kManipClassCount; ++k) {
            class_names.push_back(img::to_string(static_cast<img::ManipKind>(k)));
        }
    }
    const bool augment =
        opt.augment_train || opt.manipulate == "train" || task == pipeline::Task::Manipulation;
    const bool balance = task == pipeline::Task::Manipulation;
    const pipeline::ClusterSet set = pipeline::build_cluster_set(
        opt.data_root, split, task, class_names, augment, opt.clusters_per_image, balance,
        derive_seed(opt.seed, "extract/" + opt.split), 0);
    pipeline::save_cluster_set(opt.clusters_file, set);
    std::cout << "extracted " << set.records.size() << " clusters to " << opt.clusters_file
              << "\n";
    return 0;
}

int cmd_train(const RunOptions& opt) {
    if (opt.data_root.empty()) throw UsageError("train: --data is required");
    if (opt.out_dir.empty()) throw UsageError("train: --out is required");
    write_resolved_config(opt);
    const data::SplitManifest manifest =
        data::SplitManifest::load(opt.data_root + "/manifest.json");
    manifest.validate();
    const pipeline::TrainConfig cfg = to_train_config(opt);
    const pipeline::TrainResult result =
        pipeline::train(opt.data_root, manifest, cfg, opt.out_dir);
    std::cout << "best epoch " << result.best_epoch << " (val xent "
              << result.best_val_xent << "), checkpoint: " << result.checkpoint_path << "\n";
    return 0;
}

int cmd_eval(const RunOptions& opt) {
    if (opt.data_root.empty()) throw UsageError("eval: --data is required");
    if (opt.checkpoint.empty()) throw UsageError("eval: --checkpoint is required");
    if (opt.out_dir.empty()) throw UsageError("eval: --out is required");
    write_resolved_config(opt);

    const data::SplitManifest manifest =
        data::SplitManifest::load(opt.data_root + "/manifest.json");
    const auto& split = select_split(manifest, opt.split);
    if (split.empty()) throw UsageError("eval: split '" + opt.split + "' is empty");

    nlohmann::json meta;
    net::Network network = pipeline::load_network(opt.checkpoint, &meta);
    const pipeline::Task task = pipeline::task_from_string(meta.at("task").get<std::string>());
    const auto class_names = meta.at("class_names").get<std::vector<std::string>>();

    const std::vector<img::PolicyEntry>* policy = nullptr;
    if (opt.manipulate != "none") policy = &img::policy_by_name(opt.manipulate);

    const pipeline::PredictionReport report = pipeline::evaluate(
        network, opt.data_root, split, task, class_names, policy, opt.clusters_per_image);
    report.save_json((fs::path(opt.out_dir) / "report.json").string());
    report.save_csv((fs::path(opt.out_dir) / "report.csv").string());
    std::printf("%s split accuracy: %.4f (%d/%d images)\n", opt.split.c_str(), report.accuracy,
                report.correct, report.total);
    return 0;
}

int cmd_predict(const RunOptions& opt) {
    if (opt.checkpoint.empty()) throw UsageError("predict: --checkpoint is required");
    if (opt.image_path.empty()) throw UsageError("predict: --image is required");
    write_resolved_config(opt);

    nlohmann::json meta;
    net::Network network = pipeline::load_network(opt.checkpoint, &meta);
    const auto class_names = meta.at("class_names").get<std::vector<std::string>>();

    const img::ImageBuffer image = img::read_image(opt.image_path);
    if (image.width < img::kClusterSize || image.height < img::kClusterSize) {
        throw std::runtime_error("predict: image is smaller than one 256x256 cluster");
    }
    const pipeline::ImagePrediction pred =
        pipeline::predict_image(network, image, opt.clusters_per_image);

    double confidence = 0.0;
    for (const pipeline::ClusterPrediction& c : pred.clusters) {
        confidence += c.probs[pred.verdict];
    }
    confidence /= static_cast<double>(pred.clusters.size());

    std::printf("verdict: %s (confidence %.4f over %zu clusters)\n",
                class_names[pred.verdict].c_str(), confidence, pred.clusters.size());
    for (const pipeline::ClusterPrediction& c : pred.clusters) {
        std::printf("  cluster (%4d,%4d): %s p=%.4f\n", c.offset_x, c.offset_y,
                    class_names[c.label].c_str(), c.probs[c.label]);
    }

    if (!opt.json_out.empty()) {
        nlohmann::json j;
        j["image"] = opt.image_path;
        j["verdict"] = class_names[pred.verdict];
        j["confidence"] = confidence;
        nlohmann::json clusters = nlohmann::json::array();
        for (const pipeline::ClusterPrediction& c : pred.clusters) {
            clusters.push_back({{"offset_x", c.offset_x},
                                {"offset_y", c.offset_y},
                                {"label", class_names[c.label]},
                                {"probs", c.probs}});
        }
        j["clusters"] = clusters;
        std::ofstream os(opt.json_out, std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + opt.json_out);
        os << j.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    RunOptions opt;

    CLI::App app{"remnant-network camera model identification and manipulation detection"};
    app.require_subcommand(1);

    // Shared flags registered on every subcommand.
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config_file, "flat key=value config file");
        cmd->add_option("--seed", opt.seed, "master seed");
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_option("--workers", opt.workers, "worker threads (0 = all cores)");
        cmd->add_option("--data", opt.data_root, "dataset root directory");
        cmd->add_option("--task", opt.task, "cmi | manipulation")
            ->check(CLI::IsMember({"cmi", "manipulation"}));
        cmd->add_option("--loss-weight", opt.loss_weight, "residual loss weight");
        cmd->add_option("--residual-loss", opt.residual_loss, "l2 | l1 | none")
            ->check(CLI::IsMember({"l2", "l1", "none"}));
        cmd->add_option("--manipulate", opt.manipulate, "none | train | test policy")
            ->check(CLI::IsMember({"none", "train", "test"}));
        cmd->add_option("--split", opt.split, "train | val | test")
            ->check(CLI::IsMember({"train", "val", "test"}));
        cmd->add_option("--clusters-per-image", opt.clusters_per_image,
                        "clusters extracted per image");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    add_common(gen);
    gen->add_flag("--force", opt.force, "overwrite an existing dataset");
    gen->add_option("--models", opt.models, "camera model count");
    gen->add_option("--devices-per-model", opt.devices_per_model, "devices per model");
    gen->add_option("--scenes", opt.scenes, "scene count");
    gen->add_option("--images-per-scene", opt.images_per_scene, "captures per (device,scene)");
    gen->add_option("--scene-size", opt.scene_size, "scene edge length in pixels");
    gen->add_option("--val-scenes", opt.val_scenes, "validation scene count");
    gen->add_option("--test-scenes", opt.test_scenes, "held-out test scene count");

    CLI::App* augment = app.add_subcommand("augment", "write manipulated image variants");
    add_common(augment);

    CLI::App* extract = app.add_subcommand("extract", "materialize a cluster set file");
    add_common(extract);
    extract->add_option("--clusters", opt.clusters_file, "cluster set output path");
    extract->add_flag("--augment", opt.augment_train, "apply the training policy");

    CLI::App* train = app.add_subcommand("train", "train a network");
    add_common(train);
    train->add_option("--batch-size", opt.batch_size, "training batch size");
    train->add_option("--lr", opt.initial_lr, "initial learning rate");
    train->add_option("--epochs", opt.max_epochs, "maximum epochs");
    train->add_option("--patience", opt.plateau_patience, "plateau patience (epochs)");
    train->add_option("--factor", opt.plateau_factor, "plateau decay factor");
    train->add_option("--width-scale", opt.width_scale, "filter width scale (0,1]");
    train->add_option("--val-cap", opt.val_cluster_cap, "per-class validation cluster cap");
    train->add_flag("--augment", opt.augment_train, "apply the training policy to the pool");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    add_common(eval);
    eval->add_option("--checkpoint", opt.checkpoint, "checkpoint path");

    CLI::App* predict = app.add_subcommand("predict", "predict a single image");
    add_common(predict);
    predict->add_option("--checkpoint", opt.checkpoint, "checkpoint path");
    predict->add_option("--image", opt.image_path, "image path (PNG or JPEG)");
    predict->add_option("--json", opt.json_out, "write a JSON sidecar report");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::cout << app.help();
            return 0;
        }
        std::cerr << e.what() << "\n";
        return 1;
    }

    CLI::App* active = app.get_subcommands().front();
    opt.command = active->get_name();

    try {
        // Config file values apply only where the command line stayed silent.
        if (!opt.config_file.empty()) {
            const auto kv = load_key_values(opt.config_file);
            auto want = [&](const char* flag, const char* key) {
                return kv.count(key) != 0 && active->count(flag) == 0;
            };
            if (want("--seed", "seed")) opt.seed = std::stoull(kv.at("seed"));
            if (want("--data", "data")) opt.data_root = kv.at("data");
            if (want("--out", "out")) opt.out_dir = kv.at("out");
            if (want("--task", "task")) opt.task = kv.at("task");
            if (want("--workers", "workers")) opt.workers = std::stoi(kv.at("workers"));
            if (want("--split", "split")) opt.split = kv.at("split");
            if (want("--manipulate", "manipulate")) opt.manipulate = kv.at("manipulate");
            if (want("--loss-weight", "loss_weight")) opt.loss_weight = std::stod(kv.at("loss_weight"));
            if (want("--residual-loss", "residual_loss")) opt.residual_loss = kv.at("residual_loss");
            if (want("--clusters-per-image", "clusters_per_image")) {
                opt.clusters_per_image = std::stoi(kv.at("clusters_per_image"));
            }
            if (opt.command == "gen") {
                if (want("--models", "models")) opt.models = std::stoi(kv.at("models"));
                if (want("--devices-per-model", "devices_per_model")) {
                    opt.devices_per_model = std::stoi(kv.at("devices_per_model"));
                }
                if (want("--scenes", "scenes")) opt.scenes = std::stoi(kv.at("scenes"));
                if (want("--images-per-scene", "images_per_scene")) {
                    opt.images_per_scene = std::stoi(kv.at("images_per_scene"));
                }
                if (want("--scene-size", "scene_size")) opt.scene_size = std::stoi(kv.at("scene_size"));
                if (want("--val-scenes", "val_scenes")) opt.val_scenes = std::stoi(kv.at("val_scenes"));
                if (want("--test-scenes", "test_scenes")) opt.test_scenes = std::stoi(kv.at("test_scenes"));
            }
            if (opt.command == "train") {
                if (want("--batch-size", "batch_size")) opt.batch_size = std::stoi(kv.at("batch_size"));
                if (want("--lr", "initial_lr")) opt.initial_lr = std::stod(kv.at("initial_lr"));
                if (want("--epochs", "max_epochs")) opt.max_epochs = std::stoi(kv.at("max_epochs"));
                if (want("--patience", "plateau_patience")) {
                    opt.plateau_patience = std::stoi(kv.at("plateau_patience"));
                }
                if (want("--factor", "plateau_factor")) {
                    opt.plateau_factor = std::stod(kv.at("plateau_factor"));
                }
                if (want("--width-scale", "width_scale")) {
                    opt.width_scale = std::stod(kv.at("width_scale"));
                }
                if (want("--val-cap", "val_cluster_cap")) {
                    opt.val_cluster_cap = std::stoi(kv.at("val_cluster_cap"));
                }
                if (want("--augment", "augment_train")) {
                    opt.augment_train = kv.at("augment_train") == "1" ||
                                        kv.at("augment_train") == "true";
                }
            }
        }

        apply_workers(opt.workers);

        if (opt.command == "gen") return cmd_gen(opt);
        if (opt.command == "augment") return cmd_augment(opt);
        if (opt.command == "extract") return cmd_extract(opt);
        if (opt.command == "train") return cmd_train(opt);
        if (opt.command == "eval") return cmd_eval(opt);
        if (opt.command == "predict") return cmd_predict(opt);
        throw UsageError("unknown command: " + opt.command);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace remnet::cli
