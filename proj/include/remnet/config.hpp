#pragma once
// Flat key=value run configuration. A config file supplies defaults; command
// line flags win. Every command writes its resolved configuration (plus the
// seed) into the output directory so a run can be replayed exactly.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace remnet::cli {

// '#' comments and blank lines are ignored; values keep internal whitespace.
std::map<std::string, std::string> load_key_values(const std::string& path);
void save_key_values(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& entries);

struct RunOptions {
    std::string command;
    std::string config_file;
    std::string data_root;
    std::string out_dir;
    std::string checkpoint;
    std::string image_path;
    std::string json_out;
    std::string clusters_file;
    std::string split = "test";
    std::string manipulate = "none";  // none | train | test
    std::string task = "cmi";
    std::string residual_loss = "l2";
    std::uint64_t seed = 1;
    int workers = 0;  // 0 = all available cores
    bool force = false;
    bool augment_train = false;

    // datasetgen
    int models = 4;
    int devices_per_model = 3;
    int scenes = 30;
    int images_per_scene = 1;
    int scene_size = 512;
    int val_scenes = 3;
    int test_scenes = 3;

    // training
    int batch_size = 64;
    double initial_lr = 1e-3;
    int max_epochs = 70;
    int plateau_patience = 3;
    double plateau_factor = 0.5;
    double loss_weight = 0.5;
    double width_scale = 1.0;
    int clusters_per_image = 20;
    int val_cluster_cap = 0;

    std::vector<std::pair<std::string, std::string>> resolved() const;
};

}  // namespace remnet::cli
