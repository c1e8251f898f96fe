#pragma once
// Training loop, two-level voting inference, and evaluation reports for the
// camera-model and manipulation-detection tasks.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "remnet/dataset.hpp"
#include "remnet/image.hpp"
#include "remnet/model.hpp"

namespace remnet::pipeline {

enum class Task { Cmi, Manipulation };
const char* to_string(Task task);
Task task_from_string(const std::string& s);

struct TrainConfig {
    Task task = Task::Cmi;
    int batch_size = 64;
    double initial_lr = 1e-3;
    int max_epochs = 70;
    int plateau_patience = 3;
    double plateau_factor = 0.5;
    double loss_weight = 0.5;
    net::ResidualLossKind residual_loss = net::ResidualLossKind::L2;
    double width_scale = 1.0;
    std::uint64_t seed = 1;
    // Applies the 9-entry training policy to the pool. Implied for the
    // manipulation task (the class labels come from the applied transform).
    bool augment_train = false;
    int clusters_per_image = 20;
    // Per-class cap on validation clusters (0 = unlimited), seeded subsample.
    int val_cluster_cap = 0;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// A materialized network-ready cluster: 8-bit pixels (file semantics) plus
// label and provenance.
struct ClusterRecord {
    std::vector<std::uint8_t> pixels;  // 256*256*3
    int label = 0;
    img::Provenance provenance;
    int offset_x = 0;
    int offset_y = 0;
};

struct ClusterSet {
    Task task = Task::Cmi;
    std::vector<std::string> class_names;
    std::vector<ClusterRecord> records;
};

ClusterSet build_cluster_set(const std::string& data_root,
                             const std::vector<data::ManifestEntry>& entries, Task task,
                             const std::vector<std::string>& class_names, bool augment,
                             int clusters_per_image, bool balance, std::uint64_t balance_seed,
                             int per_class_cap);

void save_cluster_set(const std::string& path, const ClusterSet& set);
ClusterSet load_cluster_set(const std::string& path);

img::Cluster record_to_cluster(const ClusterRecord& record);

struct EpochLog {
    int epoch = 0;
    double learning_rate = 0.0;
    double train_residual = 0.0;
    double train_xent = 0.0;
    double train_total = 0.0;
    double val_xent = 0.0;
    bool saved_checkpoint = false;
};

struct TrainResult {
    std::string checkpoint_path;
    int best_epoch = -1;
    double best_val_xent = 0.0;
    std::vector<EpochLog> log;
    std::vector<std::string> class_names;
};

// Trains on manifest.train, validates on manifest.val; keeps the checkpoint
// with the lowest validation crossentropy and writes training_log.csv.
// Throws on a non-finite loss after dumping the offending batch.
TrainResult train(const std::string& data_root, const data::SplitManifest& manifest,
                  const TrainConfig& cfg, const std::string& out_dir);

// Rebuilds a network from a checkpoint; returns the stored metadata.
net::Network load_network(const std::string& checkpoint_path, nlohmann::json* metadata = nullptr);

struct ClusterPrediction {
    std::vector<double> probs;
    int label = 0;
    int offset_x = 0;
    int offset_y = 0;
};

// First index attaining the maximum (argmax ties resolve to the lowest).
int argmax_lowest(const std::vector<double>& values);

// Averages the class probabilities of the 16 tiled patches; ties in the
// argmax resolve to the lowest class index.
ClusterPrediction predict_cluster(net::Network& network, const img::Cluster& cluster);

// Modal label over the image's clusters; ties break by the class's summed
// probability over all clusters, then by lowest class index.
int majority_vote(const std::vector<int>& labels, const std::vector<std::vector<double>>& probs,
                  int num_classes);

struct ImagePrediction {
    int verdict = 0;
    std::vector<ClusterPrediction> clusters;
};

ImagePrediction predict_image(net::Network& network, const img::ImageBuffer& image,
                              int clusters_per_image = 20);

struct FactorAccuracy {
    img::ManipKind kind = img::ManipKind::Unaltered;
    double factor = 0.0;
    int images = 0;
    int correct = 0;
};

struct ImageRecord {
    std::string path;
    img::ManipKind applied_kind = img::ManipKind::Unaltered;
    double applied_factor = 0.0;
    int truth = 0;
    int verdict = 0;
    std::vector<int> cluster_labels;
    std::vector<std::vector<double>> cluster_probs;
};

struct PredictionReport {
    Task task = Task::Cmi;
    std::vector<std::string> class_names;
    std::vector<std::vector<int>> confusion;  // [truth][verdict]
    int total = 0;
    int correct = 0;
    double accuracy = 0.0;
    std::vector<FactorAccuracy> per_factor;
    std::vector<ImageRecord> images;

    nlohmann::json to_json() const;
    void save_json(const std::string& path) const;
    void save_csv(const std::string& path) const;
};

// policy == nullptr evaluates the unaltered split. With a policy, the
// manipulation task also scores the unaltered original of every image (it is
// one of the four classes); the camera task scores policy variants only.
PredictionReport evaluate(net::Network& network, const std::string& data_root,
                          const std::vector<data::ManifestEntry>& split, Task task,
                          const std::vector<std::string>& class_names,
                          const std::vector<img::PolicyEntry>* policy, int clusters_per_image = 20);

}  // namespace remnet::pipeline
