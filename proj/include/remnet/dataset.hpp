#pragma once
// Synthetic camera-signature dataset: procedural scenes pushed through a
// per-model acquisition pipeline (CFA mosaic -> model demosaic -> device PRNU
// -> signal-dependent noise -> in-camera JPEG), plus the device- and
// scene-exclusive split builder.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "remnet/image.hpp"
#include "remnet/rng.hpp"

namespace remnet::data {

// Full-scale reference protocol sizes (desk-scale runs use DatasetSpec).
constexpr int kFullScaleModels = 18;
constexpr int kFullScaleTrainImages = 7938;
constexpr int kFullScaleValImages = 1353;
constexpr int kFullScaleTestImages = 540;
constexpr int kFullScaleClustersPerImage = 20;
constexpr int kFullScaleBalancedTrainClustersPerClass = 158760;
constexpr int kFullScaleBalancedValClustersPerClass = 27060;

struct SyntheticCameraModel {
    std::string model_id;
    int cfa_pattern = 0;          // 0 RGGB, 1 BGGR, 2 GRBG, 3 GBRG
    double sharpen_strength = 0;  // model-specific demosaic post filter
    int jpeg_quality = 95;        // in-camera quality
    double noise_gain = 0.005;    // signal-dependent noise scale
};

struct SyntheticDevice {
    std::string device_id;
    std::string model_id;
    std::uint64_t prnu_seed = 0;
};

constexpr double kPrnuAmplitude = 0.02;

struct ManifestEntry {
    std::string model_id;
    std::string device_id;
    std::string scene_id;
    std::string path;  // relative to the dataset root
};

struct SplitManifest {
    std::vector<ManifestEntry> train, val, test;

    // Throws when a test device or test scene leaks into train/val, or when
    // a model lacks a held-out device.
    void validate() const;
    std::vector<std::string> model_ids() const;  // sorted, all splits

    nlohmann::json to_json() const;
    static SplitManifest from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static SplitManifest load(const std::string& path);
};

struct DatasetSpec {
    int models = 4;
    int devices_per_model = 3;
    int scenes = 30;
    int images_per_scene = 1;
    int scene_size = 512;
    int val_scenes = 3;
    int test_scenes = 3;
    std::uint64_t seed = 1;

    nlohmann::json to_json() const;
    static DatasetSpec from_json(const nlohmann::json& j);
};

// Deterministic procedural content keyed by (scene_id, size) only.
img::ImageBuffer generate_scene(const std::string& scene_id, int size);

std::vector<SyntheticCameraModel> make_models(int count, std::uint64_t seed);
std::vector<SyntheticDevice> make_devices(const std::vector<SyntheticCameraModel>& models,
                                          int devices_per_model, std::uint64_t seed);

// Per-device multiplicative sensor pattern, elementwise within
// [-kPrnuAmplitude, kPrnuAmplitude].
std::vector<double> prnu_pattern(const SyntheticDevice& device, int width, int height);

img::ImageBuffer capture(const img::ImageBuffer& scene, const SyntheticCameraModel& model,
                         const SyntheticDevice& device, Rng& rng);

SplitManifest build_splits(const DatasetSpec& spec);

// Writes images, manifest.json and dataset_meta.json under root.
// Regeneration from the same spec is byte-identical.
void generate_dataset(const DatasetSpec& spec, const std::string& root);

// Equal-count per-class subsample (seeded); returns selected indices in
// ascending order. Throws if any class in [0, num_classes) is empty.
std::vector<std::size_t> balance_classes(const std::vector<int>& class_of, int num_classes,
                                         Rng& rng);

// Sanity oracle: nearest-centroid classification of high-pass residual
// statistics, trained on `train`, scored on `test`. Returns accuracy.
double nearest_centroid_accuracy(const std::string& root, const SplitManifest& manifest);

}  // namespace remnet::data
