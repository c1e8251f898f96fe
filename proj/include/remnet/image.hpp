#pragma once
// Image buffers, manipulation transforms, the cluster quality metric, and
// cluster/patch extraction. Pixels are interleaved RGB doubles in [0,1];
// every transform preserves that range.

#include <cmath>
#include <string>
#include <vector>

#include "remnet/rng.hpp"
#include "remnet/tensor.hpp"

namespace remnet::img {

constexpr int kClusterSize = 256;
constexpr int kPatchSize = 64;
constexpr int kPatchesPerClusterSide = kClusterSize / kPatchSize;

enum class ManipKind { Unaltered, Jpeg, Resize, Gamma };

const char* to_string(ManipKind kind);
ManipKind manip_kind_from_string(const std::string& s);
constexpr int kManipClassCount = 4;

struct ManipulationTag {
    ManipKind kind = ManipKind::Unaltered;
    double factor = 0.0;  // JPEG quality in (0,100], resize scale, or gamma

    // Filename suffix: "" (unaltered), "_j70", "_r1.5", "_g0.8".
    std::string suffix() const;
};

struct Provenance {
    std::string model_id;
    std::string device_id;
    std::string scene_id;
    ManipulationTag manipulation;
};

struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  // height*width*3
    Provenance provenance;

    ImageBuffer() = default;
    ImageBuffer(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {}

    double& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    double at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

// out = in^gamma per channel; gamma must be positive.
ImageBuffer gamma_correct(const ImageBuffer& img, double gamma);
// Bilinear resample; output dims = round(dim * scale).
ImageBuffer resize(const ImageBuffer& img, double scale);
// Baseline JPEG encode/decode round trip at the given quality (1..100).
ImageBuffer jpeg_cycle(const ImageBuffer& img, int quality);

struct Cluster {
    int offset_x = 0;
    int offset_y = 0;
    double quality = 0.0;
    std::vector<double> pixels;  // kClusterSize^2 * 3
};

struct Patch {
    int offset_x = 0;  // within the parent cluster
    int offset_y = 0;
    std::vector<double> pixels;  // kPatchSize^2 * 3
};

struct QualityParams {
    double alpha = 0.7;
    double beta = 4.0;
    double gamma = std::log(0.01);
};

// Q = (1/3) sum_c [ alpha*beta*(mu_c - mu_c^2) + (1-alpha)*(1 - e^{gamma*sigma_c}) ]
// over interleaved RGB pixels; sigma is the population standard deviation.
double quality_score_rgb(const double* pixels, std::size_t pixel_count,
                         const QualityParams& params = {});
double quality_score(const Cluster& cluster, const QualityParams& params = {});

// Tiles the image on a non-overlapping 256-stride grid, scores every tile and
// returns the top k by quality (ties broken by row-major position). Throws if
// the image cannot fit a single tile.
std::vector<Cluster> extract_clusters(const ImageBuffer& img, int k = 20,
                                      const QualityParams& params = {});

// Training path: uniformly random top-left corner in [0, 192]^2.
Patch sample_patch(const Cluster& cluster, Rng& rng);
// Inference path: the 4x4 grid of disjoint patches.
std::vector<Patch> tile_patches(const Cluster& cluster);

struct PolicyEntry {
    ManipKind kind;
    double factor;
};

// {JPEG 70,80,90; resize 0.5,0.8,1.5,2.0; gamma 0.8,1.2}
const std::vector<PolicyEntry>& train_policy();
// {gamma 0.5,0.75,1.25,1.5; JPEG 95,90,85,80; resize 0.8,0.9,1.1,1.2}
const std::vector<PolicyEntry>& test_policy();
const std::vector<PolicyEntry>& policy_by_name(const std::string& name);  // "train"/"test"

ImageBuffer apply_manipulation(const ImageBuffer& img, const PolicyEntry& entry);
// One output per policy entry, each tagged with the applied manipulation.
std::vector<ImageBuffer> augment_image(const ImageBuffer& img,
                                       const std::vector<PolicyEntry>& policy);

// Network input tensor [n, 64, 64, 3] from patches.
Tensor patches_to_tensor(const std::vector<Patch>& patches);

}  // namespace remnet::img
