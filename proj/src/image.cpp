#include "remnet/image.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "remnet/image_io.hpp"
#include "remnet/kernels.hpp"

namespace remnet::img {

const char* to_string(ManipKind kind) {
    switch (kind) {
        case ManipKind::Unaltered: return "unaltered";
        case ManipKind::Jpeg: return "jpeg";
        case ManipKind::Resize: return "resize";
        case ManipKind::Gamma: return "gamma";
    }
    return "unaltered";
}

ManipKind manip_kind_from_string(const std::string& s) {
    if (s == "unaltered") return ManipKind::Unaltered;
    if (s == "jpeg") return ManipKind::Jpeg;
    if (s == "resize") return ManipKind::Resize;
    if (s == "gamma") return ManipKind::Gamma;
    throw std::invalid_argument("unknown manipulation kind: " + s);
}

namespace {

std::string trim_factor(double factor) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", factor);
    return buf;
}

}  // namespace

std::string ManipulationTag::suffix() const {
    switch (kind) {
        case ManipKind::Unaltered: return "";
        case ManipKind::Jpeg: return "_j" + trim_factor(factor);
        case ManipKind::Resize: return "_r" + trim_factor(factor);
        case ManipKind::Gamma: return "_g" + trim_factor(factor);
    }
    return "";
}

ImageBuffer gamma_correct(const ImageBuffer& img, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("gamma_correct: gamma must be positive");
    ImageBuffer out = img;
    for (double& v : out.pixels) v = std::pow(v, gamma);
    out.provenance.manipulation = {ManipKind::Gamma, gamma};
    return out;
}

ImageBuffer resize(const ImageBuffer& img, double scale) {
    if (scale <= 0.0) throw std::invalid_argument("resize: scale must be positive");
    const int out_w = std::max(1, static_cast<int>(std::lround(img.width * scale)));
    const int out_h = std::max(1, static_cast<int>(std::lround(img.height * scale)));
    ImageBuffer out(out_w, out_h);
    out.provenance = img.provenance;
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
                const double bot = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
                out.at(y, x, c) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    out.provenance.manipulation = {ManipKind::Resize, scale};
    return out;
}

ImageBuffer jpeg_cycle(const ImageBuffer& img, int quality) {
    if (quality < 1 || quality > 100) {
        throw std::invalid_argument("jpeg_cycle: quality must be in [1,100]");
    }
    const std::vector<unsigned char> encoded = encode_jpeg(img, quality);
    ImageBuffer out = decode_jpeg(encoded.data(), encoded.size());
    out.provenance = img.provenance;
    out.provenance.manipulation = {ManipKind::Jpeg, static_cast<double>(quality)};
    return out;
}

double quality_score_rgb(const double* pixels, std::size_t pixel_count,
                         const QualityParams& params) {
    double q = 0.0;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i < pixel_count; ++i) {
            const double v = pixels[i * 3 + c];
            sum += v;
            sum_sq += v * v;
        }
        const double mu = sum / static_cast<double>(pixel_count);
        const double var = std::max(sum_sq / static_cast<double>(pixel_count) - mu * mu, 0.0);
        const double sigma = std::sqrt(var);
        q += params.alpha * params.beta * (mu - mu * mu) +
             (1.0 - params.alpha) * (1.0 - std::exp(params.gamma * sigma));
    }
    return q / 3.0;
}

double quality_score(const Cluster& cluster, const QualityParams& params) {
    return quality_score_rgb(cluster.pixels.data(),
                             static_cast<std::size_t>(kClusterSize) * kClusterSize, params);
}

std::vector<Cluster> extract_clusters(const ImageBuffer& img, int k, const QualityParams& params) {
    const int ny = img.height / kClusterSize;
    const int nx = img.width / kClusterSize;
    if (ny == 0 || nx == 0) {
        throw std::invalid_argument("extract_clusters: image smaller than one cluster");
    }
    std::vector<Cluster> tiles;
    tiles.reserve(static_cast<std::size_t>(ny) * nx);
    for (int ty = 0; ty < ny; ++ty) {
        for (int tx = 0; tx < nx; ++tx) {
            Cluster c;
            c.offset_x = tx * kClusterSize;
            c.offset_y = ty * kClusterSize;
            c.pixels.resize(static_cast<std::size_t>(kClusterSize) * kClusterSize * 3);
            for (int y = 0; y < kClusterSize; ++y) {
                const double* src = &img.pixels[((static_cast<std::size_t>(c.offset_y) + y) *
                                                     img.width +
                                                 c.offset_x) *
                                                3];
                std::copy(src, src + static_cast<std::size_t>(kClusterSize) * 3,
                          c.pixels.begin() + static_cast<std::size_t>(y) * kClusterSize * 3);
            }
            c.quality = quality_score(c, params);
            tiles.push_back(std::move(c));
        }
    }
    // Stable: equal scores keep row-major order.
    std::stable_sort(tiles.begin(), tiles.end(),
                     [](const Cluster& a, const Cluster& b) { return a.quality > b.quality; });
    if (static_cast<int>(tiles.size()) > k) tiles.resize(k);
    return tiles;
}

Patch sample_patch(const Cluster& cluster, Rng& rng) {
    const int max_off = kClusterSize - kPatchSize;
    Patch p;
    p.offset_x = static_cast<int>(rng.next_int(0, max_off));
    p.offset_y = static_cast<int>(rng.next_int(0, max_off));
    p.pixels.resize(static_cast<std::size_t>(kPatchSize) * kPatchSize * 3);
    for (int y = 0; y < kPatchSize; ++y) {
        const double* src = &cluster.pixels[((static_cast<std::size_t>(p.offset_y) + y) *
                                                 kClusterSize +
                                             p.offset_x) *
                                            3];
        std::copy(src, src + static_cast<std::size_t>(kPatchSize) * 3,
                  p.pixels.begin() + static_cast<std::size_t>(y) * kPatchSize * 3);
    }
    return p;
}

std::vector<Patch> tile_patches(const Cluster& cluster) {
    std::vector<Patch> patches;
    patches.reserve(kPatchesPerClusterSide * kPatchesPerClusterSide);
    for (int ty = 0; ty < kPatchesPerClusterSide; ++ty) {
        for (int tx = 0; tx < kPatchesPerClusterSide; ++tx) {
            Patch p;
            p.offset_x = tx * kPatchSize;
            p.offset_y = ty * kPatchSize;
            p.pixels.resize(static_cast<std::size_t>(kPatchSize) * kPatchSize * 3);
            for (int y = 0; y < kPatchSize; ++y) {
                const double* src = &cluster.pixels[((static_cast<std::size_t>(p.offset_y) + y) *
                                                         kClusterSize +
                                                     p.offset_x) *
                                                    3];
                std::copy(src, src + static_cast<std::size_t>(kPatchSize) * 3,
                          p.pixels.begin() + static_cast<std::size_t>(y) * kPatchSize * 3);
            }
            patches.push_back(std::move(p));
        }
    }
    return patches;
}

const std::vector<PolicyEntry>& train_policy() {
    static const std::vector<PolicyEntry> policy = {
        {ManipKind::Jpeg, 70},   {ManipKind::Jpeg, 80},   {ManipKind::Jpeg, 90},
        {ManipKind::Resize, 0.5}, {ManipKind::Resize, 0.8}, {ManipKind::Resize, 1.5},
        {ManipKind::Resize, 2.0}, {ManipKind::Gamma, 0.8}, {ManipKind::Gamma, 1.2},
    };
    return policy;
}

const std::vector<PolicyEntry>& test_policy() {
    static const std::vector<PolicyEntry> policy = {
        {ManipKind::Gamma, 0.5},  {ManipKind::Gamma, 0.75}, {ManipKind::Gamma, 1.25},
        {ManipKind::Gamma, 1.5},  {ManipKind::Jpeg, 95},    {ManipKind::Jpeg, 90},
        {ManipKind::Jpeg, 85},    {ManipKind::Jpeg, 80},    {ManipKind::Resize, 0.8},
        {ManipKind::Resize, 0.9}, {ManipKind::Resize, 1.1}, {ManipKind::Resize, 1.2},
    };
    return policy;
}

const std::vector<PolicyEntry>& policy_by_name(const std::string& name) {
    if (name == "train") return train_policy();
    if (name == "test") return test_policy();
    throw std::invalid_argument("unknown policy: " + name);
}

ImageBuffer apply_manipulation(const ImageBuffer& img, const PolicyEntry& entry) {
    switch (entry.kind) {
        case ManipKind::Jpeg: return jpeg_cycle(img, static_cast<int>(entry.factor));
        case ManipKind::Resize: return resize(img, entry.factor);
        case ManipKind::Gamma: return gamma_correct(img, entry.factor);
        case ManipKind::Unaltered: return img;
    }
    return img;
}

std::vector<ImageBuffer> augment_image(const ImageBuffer& img,
                                       const std::vector<PolicyEntry>& policy) {
    std::vector<ImageBuffer> out;
    out.reserve(policy.size());
    for (const PolicyEntry& entry : policy) {
        out.push_back(apply_manipulation(img, entry));
    }
    return out;
}

Tensor patches_to_tensor(const std::vector<Patch>& patches) {
    const std::int64_t n = static_cast<std::int64_t>(patches.size());
    Tensor t({n, kPatchSize, kPatchSize, 3});
    const std::size_t per = static_cast<std::size_t>(kPatchSize) * kPatchSize * 3;
    for (std::size_t i = 0; i < patches.size(); ++i) {
        std::copy(patches[i].pixels.begin(), patches[i].pixels.end(), t.data() + i * per);
    }
    return t;
}

}  // namespace remnet::img
