#include "remnet/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "remnet/image_io.hpp"

namespace remnet::data {

namespace fs = std::filesystem;

namespace {

// CFA channel at (y, x) for the four Bayer arrangements.
int cfa_channel(int pattern, int y, int x) {
    static constexpr int kPatterns[4][2][2] = {
        {{0, 1}, {1, 2}},  // RGGB
        {{2, 1}, {1, 0}},  // BGGR
        {{1, 0}, {2, 1}},  // GRBG
        {{1, 2}, {0, 1}},  // GBRG
    };
    return kPatterns[pattern][y & 1][x & 1];
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// One bilinear value-noise octave added into a single-channel plane.
void add_value_noise(std::vector<double>& plane, int size, int cell, double amplitude, Rng& rng) {
    const int nodes = size / cell + 2;
    std::vector<double> lattice(static_cast<std::size_t>(nodes) * nodes);
    for (double& v : lattice) v = rng.next_double() * 2.0 - 1.0;
    for (int y = 0; y < size; ++y) {
        const double fy = static_cast<double>(y) / cell;
        const int y0 = static_cast<int>(fy);
        const double wy = fy - y0;
        for (int x = 0; x < size; ++x) {
            const double fx = static_cast<double>(x) / cell;
            const int x0 = static_cast<int>(fx);
            const double wx = fx - x0;
            const double* row0 = &lattice[static_cast<std::size_t>(y0) * nodes + x0];
            const double* row1 = row0 + nodes;
            const double top = row0[0] * (1.0 - wx) + row0[1] * wx;
            const double bot = row1[0] * (1.0 - wx) + row1[1] * wx;
            plane[static_cast<std::size_t>(y) * size + x] +=
                amplitude * (top * (1.0 - wy) + bot * wy);
        }
    }
}

// 3x3 box blur with clamped borders, per channel.
img::ImageBuffer box3(const img::ImageBuffer& img) {
    img::ImageBuffer out(img.width, img.height);
    out.provenance = img.provenance;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = std::clamp(y + dy, 0, img.height - 1);
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = std::clamp(x + dx, 0, img.width - 1);
                        acc += img.at(yy, xx, c);
                    }
                }
                out.at(y, x, c) = acc / 9.0;
            }
        }
    }
    return out;
}

}  // namespace

img::ImageBuffer generate_scene(const std::string& scene_id, int size) {
    if (size < 1) throw std::invalid_argument("generate_scene: size must be positive");
    Rng rng(mix_seed(hash_str(scene_id) ^ static_cast<std::uint64_t>(size)));

    // Shared luminance octaves plus weaker per-channel chroma octaves.
    std::vector<double> luma(static_cast<std::size_t>(size) * size, 0.0);
    add_value_noise(luma, size, std::max(size / 4, 2), 0.28, rng);
    add_value_noise(luma, size, std::max(size / 16, 2), 0.18, rng);
    add_value_noise(luma, size, std::max(size / 64, 2), 0.10, rng);

    img::ImageBuffer img(size, size);
    std::array<std::vector<double>, 3> chroma;
    // Chroma varies slowly, as in photographic content; fine detail lives in
    // the shared luma octaves.
    for (int c = 0; c < 3; ++c) {
        chroma[c].assign(static_cast<std::size_t>(size) * size, 0.0);
        add_value_noise(chroma[c], size, std::max(size / 4, 2), 0.10, rng);
        add_value_noise(chroma[c], size, std::max(size / 8, 2), 0.05, rng);
    }
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double l = luma[static_cast<std::size_t>(y) * size + x];
            for (int c = 0; c < 3; ++c) {
                img.at(y, x, c) = 0.5 + l + chroma[c][static_cast<std::size_t>(y) * size + x];
            }
        }
    }

    // Random solid shapes (rectangles and ellipses) blended on top.
    const int shapes = static_cast<int>(rng.next_int(8, 14));
    for (int s = 0; s < shapes; ++s) {
        const bool ellipse = rng.next_double() < 0.5;
        const double cx = rng.next_double() * size;
        const double cy = rng.next_double() * size;
        const double rx = (0.04 + 0.18 * rng.next_double()) * size;
        const double ry = (0.04 + 0.18 * rng.next_double()) * size;
        double color[3];
        for (double& c : color) c = rng.next_double();
        const double alpha = 0.35 + 0.4 * rng.next_double();
        const int x0 = std::max(0, static_cast<int>(cx - rx));
        const int x1 = std::min(size - 1, static_cast<int>(cx + rx));
        const int y0 = std::max(0, static_cast<int>(cy - ry));
        const int y1 = std::min(size - 1, static_cast<int>(cy + ry));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (ellipse) {
                    const double dx = (x - cx) / rx;
                    const double dy = (y - cy) / ry;
                    if (dx * dx + dy * dy > 1.0) continue;
                }
                for (int c = 0; c < 3; ++c) {
                    img.at(y, x, c) = (1.0 - alpha) * img.at(y, x, c) + alpha * color[c];
                }
            }
        }
    }

    // Fine per-pixel texture so flat regions still carry gradient energy.
    // Shared across channels: photographic fine detail is luma-dominated and
    // chroma subsampling must not erase it.
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double grain = 0.02 * (rng.next_double() * 2.0 - 1.0);
            for (int c = 0; c < 3; ++c) {
                img.at(y, x, c) = std::clamp(img.at(y, x, c) + grain, 0.02, 0.98);
            }
        }
    }
    img.provenance.scene_id = scene_id;
    return img;
}

std::vector<SyntheticCameraModel> make_models(int count, std::uint64_t seed) {
    (void)seed;  // signature parameters are a fixed design table
    static constexpr int kQualities[4] = {85, 90, 95, 98};
    static constexpr double kNoise[4] = {0.012, 0.009, 0.006, 0.003};
    std::vector<SyntheticCameraModel> models;
    models.reserve(count);
    for (int i = 0; i < count; ++i) {
        SyntheticCameraModel m;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "cam%02d", i);
        m.model_id = buf;
        m.cfa_pattern = i % 4;
        // Strictly increasing in i so any two models differ even when the
        // cyclic components collide.
        m.sharpen_strength = 0.3 * (i % 5) + 0.015 * i;
        m.jpeg_quality = kQualities[i % 4];
        m.noise_gain = kNoise[i % 4] + 0.0002 * (i / 4);
        models.push_back(std::move(m));
    }
    return models;
}

std::vector<SyntheticDevice> make_devices(const std::vector<SyntheticCameraModel>& models,
                                          int devices_per_model, std::uint64_t seed) {
    std::vector<SyntheticDevice> devices;
    devices.reserve(models.size() * static_cast<std::size_t>(devices_per_model));
    for (const SyntheticCameraModel& m : models) {
        for (int d = 0; d < devices_per_model; ++d) {
            SyntheticDevice dev;
            dev.device_id = "d" + std::to_string(d);
            dev.model_id = m.model_id;
            dev.prnu_seed = derive_seed(seed, "prnu/" + m.model_id + "/" + dev.device_id);
            devices.push_back(std::move(dev));
        }
    }
    return devices;
}

std::vector<double> prnu_pattern(const SyntheticDevice& device, int width, int height) {
    Rng rng(device.prnu_seed);
    std::vector<double> pattern(static_cast<std::size_t>(width) * height);
    for (double& v : pattern) v = kPrnuAmplitude * (rng.next_double() * 2.0 - 1.0);
    return pattern;
}

namespace {

// Acquisition pipeline up to (excluding) the in-camera JPEG.
img::ImageBuffer capture_sensor(const img::ImageBuffer& scene, const SyntheticCameraModel& model,
                                const SyntheticDevice& device, Rng& rng) {
    const int w = scene.width;
    const int h = scene.height;

    // Mosaic: keep the CFA-selected channel per site, then reconstruct each
    // channel by normalized convolution of its sparse samples.
    static constexpr double kKernG[3][3] = {{0, 0.25, 0}, {0.25, 1, 0.25}, {0, 0.25, 0}};
    static constexpr double kKernRB[3][3] = {
        {0.25, 0.5, 0.25}, {0.5, 1, 0.5}, {0.25, 0.5, 0.25}};

    img::ImageBuffer out(w, h);
    out.provenance = scene.provenance;
    for (int c = 0; c < 3; ++c) {
        const auto& kern = (c == 1) ? kKernG : kKernRB;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double num = 0.0, den = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= h) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = x + dx;
                        if (xx < 0 || xx >= w) continue;
                        if (cfa_channel(model.cfa_pattern, yy, xx) != c) continue;
                        const double kv = kern[dy + 1][dx + 1];
                        num += kv * scene.at(yy, xx, c);
                        den += kv;
                    }
                }
                out.at(y, x, c) = den > 0.0 ? num / den : 0.0;
            }
        }
    }

    // Model-specific unsharp filter on the demosaiced image.
    if (model.sharpen_strength > 0.0) {
        const img::ImageBuffer blurred = box3(out);
        for (std::size_t i = 0; i < out.pixels.size(); ++i) {
            out.pixels[i] =
                clamp01(out.pixels[i] + model.sharpen_strength * (out.pixels[i] - blurred.pixels[i]));
        }
    }

    // Device PRNU (per-pixel multiplicative gain, shared across channels).
    const std::vector<double> prnu = prnu_pattern(device, w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gain = 1.0 + prnu[static_cast<std::size_t>(y) * w + x];
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = clamp01(out.at(y, x, c) * gain);
        }
    }

    // Signal-dependent sensor noise.
    for (double& v : out.pixels) {
        v = clamp01(v + model.noise_gain * std::sqrt(v + 0.01) * rng.next_gaussian());
    }
    return out;
}

}  // namespace

img::ImageBuffer capture(const img::ImageBuffer& scene, const SyntheticCameraModel& model,
                         const SyntheticDevice& device, Rng& rng) {
    img::ImageBuffer sensor = capture_sensor(scene, model, device, rng);
    // In-camera JPEG.
    img::ImageBuffer jpeg = img::jpeg_cycle(sensor, model.jpeg_quality);
    jpeg.provenance = scene.provenance;
    jpeg.provenance.model_id = model.model_id;
    jpeg.provenance.device_id = device.device_id;
    jpeg.provenance.manipulation = {img::ManipKind::Unaltered, 0.0};
    return jpeg;
}

void SplitManifest::validate() const {
    std::set<std::string> test_devices, test_scenes;
    std::set<std::string> models_seen;
    for (const ManifestEntry& e : test) {
        test_devices.insert(e.model_id + "/" + e.device_id);
        test_scenes.insert(e.scene_id);
        models_seen.insert(e.model_id);
    }
    auto check = [&](const std::vector<ManifestEntry>& split, const char* name) {
        for (const ManifestEntry& e : split) {
            if (test_devices.count(e.model_id + "/" + e.device_id) != 0) {
                throw std::runtime_error(std::string("split leakage: test device ") + e.model_id +
                                         "/" + e.device_id + " appears in " + name);
            }
            if (test_scenes.count(e.scene_id) != 0) {
                throw std::runtime_error(std::string("split leakage: test scene ") + e.scene_id +
                                         " appears in " + name);
            }
        }
    };
    check(train, "train");
    check(val, "val");

    // Every model present in train must also have a held-out test device.
    std::map<std::string, std::set<std::string>> devices_by_model;
    for (const ManifestEntry& e : train) devices_by_model[e.model_id].insert(e.device_id);
    for (const auto& [model, devices] : devices_by_model) {
        if (models_seen.count(model) == 0) {
            throw std::runtime_error("split: model " + model + " has no held-out test device");
        }
        (void)devices;
    }
}

std::vector<std::string> SplitManifest::model_ids() const {
    std::set<std::string> ids;
    for (const auto* split : {&train, &val, &test}) {
        for (const ManifestEntry& e : *split) ids.insert(e.model_id);
    }
    return {ids.begin(), ids.end()};
}

namespace {

nlohmann::json entries_to_json(const std::vector<ManifestEntry>& entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ManifestEntry& e : entries) {
        arr.push_back({{"model_id", e.model_id},
                       {"device_id", e.device_id},
                       {"scene_id", e.scene_id},
                       {"path", e.path}});
    }
    return arr;
}

std::vector<ManifestEntry> entries_from_json(const nlohmann::json& arr) {
    std::vector<ManifestEntry> out;
    for (const auto& j : arr) {
        out.push_back({j.at("model_id").get<std::string>(), j.at("device_id").get<std::string>(),
                       j.at("scene_id").get<std::string>(), j.at("path").get<std::string>()});
    }
    return out;
}

}  // namespace

nlohmann::json SplitManifest::to_json() const {
    return {{"train", entries_to_json(train)},
            {"val", entries_to_json(val)},
            {"test", entries_to_json(test)}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
    SplitManifest m;
    m.train = entries_from_json(j.at("train"));
    m.val = entries_from_json(j.at("val"));
    m.test = entries_from_json(j.at("test"));
    return m;
}

void SplitManifest::save(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write manifest: " + path);
    os << to_json().dump(2) << "\n";
}

SplitManifest SplitManifest::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read manifest: " + path);
    nlohmann::json j;
    is >> j;
    return from_json(j);
}

nlohmann::json DatasetSpec::to_json() const {
    return {{"models", models},
            {"devices_per_model", devices_per_model},
            {"scenes", scenes},
            {"images_per_scene", images_per_scene},
            {"scene_size", scene_size},
            {"val_scenes", val_scenes},
            {"test_scenes", test_scenes},
            {"seed", seed}};
}

DatasetSpec DatasetSpec::from_json(const nlohmann::json& j) {
    DatasetSpec s;
    s.models = j.at("models").get<int>();
    s.devices_per_model = j.at("devices_per_model").get<int>();
    s.scenes = j.at("scenes").get<int>();
    s.images_per_scene = j.at("images_per_scene").get<int>();
    s.scene_size = j.at("scene_size").get<int>();
    s.val_scenes = j.at("val_scenes").get<int>();
    s.test_scenes = j.at("test_scenes").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

SplitManifest build_splits(const DatasetSpec& spec) {
    if (spec.devices_per_model < 2) {
        throw std::invalid_argument("build_splits: need >= 2 devices per model to hold one out");
    }
    if (spec.test_scenes + spec.val_scenes >= spec.scenes) {
        throw std::invalid_argument("build_splits: not enough scenes for disjoint test scenes");
    }

    std::vector<std::string> scene_ids;
    for (int s = 0; s < spec.scenes; ++s) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "scene%03d", s);
        scene_ids.push_back(buf);
    }
    // Seeded scene shuffle: first test, then val, rest train.
    Rng scene_rng(derive_seed(spec.seed, "scene-split"));
    for (std::size_t i = scene_ids.size(); i > 1; --i) {
        std::swap(scene_ids[i - 1],
                  scene_ids[static_cast<std::size_t>(scene_rng.next_int(0, i - 1))]);
    }
    const std::vector<std::string> test_scenes(scene_ids.begin(),
                                               scene_ids.begin() + spec.test_scenes);
    const std::vector<std::string> val_scenes(scene_ids.begin() + spec.test_scenes,
                                              scene_ids.begin() + spec.test_scenes + spec.val_scenes);
    const std::vector<std::string> train_scenes(
        scene_ids.begin() + spec.test_scenes + spec.val_scenes, scene_ids.end());

    const auto models = make_models(spec.models, spec.seed);
    Rng holdout_rng(derive_seed(spec.seed, "device-holdout"));

    SplitManifest manifest;
    for (const SyntheticCameraModel& m : models) {
        const int held_out =
            static_cast<int>(holdout_rng.next_int(0, spec.devices_per_model - 1));
        auto add_entries = [&](const std::vector<std::string>& scenes, int device,
                               std::vector<ManifestEntry>& out) {
            const std::string device_id = "d" + std::to_string(device);
            for (const std::string& scene : scenes) {
                for (int i = 0; i < spec.images_per_scene; ++i) {
                    ManifestEntry e;
                    e.model_id = m.model_id;
                    e.device_id = device_id;
                    e.scene_id = scene;
                    e.path = m.model_id + "/" + device_id + "/" + scene + "/img" +
                             std::to_string(i) + ".jpg";
                    out.push_back(std::move(e));
                }
            }
        };
        for (int d = 0; d < spec.devices_per_model; ++d) {
            if (d == held_out) continue;
            add_entries(train_scenes, d, manifest.train);
            add_entries(val_scenes, d, manifest.val);
        }
        add_entries(test_scenes, held_out, manifest.test);
    }
    manifest.validate();
    return manifest;
}

void generate_dataset(const DatasetSpec& spec, const std::string& root) {
    const SplitManifest manifest = build_splits(spec);
    const auto models = make_models(spec.models, spec.seed);
    const auto devices = make_devices(models, spec.devices_per_model, spec.seed);

    std::map<std::string, const SyntheticCameraModel*> model_by_id;
    for (const auto& m : models) model_by_id[m.model_id] = &m;
    std::map<std::string, const SyntheticDevice*> device_by_id;
    for (const auto& d : devices) device_by_id[d.model_id + "/" + d.device_id] = &d;

    std::vector<const ManifestEntry*> entries;
    for (const auto* split : {&manifest.train, &manifest.val, &manifest.test}) {
        for (const ManifestEntry& e : *split) entries.push_back(&e);
    }

    // Scenes are shared across captures; build each once.
    std::map<std::string, img::ImageBuffer> scenes;
    for (const ManifestEntry* e : entries) {
        if (scenes.count(e->scene_id) == 0) {
            scenes.emplace(e->scene_id, generate_scene(e->scene_id, spec.scene_size));
        }
    }

    for (const ManifestEntry* e : entries) {
        fs::create_directories(fs::path(root) / fs::path(e->path).parent_path());
    }

    const int n = static_cast<int>(entries.size());
    std::string error;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        try {
            const ManifestEntry& e = *entries[i];
            const SyntheticCameraModel& model = *model_by_id.at(e.model_id);
            const SyntheticDevice& device = *device_by_id.at(e.model_id + "/" + e.device_id);
            Rng rng(derive_seed(spec.seed, "capture/" + e.path));
            // The file on disk IS the in-camera JPEG; reading it back gives
            // exactly what capture() produces in memory.
            img::ImageBuffer sensor = capture_sensor(scenes.at(e.scene_id), model, device, rng);
            img::write_jpeg(root + "/" + e.path, sensor, model.jpeg_quality);
        } catch (const std::exception& ex) {
#pragma omp critical
            if (error.empty()) error = ex.what();
        }
    }
    if (!error.empty()) throw std::runtime_error("generate_dataset: " + error);

    manifest.save(root + "/manifest.json");

    nlohmann::json meta;
    meta["spec"] = spec.to_json();
    meta["codec"] = img::jpeg_codec_version();
    meta["prnu_amplitude"] = kPrnuAmplitude;
    nlohmann::json jmodels = nlohmann::json::array();
    for (const auto& m : models) {
        jmodels.push_back({{"model_id", m.model_id},
                           {"cfa_pattern", m.cfa_pattern},
                           {"sharpen_strength", m.sharpen_strength},
                           {"jpeg_quality", m.jpeg_quality},
                           {"noise_gain", m.noise_gain}});
    }
    meta["models"] = jmodels;
    std::ofstream os(root + "/dataset_meta.json", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write dataset_meta.json");
    os << meta.dump(2) << "\n";
}

std::vector<std::size_t> balance_classes(const std::vector<int>& class_of, int num_classes,
                                         Rng& rng) {
    std::vector<std::vector<std::size_t>> per_class(num_classes);
    for (std::size_t i = 0; i < class_of.size(); ++i) {
        const int c = class_of[i];
        if (c < 0 || c >= num_classes) throw std::out_of_range("balance_classes: bad class index");
        per_class[c].push_back(i);
    }
    std::size_t min_count = SIZE_MAX;
    for (int c = 0; c < num_classes; ++c) {
        if (per_class[c].empty()) {
            throw std::runtime_error("balance_classes: class " + std::to_string(c) + " is empty");
        }
        min_count = std::min(min_count, per_class[c].size());
    }
    std::vector<std::size_t> selected;
    for (int c = 0; c < num_classes; ++c) {
        auto& idx = per_class[c];
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.next_int(0, i - 1))]);
        }
        selected.insert(selected.end(), idx.begin(), idx.begin() + min_count);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

double nearest_centroid_accuracy(const std::string& root, const SplitManifest& manifest) {
    const std::vector<std::string> models = manifest.model_ids();
    std::map<std::string, int> model_index;
    for (std::size_t i = 0; i < models.size(); ++i) model_index[models[i]] = static_cast<int>(i);

    // Features: per-channel high-pass residual energy, CFA-phase energy split,
    // and 8-grid blockiness ratio.
    auto features = [](const img::ImageBuffer& img) {
        std::vector<double> f;
        img::ImageBuffer blurred = box3(img);
        for (int c = 0; c < 3; ++c) {
            double energy = 0.0;
            double phase[4] = {0, 0, 0, 0};
            std::size_t count[4] = {0, 0, 0, 0};
            for (int y = 0; y < img.height; ++y) {
                for (int x = 0; x < img.width; ++x) {
                    const double r = img.at(y, x, c) - blurred.at(y, x, c);
                    energy += r * r;
                    const int ph = (y & 1) * 2 + (x & 1);
                    phase[ph] += std::fabs(r);
                    ++count[ph];
                }
            }
            f.push_back(std::sqrt(energy / (static_cast<double>(img.width) * img.height)));
            for (int ph = 0; ph < 4; ++ph) f.push_back(phase[ph] / static_cast<double>(count[ph]));

            double at_block = 0.0, off_block = 0.0;
            std::size_t nb = 0, no = 0;
            for (int y = 0; y < img.height; ++y) {
                for (int x = 1; x < img.width; ++x) {
                    const double d = std::fabs(img.at(y, x, c) - img.at(y, x - 1, c));
                    if (x % 8 == 0) {
                        at_block += d;
                        ++nb;
                    } else {
                        off_block += d;
                        ++no;
                    }
                }
            }
            f.push_back((at_block / nb) / (off_block / no + 1e-9));
        }
        return f;
    };

    std::vector<std::vector<double>> centroid(models.size());
    std::vector<int> counts(models.size(), 0);
    for (const ManifestEntry& e : manifest.train) {
        const std::vector<double> f = features(img::read_image(root + "/" + e.path));
        auto& cent = centroid[model_index.at(e.model_id)];
        if (cent.empty()) cent.assign(f.size(), 0.0);
        for (std::size_t i = 0; i < f.size(); ++i) cent[i] += f[i];
        ++counts[model_index.at(e.model_id)];
    }
    for (std::size_t m = 0; m < centroid.size(); ++m) {
        for (double& v : centroid[m]) v /= std::max(counts[m], 1);
    }

    int correct = 0;
    for (const ManifestEntry& e : manifest.test) {
        const std::vector<double> f = features(img::read_image(root + "/" + e.path));
        int best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < centroid.size(); ++m) {
            double dist = 0.0;
            for (std::size_t i = 0; i < f.size(); ++i) {
                const double d = f[i] - centroid[m][i];
                dist += d * d;
            }
            if (dist < best_dist) {
                best_dist = dist;
                best = static_cast<int>(m);
            }
        }
        if (best == model_index.at(e.model_id)) ++correct;
    }
    return manifest.test.empty() ? 0.0
                                 : static_cast<double>(correct) /
                                       static_cast<double>(manifest.test.size());
}

}  // namespace remnet::data
