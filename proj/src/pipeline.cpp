#include "remnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "remnet/checkpoint.hpp"
#include "remnet/image_io.hpp"
#include "remnet/optimizer.hpp"

namespace remnet::pipeline {

namespace fs = std::filesystem;

const char* to_string(Task task) {
    return task == Task::Cmi ? "cmi" : "manipulation";
}

Task task_from_string(const std::string& s) {
    if (s == "cmi") return Task::Cmi;
    if (s == "manipulation") return Task::Manipulation;
    throw std::invalid_argument("unknown task: " + s);
}

nlohmann::json TrainConfig::to_json() const {
    return {{"task", to_string(task)},
            {"batch_size", batch_size},
            {"initial_lr", initial_lr},
            {"max_epochs", max_epochs},
            {"plateau_patience", plateau_patience},
            {"plateau_factor", plateau_factor},
            {"loss_weight", loss_weight},
            {"residual_loss", net::to_string(residual_loss)},
            {"width_scale", width_scale},
            {"seed", seed},
            {"augment_train", augment_train},
            {"clusters_per_image", clusters_per_image},
            {"val_cluster_cap", val_cluster_cap}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.task = task_from_string(j.at("task").get<std::string>());
    c.batch_size = j.at("batch_size").get<int>();
    c.initial_lr = j.at("initial_lr").get<double>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.plateau_patience = j.at("plateau_patience").get<int>();
    c.plateau_factor = j.at("plateau_factor").get<double>();
    c.loss_weight = j.at("loss_weight").get<double>();
    c.residual_loss = net::residual_kind_from_string(j.at("residual_loss").get<std::string>());
    c.width_scale = j.at("width_scale").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.augment_train = j.at("augment_train").get<bool>();
    c.clusters_per_image = j.at("clusters_per_image").get<int>();
    c.val_cluster_cap = j.at("val_cluster_cap").get<int>();
    return c;
}

namespace {

int label_for(Task task, const std::vector<std::string>& class_names,
              const img::Provenance& prov) {
    if (task == Task::Manipulation) {
        return static_cast<int>(prov.manipulation.kind);
    }
    const auto it = std::find(class_names.begin(), class_names.end(), prov.model_id);
    if (it == class_names.end()) {
        throw std::runtime_error("unknown model id in manifest: " + prov.model_id);
    }
    return static_cast<int>(it - class_names.begin());
}

std::vector<ClusterRecord> records_from_image(const img::ImageBuffer& img, Task task,
                                              const std::vector<std::string>& class_names,
                                              int clusters_per_image) {
    std::vector<ClusterRecord> out;
    if (img.width < img::kClusterSize || img.height < img::kClusterSize) {
        return out;  // flagged: too small for cluster extraction
    }
    const int label = label_for(task, class_names, img.provenance);
    for (img::Cluster& c : img::extract_clusters(img, clusters_per_image)) {
        ClusterRecord r;
        r.label = label;
        r.provenance = img.provenance;
        r.offset_x = c.offset_x;
        r.offset_y = c.offset_y;
        r.pixels.resize(c.pixels.size());
        for (std::size_t i = 0; i < c.pixels.size(); ++i) {
            r.pixels[i] = static_cast<std::uint8_t>(
                std::lround(std::clamp(c.pixels[i], 0.0, 1.0) * 255.0));
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

img::Cluster record_to_cluster(const ClusterRecord& record) {
    img::Cluster c;
    c.offset_x = record.offset_x;
    c.offset_y = record.offset_y;
    c.pixels.resize(record.pixels.size());
    for (std::size_t i = 0; i < record.pixels.size(); ++i) {
        c.pixels[i] = record.pixels[i] / 255.0;
    }
    c.quality = img::quality_score_rgb(c.pixels.data(),
                                       static_cast<std::size_t>(img::kClusterSize) *
                                           img::kClusterSize);
    return c;
}

ClusterSet build_cluster_set(const std::string& data_root,
                             const std::vector<data::ManifestEntry>& entries, Task task,
                             const std::vector<std::string>& class_names, bool augment,
                             int clusters_per_image, bool balance, std::uint64_t balance_seed,
                             int per_class_cap) {
    ClusterSet set;
    set.task = task;
    set.class_names = class_names;

    const int n = static_cast<int>(entries.size());
    std::vector<std::vector<ClusterRecord>> per_entry(n);
    std::string error;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            const data::ManifestEntry& e = entries[i];
            img::ImageBuffer base = img::read_image(data_root + "/" + e.path);
            base.provenance.model_id = e.model_id;
            base.provenance.device_id = e.device_id;
            base.provenance.scene_id = e.scene_id;
            base.provenance.manipulation = {img::ManipKind::Unaltered, 0.0};

            std::vector<ClusterRecord>& mine = per_entry[i];
            auto append = [&](const img::ImageBuffer& variant) {
                auto recs = records_from_image(variant, task, class_names, clusters_per_image);
                mine.insert(mine.end(), std::make_move_iterator(recs.begin()),
                            std::make_move_iterator(recs.end()));
            };
            append(base);
            if (augment) {
                for (const img::PolicyEntry& p : img::train_policy()) {
                    append(img::apply_manipulation(base, p));
                }
            }
        } catch (const std::exception& ex) {
#pragma omp critical
            if (error.empty()) error = ex.what();
        }
    }
    if (!error.empty()) throw std::runtime_error("build_cluster_set: " + error);

    for (auto& recs : per_entry) {
        set.records.insert(set.records.end(), std::make_move_iterator(recs.begin()),
                           std::make_move_iterator(recs.end()));
    }

    if (balance) {
        std::vector<int> labels(set.records.size());
        for (std::size_t i = 0; i < set.records.size(); ++i) labels[i] = set.records[i].label;
        Rng rng(derive_seed(balance_seed, "class-balance"));
        const std::vector<std::size_t> keep =
            data::balance_classes(labels, static_cast<int>(class_names.size()), rng);
        std::vector<ClusterRecord> kept;
        kept.reserve(keep.size());
        for (std::size_t idx : keep) kept.push_back(std::move(set.records[idx]));
        set.records = std::move(kept);
    }

    if (per_class_cap > 0) {
        Rng rng(derive_seed(balance_seed, "class-cap"));
        std::vector<std::vector<std::size_t>> per_class(class_names.size());
        for (std::size_t i = 0; i < set.records.size(); ++i) {
            per_class[set.records[i].label].push_back(i);
        }
        std::vector<std::size_t> keep;
        for (auto& idx : per_class) {
            for (std::size_t i = idx.size(); i > 1; --i) {
                std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.next_int(0, i - 1))]);
            }
            const std::size_t take = std::min(idx.size(), static_cast<std::size_t>(per_class_cap));
            keep.insert(keep.end(), idx.begin(), idx.begin() + take);
        }
        std::sort(keep.begin(), keep.end());
        std::vector<ClusterRecord> kept;
        kept.reserve(keep.size());
        for (std::size_t idx : keep) kept.push_back(std::move(set.records[idx]));
        set.records = std::move(kept);
    }
    return set;
}

// ---------------------------------------------------------------------------
// Cluster-set file (magic RMCS): metadata JSON + fixed-size pixel records.

namespace {

constexpr char kStoreMagic[4] = {'R', 'M', 'C', 'S'};

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is.good()) throw std::runtime_error("cluster set: truncated file");
    return v;
}

void write_str(std::ofstream& os, const std::string& s) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::ifstream& is) {
    const auto len = read_pod<std::uint32_t>(is);
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is.good()) throw std::runtime_error("cluster set: truncated string");
    return s;
}

}  // namespace

void save_cluster_set(const std::string& path, const ClusterSet& set) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write cluster set: " + path);
    os.write(kStoreMagic, 4);
    write_pod<std::uint32_t>(os, 1);
    nlohmann::json meta = {{"task", to_string(set.task)},
                           {"class_names", set.class_names},
                           {"records", set.records.size()}};
    write_str(os, meta.dump());
    for (const ClusterRecord& r : set.records) {
        write_pod<std::int32_t>(os, r.label);
        write_pod<std::int32_t>(os, r.offset_x);
        write_pod<std::int32_t>(os, r.offset_y);
        write_str(os, r.provenance.model_id);
        write_str(os, r.provenance.device_id);
        write_str(os, r.provenance.scene_id);
        write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(r.provenance.manipulation.kind));
        write_pod<double>(os, r.provenance.manipulation.factor);
        os.write(reinterpret_cast<const char*>(r.pixels.data()),
                 static_cast<std::streamsize>(r.pixels.size()));
    }
    if (!os.good()) throw std::runtime_error("cluster set write failed: " + path);
}

ClusterSet load_cluster_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read cluster set: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is.good() || std::memcmp(magic, kStoreMagic, 4) != 0) {
        throw std::runtime_error("cluster set: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(is);
    if (version != 1) throw std::runtime_error("cluster set: unsupported version");
    const nlohmann::json meta = nlohmann::json::parse(read_str(is));

    ClusterSet set;
    set.task = task_from_string(meta.at("task").get<std::string>());
    set.class_names = meta.at("class_names").get<std::vector<std::string>>();
    const auto count = meta.at("records").get<std::size_t>();
    set.records.resize(count);
    const std::size_t pixel_bytes = static_cast<std::size_t>(img::kClusterSize) *
                                    img::kClusterSize * 3;
    for (std::size_t i = 0; i < count; ++i) {
        ClusterRecord& r = set.records[i];
        r.label = read_pod<std::int32_t>(is);
        r.offset_x = read_pod<std::int32_t>(is);
        r.offset_y = read_pod<std::int32_t>(is);
        r.provenance.model_id = read_str(is);
        r.provenance.device_id = read_str(is);
        r.provenance.scene_id = read_str(is);
        r.provenance.manipulation.kind =
            static_cast<img::ManipKind>(read_pod<std::uint8_t>(is));
        r.provenance.manipulation.factor = read_pod<double>(is);
        r.pixels.resize(pixel_bytes);
        is.read(reinterpret_cast<char*>(r.pixels.data()),
                static_cast<std::streamsize>(pixel_bytes));
        if (!is.good()) throw std::runtime_error("cluster set: truncated pixels");
    }
    return set;
}

// ---------------------------------------------------------------------------
// Training

namespace {

void fill_patch(const ClusterRecord& record, int off_x, int off_y, double* dst) {
    for (int y = 0; y < img::kPatchSize; ++y) {
        const std::uint8_t* src =
            &record.pixels[((static_cast<std::size_t>(off_y) + y) * img::kClusterSize + off_x) *
                           3];
        for (int i = 0; i < img::kPatchSize * 3; ++i) {
            dst[static_cast<std::size_t>(y) * img::kPatchSize * 3 + i] = src[i] / 255.0;
        }
    }
}

// Mean patch-level crossentropy over the 16-tile grid of every cluster.
double validation_xent(net::Network& network, const ClusterSet& val_set) {
    double total = 0.0;
    std::size_t patches = 0;
    for (const ClusterRecord& record : val_set.records) {
        const img::Cluster cluster = record_to_cluster(record);
        const Tensor x = img::patches_to_tensor(img::tile_patches(cluster));
        const Tensor probs = network.infer(x);
        const std::vector<int> labels(static_cast<std::size_t>(probs.dim(0)), record.label);
        total += net::xent_loss(probs, labels) * static_cast<double>(probs.dim(0));
        patches += static_cast<std::size_t>(probs.dim(0));
    }
    if (patches == 0) throw std::runtime_error("validation set is empty");
    return total / static_cast<double>(patches);
}

void write_training_log(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write training log: " + path);
    os << "epoch,learning_rate,train_residual,train_xent,train_total,val_xent,saved\n";
    char buf[256];
    for (const EpochLog& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%d\n", e.epoch,
                      e.learning_rate, e.train_residual, e.train_xent, e.train_total, e.val_xent,
                      e.saved_checkpoint ? 1 : 0);
        os << buf;
    }
}

}  // namespace

TrainResult train(const std::string& data_root, const data::SplitManifest& manifest,
                  const TrainConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);

    std::vector<std::string> class_names;
    if (cfg.task == Task::Cmi) {
        class_names = manifest.model_ids();
    } else {
        for (int k = 0; k < img::kManipClassCount; ++k) {
            class_names.push_back(img::to_string(static_cast<img::ManipKind>(k)));
        }
    }
    const bool augment = cfg.augment_train || cfg.task == Task::Manipulation;
    const bool balance = cfg.task == Task::Manipulation;

    ClusterSet train_set =
        build_cluster_set(data_root, manifest.train, cfg.task, class_names, augment,
                          cfg.clusters_per_image, balance, derive_seed(cfg.seed, "train-pool"), 0);
    ClusterSet val_set = build_cluster_set(data_root, manifest.val, cfg.task, class_names, augment,
                                           cfg.clusters_per_image, balance,
                                           derive_seed(cfg.seed, "val-pool"), cfg.val_cluster_cap);
    if (train_set.records.empty()) throw std::runtime_error("training set is empty");
    if (val_set.records.empty()) throw std::runtime_error("validation set is empty");

    net::NetworkConfig ncfg;
    ncfg.num_remnant_blocks = 3;
    ncfg.class_count = static_cast<int>(class_names.size());
    ncfg.loss_weight = cfg.loss_weight;
    ncfg.residual_loss = cfg.residual_loss;
    ncfg.width_scale = cfg.width_scale;
    net::Network network(ncfg, cfg.seed);

    nn::AdamConfig acfg;
    acfg.learning_rate = cfg.initial_lr;
    nn::Adam adam(network.parameters(), acfg);
    nn::PlateauScheduler plateau(cfg.plateau_patience, cfg.plateau_factor);

    TrainResult result;
    result.class_names = class_names;
    result.checkpoint_path = (fs::path(out_dir) / "checkpoint.rmck").string();
    result.best_val_xent = std::numeric_limits<double>::infinity();

    const std::size_t n = train_set.records.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng erng(derive_seed(cfg.seed, "epoch-" + std::to_string(epoch)));
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(erng.next_int(0, i - 1))]);
        }

        double sum_res = 0.0, sum_xent = 0.0, sum_total = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bs = std::min(static_cast<std::size_t>(cfg.batch_size), n - start);
            Tensor x({static_cast<std::int64_t>(bs), img::kPatchSize, img::kPatchSize, 3});
            std::vector<int> labels(bs);
            const int max_off = img::kClusterSize - img::kPatchSize;
            for (std::size_t b = 0; b < bs; ++b) {
                const ClusterRecord& record = train_set.records[order[start + b]];
                const int ox = static_cast<int>(erng.next_int(0, max_off));
                const int oy = static_cast<int>(erng.next_int(0, max_off));
                fill_patch(record, ox, oy,
                           x.data() + b * static_cast<std::size_t>(img::kPatchSize) *
                                          img::kPatchSize * 3);
                labels[b] = record.label;
            }

            net::Network::ForwardResult fr = network.forward_loss(x, labels, true);
            if (!std::isfinite(fr.loss.total)) {
                nlohmann::json dump = {{"epoch", epoch},
                                       {"batch_start", start},
                                       {"residual_loss", fr.loss.residual_loss},
                                       {"xent_loss", fr.loss.xent_loss},
                                       {"total", fr.loss.total}};
                nlohmann::json batch = nlohmann::json::array();
                for (std::size_t b = 0; b < bs; ++b) {
                    const ClusterRecord& r = train_set.records[order[start + b]];
                    batch.push_back({{"model_id", r.provenance.model_id},
                                     {"device_id", r.provenance.device_id},
                                     {"scene_id", r.provenance.scene_id},
                                     {"manipulation", img::to_string(r.provenance.manipulation.kind)},
                                     {"label", r.label}});
                }
                dump["batch"] = batch;
                std::ofstream os(fs::path(out_dir) / "divergence_dump.json", std::ios::trunc);
                os << dump.dump(2) << "\n";
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch));
            }

            adam.zero_grad();
            network.backward(fr, labels);
            adam.step();

            sum_res += fr.loss.residual_loss * static_cast<double>(bs);
            sum_xent += fr.loss.xent_loss * static_cast<double>(bs);
            sum_total += fr.loss.total * static_cast<double>(bs);
            seen += bs;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.learning_rate = adam.learning_rate();
        entry.train_residual = sum_res / static_cast<double>(seen);
        entry.train_xent = sum_xent / static_cast<double>(seen);
        entry.train_total = sum_total / static_cast<double>(seen);
        entry.val_xent = validation_xent(network, val_set);

        if (entry.val_xent < result.best_val_xent) {
            result.best_val_xent = entry.val_xent;
            result.best_epoch = epoch;
            entry.saved_checkpoint = true;
            nlohmann::json meta = {{"task", to_string(cfg.task)},
                                   {"class_names", class_names},
                                   {"network", ncfg.to_json()},
                                   {"config_hash", ncfg.hash()},
                                   {"epoch", epoch},
                                   {"val_xent", entry.val_xent},
                                   {"seed", cfg.seed},
                                   {"bn_eps", 1e-5},
                                   {"bn_momentum", 0.9},
                                   {"codec", img::jpeg_codec_version()}};
            ckpt::save(result.checkpoint_path, network.parameters(), meta);
        }
        plateau.observe(entry.val_xent, adam);
        result.log.push_back(entry);
    }

    write_training_log((fs::path(out_dir) / "training_log.csv").string(), result.log);
    return result;
}

net::Network load_network(const std::string& checkpoint_path, nlohmann::json* metadata) {
    const nlohmann::json meta = ckpt::read_metadata(checkpoint_path);
    net::NetworkConfig ncfg = net::NetworkConfig::from_json(meta.at("network"));
    net::Network network(ncfg, 0);
    ckpt::load_into(checkpoint_path, network.parameters());
    if (metadata != nullptr) *metadata = meta;
    return network;
}

// ---------------------------------------------------------------------------
// Inference and evaluation

int argmax_lowest(const std::vector<double>& values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

ClusterPrediction predict_cluster(net::Network& network, const img::Cluster& cluster) {
    const std::vector<img::Patch> patches = img::tile_patches(cluster);
    const Tensor probs = network.infer(img::patches_to_tensor(patches));
    const int n = static_cast<int>(probs.dim(0));
    const int classes = static_cast<int>(probs.dim(1));

    ClusterPrediction pred;
    pred.offset_x = cluster.offset_x;
    pred.offset_y = cluster.offset_y;
    pred.probs.assign(classes, 0.0);
    for (int p = 0; p < n; ++p) {
        for (int c = 0; c < classes; ++c) {
            pred.probs[c] += probs[static_cast<std::size_t>(p) * classes + c];
        }
    }
    for (double& v : pred.probs) v /= n;
    pred.label = argmax_lowest(pred.probs);
    return pred;
}

int majority_vote(const std::vector<int>& labels, const std::vector<std::vector<double>>& probs,
                  int num_classes) {
    if (labels.empty()) throw std::invalid_argument("majority_vote: no cluster labels");
    std::vector<int> counts(num_classes, 0);
    for (int l : labels) counts.at(l)++;
    const int top = *std::max_element(counts.begin(), counts.end());

    std::vector<double> prob_sum(num_classes, 0.0);
    for (const std::vector<double>& p : probs) {
        for (int c = 0; c < num_classes; ++c) prob_sum[c] += p[c];
    }

    int verdict = -1;
    double best_sum = -1.0;
    for (int c = 0; c < num_classes; ++c) {
        if (counts[c] != top) continue;
        if (prob_sum[c] > best_sum) {
            best_sum = prob_sum[c];
            verdict = c;
        }
    }
    return verdict;
}

ImagePrediction predict_image(net::Network& network, const img::ImageBuffer& image,
                              int clusters_per_image) {
    ImagePrediction result;
    const std::vector<img::Cluster> clusters = img::extract_clusters(image, clusters_per_image);
    std::vector<int> labels;
    std::vector<std::vector<double>> probs;
    for (const img::Cluster& c : clusters) {
        ClusterPrediction p = predict_cluster(network, c);
        labels.push_back(p.label);
        probs.push_back(p.probs);
        result.clusters.push_back(std::move(p));
    }
    result.verdict = majority_vote(labels, probs, network.config().class_count);
    return result;
}

nlohmann::json PredictionReport::to_json() const {
    nlohmann::json j;
    j["task"] = to_string(task);
    j["class_names"] = class_names;
    j["confusion"] = confusion;
    j["total"] = total;
    j["correct"] = correct;
    j["accuracy"] = accuracy;
    nlohmann::json factors = nlohmann::json::array();
    for (const FactorAccuracy& f : per_factor) {
        factors.push_back({{"kind", img::to_string(f.kind)},
                           {"factor", f.factor},
                           {"images", f.images},
                           {"correct", f.correct},
                           {"accuracy", f.images > 0 ? static_cast<double>(f.correct) / f.images
                                                     : 0.0}});
    }
    j["per_factor"] = factors;
    nlohmann::json imgs = nlohmann::json::array();
    for (const ImageRecord& r : images) {
        imgs.push_back({{"path", r.path},
                        {"applied_kind", img::to_string(r.applied_kind)},
                        {"applied_factor", r.applied_factor},
                        {"truth", r.truth},
                        {"verdict", r.verdict},
                        {"cluster_labels", r.cluster_labels},
                        {"cluster_probs", r.cluster_probs}});
    }
    j["images"] = imgs;
    return j;
}

void PredictionReport::save_json(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write report: " + path);
    os << to_json().dump(2) << "\n";
}

void PredictionReport::save_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write report: " + path);
    os << "kind,factor,images,accuracy\n";
    char buf[128];
    for (const FactorAccuracy& f : per_factor) {
        std::snprintf(buf, sizeof(buf), "%s,%g,%d,%.6f\n", img::to_string(f.kind), f.factor,
                      f.images,
                      f.images > 0 ? static_cast<double>(f.correct) / f.images : 0.0);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "overall,,%d,%.6f\n", total, accuracy);
    os << buf;
}

PredictionReport evaluate(net::Network& network, const std::string& data_root,
                          const std::vector<data::ManifestEntry>& split, Task task,
                          const std::vector<std::string>& class_names,
                          const std::vector<img::PolicyEntry>* policy, int clusters_per_image) {
    if (split.empty()) throw std::invalid_argument("evaluate: empty split");
    PredictionReport report;
    report.task = task;
    report.class_names = class_names;
    const int n_classes = static_cast<int>(class_names.size());
    report.confusion.assign(n_classes, std::vector<int>(n_classes, 0));

    std::vector<img::PolicyEntry> items;
    if (policy == nullptr) {
        items.push_back({img::ManipKind::Unaltered, 0.0});
    } else {
        if (task == Task::Manipulation) items.push_back({img::ManipKind::Unaltered, 0.0});
        items.insert(items.end(), policy->begin(), policy->end());
    }
    for (const img::PolicyEntry& item : items) {
        FactorAccuracy f;
        f.kind = item.kind;
        f.factor = item.factor;
        report.per_factor.push_back(f);
    }

    for (const data::ManifestEntry& entry : split) {
        img::ImageBuffer base = img::read_image(data_root + "/" + entry.path);
        base.provenance.model_id = entry.model_id;
        base.provenance.device_id = entry.device_id;
        base.provenance.scene_id = entry.scene_id;
        base.provenance.manipulation = {img::ManipKind::Unaltered, 0.0};

        for (std::size_t item_idx = 0; item_idx < items.size(); ++item_idx) {
            const img::PolicyEntry& item = items[item_idx];
            const img::ImageBuffer variant = item.kind == img::ManipKind::Unaltered
                                                 ? base
                                                 : img::apply_manipulation(base, item);
            if (variant.width < img::kClusterSize || variant.height < img::kClusterSize) {
                continue;  // excluded from cluster extraction
            }
            const int truth = label_for(task, class_names, variant.provenance);
            ImagePrediction pred = predict_image(network, variant, clusters_per_image);

            ImageRecord record;
            record.path = entry.path;
            record.applied_kind = item.kind;
            record.applied_factor = item.factor;
            record.truth = truth;
            record.verdict = pred.verdict;
            for (const ClusterPrediction& c : pred.clusters) {
                record.cluster_labels.push_back(c.label);
                record.cluster_probs.push_back(c.probs);
            }
            report.images.push_back(std::move(record));

            report.confusion[truth][pred.verdict]++;
            report.total++;
            FactorAccuracy& f = report.per_factor[item_idx];
            f.images++;
            if (pred.verdict == truth) {
                report.correct++;
                f.correct++;
            }
        }
    }
    report.accuracy =
        report.total > 0 ? static_cast<double>(report.correct) / report.total : 0.0;
    return report;
}

}  // namespace remnet::pipeline
