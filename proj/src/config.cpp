#include "remnet/config.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace remnet::cli {

std::map<std::string, std::string> load_key_values(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read config file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // Strip comments and surrounding whitespace.
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto kend = key.find_last_not_of(" \t");
        key = key.substr(0, kend == std::string::npos ? 0 : kend + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        if (key.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
        }
        out[key] = value;
    }
    return out;
}

void save_key_values(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write config file: " + path);
    for (const auto& [key, value] : entries) {
        os << key << "=" << value << "\n";
    }
}

std::vector<std::pair<std::string, std::string>> RunOptions::resolved() const {
    auto num = [](double v) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    return {
        {"command", command},
        {"task", task},
        {"data", data_root},
        {"out", out_dir},
        {"checkpoint", checkpoint},
        {"seed", std::to_string(seed)},
        {"workers", std::to_string(workers)},
        {"split", split},
        {"manipulate", manipulate},
        {"residual_loss", residual_loss},
        {"augment_train", augment_train ? "1" : "0"},
        {"models", std::to_string(models)},
        {"devices_per_model", std::to_string(devices_per_model)},
        {"scenes", std::to_string(scenes)},
        {"images_per_scene", std::to_string(images_per_scene)},
        {"scene_size", std::to_string(scene_size)},
        {"val_scenes", std::to_string(val_scenes)},
        {"test_scenes", std::to_string(test_scenes)},
        {"batch_size", std::to_string(batch_size)},
        {"initial_lr", num(initial_lr)},
        {"max_epochs", std::to_string(max_epochs)},
        {"plateau_patience", std::to_string(plateau_patience)},
        {"plateau_factor", num(plateau_factor)},
        {"loss_weight", num(loss_weight)},
        {"width_scale", num(width_scale)},
        {"clusters_per_image", std::to_string(clusters_per_image)},
        {"val_cluster_cap", std::to_string(val_cluster_cap)},
    };
}

}  // namespace remnet::cli
