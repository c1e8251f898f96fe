#pragma once
// Self-describing checkpoint container: a JSON metadata record followed by
// named raw-f64 tensors. Round-trips are bit-exact; loading validates every
// tensor against the receiving model and names the offender on mismatch.
//
// File layout (all integers little-endian):
//   magic "RMCK" | u32 version | u64 meta_len | meta (UTF-8 JSON)
//   u64 tensor_count
//   per tensor: u32 name_len | name | u32 dtype (0 = f64)
//               u32 rank | i64 dims[rank] | f64 data[numel]

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "remnet/layers.hpp"
#include "remnet/tensor.hpp"

namespace remnet::ckpt {

struct NamedTensor {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<double> data;
};

void save(const std::string& path, const std::vector<nn::ParamRef>& tensors,
          const nlohmann::json& metadata);

// Loads into existing tensors; every name in `tensors` must be present with
// a matching shape. Returns the metadata record.
nlohmann::json load_into(const std::string& path, const std::vector<nn::ParamRef>& tensors);

std::pair<std::vector<NamedTensor>, nlohmann::json> read_all(const std::string& path);
nlohmann::json read_metadata(const std::string& path);

}  // namespace remnet::ckpt
