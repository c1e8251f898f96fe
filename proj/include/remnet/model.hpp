#pragma once
// The remnant network: a preprocessor of stacked remnant blocks whose output
// (the residue) is penalized by an auxiliary norm loss and fed to a strided
// conv classifier. Trained end-to-end on total = lambda * residual + xent.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "remnet/layers.hpp"
#include "remnet/optimizer.hpp"
#include "remnet/tensor.hpp"

namespace remnet::net {

enum class ResidualLossKind { L2, L1, None };

const char* to_string(ResidualLossKind kind);
ResidualLossKind residual_kind_from_string(const std::string& s);

struct NetworkConfig {
    int num_remnant_blocks = 3;
    int class_count = 2;
    double loss_weight = 0.5;  // weight on the residual term
    ResidualLossKind residual_loss = ResidualLossKind::L2;
    double width_scale = 1.0;  // shrinks filter counts for small test nets

    // {64, 128, 256} scaled, truncated/extended to num_remnant_blocks.
    std::vector<int> remnant_filters() const;
    // {64, 128, 256, 512} scaled.
    std::vector<int> classifier_filters() const;

    nlohmann::json to_json() const;
    static NetworkConfig from_json(const nlohmann::json& j);
    std::string hash() const;  // canonical FNV-1a hex digest
};

struct LossBreakdown {
    double residual_loss = 0.0;
    double xent_loss = 0.0;
    double total = 0.0;
};

// Mean over the batch of the per-sample element sum (squares for L2,
// absolute values for L1, zero when disabled).
double residual_loss(const Tensor& residue, ResidualLossKind kind);
// Mean over the batch of -log(prob of the true class), probabilities floored
// at 1e-12 before the log.
double xent_loss(const Tensor& probs, const std::vector<int>& labels);

// One block: three same-padded 3x3 conv+BN layers (3->f, f+3->f, f+3->3, no
// activation anywhere) with the block input concatenated onto the inputs of
// the two inner layers; the stack output is subtracted from the block input.
class RemnantBlock {
public:
    RemnantBlock() = default;
    RemnantBlock(int filters, Rng& rng);

    Tensor forward(const Tensor& x, bool training, bool keep_cache = true);
    Tensor backward(const Tensor& gout);
    void collect(const std::string& prefix, std::vector<nn::ParamRef>& out);
    int filters() const { return filters_; }

    nn::Conv2d conv1, conv2, conv3;
    nn::BatchNorm2d bn1, bn2, bn3;

private:
    int filters_ = 0;
    std::vector<std::int64_t> input_shape_;
};

class Preprocessor {
public:
    Preprocessor() = default;
    Preprocessor(const NetworkConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& x, bool training, bool keep_cache = true);
    Tensor backward(const Tensor& gout);
    void collect(std::vector<nn::ParamRef>& out);
    std::vector<RemnantBlock>& blocks() { return blocks_; }

private:
    std::vector<RemnantBlock> blocks_;
};

class Classifier {
public:
    Classifier() = default;
    Classifier(const NetworkConfig& cfg, Rng& rng);

    // Returns class probabilities [B, N].
    Tensor forward(const Tensor& x, bool training, bool keep_cache = true,
                   std::vector<std::vector<std::int64_t>>* stage_shapes = nullptr);
    // Takes the gradient at the pre-softmax logits [B, N].
    Tensor backward_from_logits(const Tensor& glogits);
    void collect(std::vector<nn::ParamRef>& out);

    nn::Conv2d conv[4];
    nn::BatchNorm2d bn[4];
    nn::PReLU act[4];
    nn::AvgPool pool;
    nn::Conv2d head;

private:
    std::vector<std::int64_t> head_out_shape_;
};

class Network {
public:
    Network() = default;
    Network(NetworkConfig cfg, std::uint64_t init_seed);

    const NetworkConfig& config() const { return cfg_; }

    Tensor preprocess(const Tensor& x, bool training, bool keep_cache = true);
    Tensor classify(const Tensor& residue, bool training, bool keep_cache = true);
    // Inference without gradient bookkeeping or running-stat updates.
    Tensor infer(const Tensor& x);

    struct ForwardResult {
        Tensor residue;
        Tensor probs;
        LossBreakdown loss;
    };
    ForwardResult forward_loss(const Tensor& x, const std::vector<int>& labels, bool training);
    // Backward from the total loss of the preceding forward_loss(training=true).
    void backward(const ForwardResult& result, const std::vector<int>& labels);

    std::vector<nn::ParamRef> parameters();            // everything, incl. running stats
    std::vector<nn::ParamRef> preprocessor_params();   // "pre." subset
    std::vector<nn::ParamRef> classifier_params();     // "cls." subset
    void zero_grad();

    // Stage output shapes of the classifier for one forward (diagnostics).
    std::vector<std::vector<std::int64_t>> classifier_stage_shapes(const Tensor& x);

    Preprocessor& preprocessor() { return pre_; }
    Classifier& classifier() { return cls_; }

private:
    NetworkConfig cfg_;
    Preprocessor pre_;
    Classifier cls_;
};

}  // namespace remnet::net
