#include "remnet/model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "remnet/kernels.hpp"

namespace remnet::net {

namespace {

int scaled_filters(int base, double width_scale) {
    return std::max(4, static_cast<int>(std::lround(base * width_scale)));
}

constexpr double kProbFloor = 1e-12;

}  // namespace

const char* to_string(ResidualLossKind kind) {
    switch (kind) {
        case ResidualLossKind::L2: return "l2";
        case ResidualLossKind::L1: return "l1";
        case ResidualLossKind::None: return "none";
    }
    return "l2";
}

ResidualLossKind residual_kind_from_string(const std::string& s) {
    if (s == "l2") return ResidualLossKind::L2;
    if (s == "l1") return ResidualLossKind::L1;
    if (s == "none") return ResidualLossKind::None;
    throw std::invalid_argument("unknown residual loss kind: " + s);
}

std::vector<int> NetworkConfig::remnant_filters() const {
    static const int base[3] = {64, 128, 256};
    std::vector<int> out;
    for (int i = 0; i < num_remnant_blocks; ++i) {
        // Blocks beyond the third keep doubling the width plan.
        const int b = i < 3 ? base[i] : base[2] << (i - 2);
        out.push_back(scaled_filters(b, width_scale));
    }
    return out;
}

std::vector<int> NetworkConfig::classifier_filters() const {
    return {scaled_filters(64, width_scale), scaled_filters(128, width_scale),
            scaled_filters(256, width_scale), scaled_filters(512, width_scale)};
}

nlohmann::json NetworkConfig::to_json() const {
    return {
        {"num_remnant_blocks", num_remnant_blocks},
        {"class_count", class_count},
        {"loss_weight", loss_weight},
        {"residual_loss", to_string(residual_loss)},
        {"width_scale", width_scale},
    };
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
    NetworkConfig cfg;
    cfg.num_remnant_blocks = j.at("num_remnant_blocks").get<int>();
    cfg.class_count = j.at("class_count").get<int>();
    cfg.loss_weight = j.at("loss_weight").get<double>();
    cfg.residual_loss = residual_kind_from_string(j.at("residual_loss").get<std::string>());
    cfg.width_scale = j.at("width_scale").get<double>();
    return cfg;
}

std::string NetworkConfig::hash() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "M=%d;N=%d;lambda=%.17g;res=%s;ws=%.17g",
                  num_remnant_blocks, class_count, loss_weight, to_string(residual_loss),
                  width_scale);
    std::uint64_t h = hash_str(buf);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

double residual_loss(const Tensor& residue, ResidualLossKind kind) {
    if (kind == ResidualLossKind::None) return 0.0;
    const std::int64_t batch = residue.dim(0);
    if (batch == 0) return 0.0;
    const double total = kind == ResidualLossKind::L2
                             ? kern::sum_sq(residue.data(), residue.numel())
                             : kern::sum_abs(residue.data(), residue.numel());
    return total / static_cast<double>(batch);
}

double xent_loss(const Tensor& probs, const std::vector<int>& labels) {
    const int batch = static_cast<int>(probs.dim(0));
    const int classes = static_cast<int>(probs.dim(1));
    if (labels.size() != static_cast<std::size_t>(batch)) {
        throw std::invalid_argument("xent: one label per sample required");
    }
    double total = 0.0;
    for (int b = 0; b < batch; ++b) {
        const int y = labels[b];
        if (y < 0 || y >= classes) {
            throw std::out_of_range("xent: label index out of range");
        }
        const double p = probs[static_cast<std::size_t>(b) * classes + y];
        total += -std::log(std::max(p, kProbFloor));
    }
    return total / static_cast<double>(batch);
}

// ---------------------------------------------------------------------------
// RemnantBlock

RemnantBlock::RemnantBlock(int filters, Rng& rng)
    : conv1(3, 3, 3, filters, 1),
      conv2(3, 3, filters + 3, filters, 1),
      conv3(3, 3, filters + 3, 3, 1),
      bn1(filters),
      bn2(filters),
      bn3(3),
      filters_(filters) {
    conv1.init(rng);
    conv2.init(rng);
    conv3.init(rng);
}

Tensor RemnantBlock::forward(const Tensor& x, bool training, bool keep_cache) {
    if (x.rank() != 4 || x.dim(3) != 3) {
        throw std::invalid_argument("remnant block: input must be [B,H,W,3]");
    }
    if (keep_cache) input_shape_ = x.shape();
    Tensor h1 = bn1.forward(conv1.forward(x, keep_cache), training, keep_cache);
    Tensor h2 = bn2.forward(conv2.forward(ops::concat_channels(h1, x), keep_cache), training,
                            keep_cache);
    Tensor h3 = bn3.forward(conv3.forward(ops::concat_channels(h2, x), keep_cache), training,
                            keep_cache);
    Tensor out(std::vector<std::int64_t>(x.shape()));
    kern::sub(x.data(), h3.data(), out.data(), x.numel());
    return out;
}

Tensor RemnantBlock::backward(const Tensor& gout) {
    if (input_shape_.empty()) {
        throw std::logic_error("remnant block backward without forward cache");
    }

    // y = x - h3: the skip contributes gout directly, the stack path -gout.
    Tensor gx{std::vector<std::int64_t>(input_shape_)};
    kern::acc(gout.data(), gx.data(), gout.numel());

    Tensor gh3(std::vector<std::int64_t>(gout.shape()));
    kern::axpy(-1.0, gout.data(), gh3.data(), gout.numel());

    Tensor gi3 = conv3.backward(bn3.backward(gh3));
    Tensor gh2({input_shape_[0], input_shape_[1], input_shape_[2], filters_});
    ops::concat_channels_backward(gi3, gh2, gx);

    Tensor gi2 = conv2.backward(bn2.backward(gh2));
    Tensor gh1({input_shape_[0], input_shape_[1], input_shape_[2], filters_});
    ops::concat_channels_backward(gi2, gh1, gx);

    Tensor g1 = conv1.backward(bn1.backward(gh1));
    kern::acc(g1.data(), gx.data(), gx.numel());
    return gx;
}

void RemnantBlock::collect(const std::string& prefix, std::vector<nn::ParamRef>& out) {
    conv1.collect(prefix + ".conv1", out);
    bn1.collect(prefix + ".bn1", out);
    conv2.collect(prefix + ".conv2", out);
    bn2.collect(prefix + ".bn2", out);
    conv3.collect(prefix + ".conv3", out);
    bn3.collect(prefix + ".bn3", out);
}

// ---------------------------------------------------------------------------
// Preprocessor

Preprocessor::Preprocessor(const NetworkConfig& cfg, Rng& rng) {
    for (int f : cfg.remnant_filters()) {
        blocks_.emplace_back(f, rng);
    }
}

Tensor Preprocessor::forward(const Tensor& x, bool training, bool keep_cache) {
    Tensor y = x;
    for (RemnantBlock& block : blocks_) {
        y = block.forward(y, training, keep_cache);
    }
    return y;
}

Tensor Preprocessor::backward(const Tensor& gout) {
    Tensor g = gout;
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
        g = it->backward(g);
    }
    return g;
}

void Preprocessor::collect(std::vector<nn::ParamRef>& out) {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        blocks_[i].collect("pre.block" + std::to_string(i), out);
    }
}

// ---------------------------------------------------------------------------
// Classifier

Classifier::Classifier(const NetworkConfig& cfg, Rng& rng) : pool(4) {
    const std::vector<int> f = cfg.classifier_filters();
    const int kernels[4] = {7, 5, 3, 2};
    int cin = 3;
    for (int i = 0; i < 4; ++i) {
        conv[i] = nn::Conv2d(kernels[i], kernels[i], cin, f[i], 2);
        conv[i].init(rng);
        bn[i] = nn::BatchNorm2d(f[i]);
        act[i] = nn::PReLU(f[i]);
        cin = f[i];
    }
    head = nn::Conv2d(1, 1, f[3], cfg.class_count, 1);
    head.init(rng);
}

Tensor Classifier::forward(const Tensor& x, bool training, bool keep_cache,
                           std::vector<std::vector<std::int64_t>>* stage_shapes) {
    Tensor h = x;
    for (int i = 0; i < 4; ++i) {
        h = act[i].forward(bn[i].forward(conv[i].forward(std::move(h), keep_cache), training,
                                         keep_cache),
                           keep_cache);
        if (stage_shapes != nullptr) stage_shapes->push_back(h.shape());
    }
    Tensor pooled = pool.forward(h);
    if (stage_shapes != nullptr) stage_shapes->push_back(pooled.shape());
    h = head.forward(std::move(pooled), keep_cache);
    if (stage_shapes != nullptr) stage_shapes->push_back(h.shape());
    head_out_shape_ = h.shape();

    const std::int64_t batch = h.dim(0);
    const std::int64_t classes = h.dim(3);
    Tensor logits = Tensor::from_data({batch, classes}, std::move(h.values()));
    Tensor probs = ops::softmax_forward(logits);
    if (stage_shapes != nullptr) stage_shapes->push_back(probs.shape());
    return probs;
}

Tensor Classifier::backward_from_logits(const Tensor& glogits) {
    Tensor g = Tensor::from_data(std::vector<std::int64_t>(head_out_shape_),
                                 std::vector<double>(glogits.values()));
    g = pool.backward(head.backward(g));
    for (int i = 3; i >= 0; --i) {
        g = conv[i].backward(bn[i].backward(act[i].backward(g)));
    }
    return g;
}

void Classifier::collect(std::vector<nn::ParamRef>& out) {
    for (int i = 0; i < 4; ++i) {
        const std::string prefix = "cls.stage" + std::to_string(i);
        conv[i].collect(prefix + ".conv", out);
        bn[i].collect(prefix + ".bn", out);
        act[i].collect(prefix + ".prelu", out);
    }
    head.collect("cls.head", out);
}

// ---------------------------------------------------------------------------
// Network

Network::Network(NetworkConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
    Rng rng(derive_seed(init_seed, "network-init"));
    pre_ = Preprocessor(cfg_, rng);
    cls_ = Classifier(cfg_, rng);
}

Tensor Network::preprocess(const Tensor& x, bool training, bool keep_cache) {
    return pre_.forward(x, training, keep_cache);
}

Tensor Network::classify(const Tensor& residue, bool training, bool keep_cache) {
    return cls_.forward(residue, training, keep_cache);
}

Tensor Network::infer(const Tensor& x) {
    return cls_.forward(pre_.forward(x, false, false), false, false);
}

Network::ForwardResult Network::forward_loss(const Tensor& x, const std::vector<int>& labels,
                                             bool training) {
    ForwardResult r;
    r.residue = pre_.forward(x, training);
    r.probs = cls_.forward(r.residue, training);
    r.loss.residual_loss = residual_loss(r.residue, cfg_.residual_loss);
    r.loss.xent_loss = xent_loss(r.probs, labels);
    r.loss.total = cfg_.loss_weight * r.loss.residual_loss + r.loss.xent_loss;
    return r;
}

void Network::backward(const ForwardResult& result, const std::vector<int>& labels) {
    const int batch = static_cast<int>(result.probs.dim(0));
    const int classes = static_cast<int>(result.probs.dim(1));
    const double inv_b = 1.0 / static_cast<double>(batch);

    // Crossentropy-through-softmax gradient at the logits: (p - onehot) / B.
    Tensor glogits({batch, classes});
    for (int b = 0; b < batch; ++b) {
        const double* p = result.probs.data() + static_cast<std::size_t>(b) * classes;
        double* g = glogits.data() + static_cast<std::size_t>(b) * classes;
        for (int c = 0; c < classes; ++c) g[c] = p[c] * inv_b;
        g[labels[b]] -= inv_b;
    }
    Tensor gresidue = cls_.backward_from_logits(glogits);

    // The residual term feeds gradient into the preprocessor only; it joins
    // the classifier's input gradient at the residue.
    const double w = cfg_.loss_weight;
    if (cfg_.residual_loss == ResidualLossKind::L2 && w != 0.0) {
        kern::axpy(2.0 * w * inv_b, result.residue.data(), gresidue.data(), gresidue.numel());
    } else if (cfg_.residual_loss == ResidualLossKind::L1 && w != 0.0) {
        const double s = w * inv_b;
        for (std::size_t i = 0; i < gresidue.numel(); ++i) {
            const double v = result.residue[i];
            gresidue[i] += v > 0.0 ? s : (v < 0.0 ? -s : 0.0);
        }
    }
    pre_.backward(gresidue);
}

std::vector<nn::ParamRef> Network::parameters() {
    std::vector<nn::ParamRef> out;
    pre_.collect(out);
    cls_.collect(out);
    return out;
}

std::vector<nn::ParamRef> Network::preprocessor_params() {
    std::vector<nn::ParamRef> out;
    pre_.collect(out);
    return out;
}

std::vector<nn::ParamRef> Network::classifier_params() {
    std::vector<nn::ParamRef> out;
    cls_.collect(out);
    return out;
}

void Network::zero_grad() {
    for (nn::ParamRef& p : parameters()) p.tensor->zero_grad();
}

std::vector<std::vector<std::int64_t>> Network::classifier_stage_shapes(const Tensor& x) {
    std::vector<std::vector<std::int64_t>> shapes;
    Tensor residue = pre_.forward(x, false, false);
    cls_.forward(residue, false, false, &shapes);
    return shapes;
}

}  // namespace remnet::net
