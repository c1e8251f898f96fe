#pragma once
// Adam with bias correction plus the reduce-on-plateau schedule driven by the
// validation crossentropy.

#include <cstdint>
#include <vector>

#include "remnet/layers.hpp"

namespace remnet::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(std::vector<ParamRef> params, AdamConfig cfg = {});

    // One update over all trainable parameters. Throws if a trainable
    // parameter has no populated gradient buffer.
    void step();
    void zero_grad();

    std::int64_t step_count() const { return step_count_; }
    double learning_rate() const { return cfg_.learning_rate; }
    void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
    const AdamConfig& config() const { return cfg_; }
    const std::vector<double>& second_moment(std::size_t i) const { return second_[i]; }

private:
    std::vector<ParamRef> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
    std::int64_t step_count_ = 0;
};

// Halves the learning rate when the observed metric fails to improve
// (strictly, with tolerance) for `patience` consecutive observations.
class PlateauScheduler {
public:
    PlateauScheduler(int patience = 3, double factor = 0.5, double tolerance = 1e-6)
        : patience_(patience), factor_(factor), tolerance_(tolerance) {}

    // Call once per epoch; returns true when the rate was decayed.
    bool observe(double metric, Adam& optimizer);

    double best_metric() const { return best_; }
    int epochs_since_improvement() const { return bad_epochs_; }
    double factor() const { return factor_; }
    int patience() const { return patience_; }

private:
    int patience_;
    double factor_;
    double tolerance_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
};

}  // namespace remnet::nn
