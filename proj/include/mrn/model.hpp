#pragma once

#include <span>

#include "mrn/data.hpp"
#include "mrn/rng.hpp"

namespace mrn {

// LogisticRegression: softmax cross-entropy, convex in the parameters.
// MlpOneHidden: one tanh hidden layer, softmax output; the non-convex model.
// Quadratic: F(w) = mean_i 0.5*||w - x_i||^2 over the feature rows; the
// strongly convex testbed with a closed-form minimizer (the feature mean).
enum class ModelKind { LogisticRegression, MlpOneHidden, Quadratic };

struct Model {
    ModelKind kind = ModelKind::LogisticRegression;
    int n_features = 0;
    int n_classes = 0;
    int hidden = 0;  // MlpOneHidden only

    Eigen::Index param_count() const;
};

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

// Loss and its exact analytic gradient at `at`, mean-reduced over the batch.
LossGrad model_loss_grad(const Model& model, const Dataset& data,
                         std::span<const int> batch, const ParamVector& at);

// Convenience: full-dataset loss.
double model_loss(const Model& model, const Dataset& data, const ParamVector& at);

// Classification accuracy (argmax); 0 for the quadratic model.
double model_accuracy(const Model& model, const Dataset& data, const ParamVector& at);

// Deterministic initialization: zeros for LogisticRegression and Quadratic,
// N(0, 1/fan_in) weights with zero biases for the MLP.
ParamVector init_params(const Model& model, std::uint64_t seed);

}  // namespace mrn
