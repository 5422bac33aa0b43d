#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "seqscreen/matrix.hpp"

namespace seqscreen {

enum class ActivationKind { Sigmoid, Tanh, ReLU, Identity };

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double activate(ActivationKind kind, double x) {
    switch (kind) {
    case ActivationKind::Sigmoid: return sigmoid(x);
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::Identity: return x;
    }
    return x;
}

// Derivative expressed in terms of the activation *output* y, which is
// what the backward pass has on hand. ReLU uses the 0 subgradient at 0.
inline double activation_grad(ActivationKind kind, double y) {
    switch (kind) {
    case ActivationKind::Sigmoid: return y * (1.0 - y);
    case ActivationKind::Tanh: return 1.0 - y * y;
    case ActivationKind::ReLU: return y > 0.0 ? 1.0 : 0.0;
    case ActivationKind::Identity: return 1.0;
    }
    return 1.0;
}

Vector apply_activation(ActivationKind kind, const Vector& v);

std::string_view to_string(ActivationKind kind);
ActivationKind activation_from_string(std::string_view name);

} // namespace seqscreen
