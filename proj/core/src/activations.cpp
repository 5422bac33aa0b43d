#include "seqscreen/activations.hpp"

namespace seqscreen {

Vector apply_activation(ActivationKind kind, const Vector& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = activate(kind, v[i]);
    return out;
}

std::string_view to_string(ActivationKind kind) {
    switch (kind) {
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::Identity: return "identity";
    }
    return "identity";
}

ActivationKind activation_from_string(std::string_view name) {
    if (name == "sigmoid") return ActivationKind::Sigmoid;
    if (name == "tanh") return ActivationKind::Tanh;
    if (name == "relu") return ActivationKind::ReLU;
    if (name == "identity") return ActivationKind::Identity;
    throw std::invalid_argument("unknown activation: " + std::string(name));
}

} // namespace seqscreen
