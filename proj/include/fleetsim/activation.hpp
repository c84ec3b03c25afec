#pragma once

#include <cmath>
#include <string>

#include "fleetsim/util.hpp"

namespace fleetsim {

enum class ActivationKind { Ignore, Identity, Sigmoid, Softplus, Relu };

// Transforms a pickup-dropoff gap into the weight applied to distance terms.
inline double activation(ActivationKind kind, double g) {
    switch (kind) {
        case ActivationKind::Ignore: return 1.0;
        case ActivationKind::Identity: return g;
        case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-g));
        case ActivationKind::Softplus:
            // log(1+e^g) without overflow for large |g|
            return std::fmax(g, 0.0) + std::log1p(std::exp(-std::fabs(g)));
        case ActivationKind::Relu: return g > 0 ? g : 0.0;
    }
    return 1.0;
}

inline std::string to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::Ignore: return "ignore";
        case ActivationKind::Identity: return "identity";
        case ActivationKind::Sigmoid: return "sigmoid";
        case ActivationKind::Softplus: return "softplus";
        case ActivationKind::Relu: return "relu";
    }
    return "ignore";
}

inline ActivationKind parse_activation(const std::string& name) {
    if (name == "ignore") return ActivationKind::Ignore;
    if (name == "identity") return ActivationKind::Identity;
    if (name == "sigmoid") return ActivationKind::Sigmoid;
    if (name == "softplus") return ActivationKind::Softplus;
    if (name == "relu") return ActivationKind::Relu;
    throw ConfigError("unknown activation '" + name + "'");
}

constexpr ActivationKind kAllActivations[] = {
    ActivationKind::Ignore, ActivationKind::Identity, ActivationKind::Sigmoid,
    ActivationKind::Softplus, ActivationKind::Relu};

}  // namespace fleetsim
