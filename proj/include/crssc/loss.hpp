// Label-smoothed targets for the cross-entropy loss.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crssc/classifier.hpp"

namespace crssc {

struct SmoothedTarget {
    std::vector<double> dist;
    double epsilon = 0.0;

    operator std::span<const double>() const noexcept { return dist; }
};

// 1 - epsilon on `label`, epsilon / (K - 1) everywhere else.
inline SmoothedTarget lsr_target(std::size_t label, std::size_t num_classes, double epsilon) {
    if (num_classes < 2) throw std::invalid_argument("K: need at least 2 classes");
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("epsilon: must be in [0,1), got " + std::to_string(epsilon));
    if (label >= num_classes)
        throw std::invalid_argument("label: " + std::to_string(label) + " outside [0," +
                                    std::to_string(num_classes) + ")");
    SmoothedTarget t{std::vector<double>(num_classes, epsilon / static_cast<double>(num_classes - 1)), epsilon};
    t.dist[label] = 1.0 - epsilon;
    return t;
}

inline double lsr_cross_entropy(const Prediction& pred, std::size_t label, double epsilon) {
    return cross_entropy(pred, lsr_target(label, pred.num_classes(), epsilon).dist);
}

}  // namespace crssc
