#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace clusterpower {

// Observations are rows, features are columns.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

// Collects non-fatal diagnostics from numerical routines. Passing nullptr
// where a Warnings* is accepted discards them.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
    if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace clusterpower
