#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace banditiv {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

// Error categories. The CLI maps ConfigError to exit code 2 and DataError to 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EnvironmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InferenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace banditiv
