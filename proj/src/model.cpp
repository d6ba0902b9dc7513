#include "banditiv/model.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "banditiv/linalg.hpp"

namespace banditiv {

double mean_reward(const Vec& z, const Mat& gamma0, const Vec& beta0) {
    if (z.size() != gamma0.rows() || beta0.size() != gamma0.cols()) {
        std::ostringstream os;
        os << "mean_reward: dimension mismatch (z " << z.size() << ", Gamma0 " << gamma0.rows() << "x"
           << gamma0.cols() << ", beta0 " << beta0.size() << ")";
        throw ConfigError(os.str());
    }
    return z.dot(gamma0 * beta0);
}

std::vector<std::string> validate(const ProblemDims& dims, const BoundsConfig& bounds, const TwoStageModel& model) {
    std::vector<std::string> out;
    auto fail = [&](std::string msg) { out.push_back(std::move(msg)); };

    if (dims.k < 1) fail("k must be >= 1");
    if (dims.d < 1) fail("d must be >= 1");
    if (dims.horizon < 1) fail("horizon T must be >= 1");
    if (dims.n_arms < 1) fail("n_arms must be >= 1");
    if (dims.k < dims.d) fail("identification requires k >= d");

    if (!(bounds.L_z > 0)) fail("L_z must be positive");
    if (!(bounds.L_x > 0)) fail("L_x must be positive");
    if (!(bounds.L_y > 0)) fail("L_y must be positive");
    if (!(bounds.lambda_min > 0)) fail("lambda_min must be positive");
    if (!(bounds.S_beta > 0)) fail("S_beta must be positive");
    if (!(bounds.S_gamma > 0)) fail("S_gamma must be positive");

    const bool gamma_shape = model.gamma0.rows() == dims.k && model.gamma0.cols() == dims.d;
    if (!gamma_shape) {
        std::ostringstream os;
        os << "Gamma0 must be " << dims.k << "x" << dims.d << " (got " << model.gamma0.rows() << "x"
           << model.gamma0.cols() << ")";
        fail(os.str());
    }
    if (model.beta0.size() != dims.d) fail("beta0 must have length d");
    if (model.rho.size() != dims.d) fail("rho must have length d");
    if (model.sigma_u < 0 || model.sigma_eps < 0 || model.sigma_e < 0) fail("noise scales must be nonnegative");

    if (gamma_shape && model.gamma0.size() > 0) {
        if (!model.gamma0.allFinite()) {
            fail("Gamma0 has non-finite entries");
        } else if (relative_min_singular_value(model.gamma0) <= 1e-10) {
            fail("Gamma0 must have full column rank");
        }
        if (bounds.S_gamma > 0) {
            const double worst = model.gamma0.colwise().norm().maxCoeff();
            if (bounds.S_gamma < worst) fail("S_gamma is below the largest column norm of Gamma0");
        }
    }
    if (model.beta0.size() == dims.d && bounds.S_beta > 0 && bounds.S_beta < model.beta0.norm()) {
        fail("S_beta is below the norm of beta0");
    }
    return out;
}

BoundsConfig honest_bounds(const TwoStageModel& model, int k, int d, double z_half_width) {
    BoundsConfig b;
    b.L_z = z_half_width * std::sqrt(static_cast<double>(k));
    // Operator norm of Gamma0 times L_z, plus three noise standard deviations per component.
    Eigen::JacobiSVD<Mat> svd(model.gamma0);
    const double op = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    const double feature_noise = std::sqrt(model.sigma_e * model.sigma_e + model.sigma_u * model.sigma_u);
    b.L_x = op * b.L_z + 3.0 * std::sqrt(static_cast<double>(d)) * feature_noise;
    b.L_y = model.beta0.norm() * b.L_x + 3.0 * model.rho.norm() * model.sigma_e + 3.0 * model.sigma_eps;
    b.lambda_min = z_half_width * z_half_width / 3.0;
    b.S_beta = model.beta0.norm();
    b.S_gamma = model.gamma0.colwise().norm().maxCoeff();
    if (b.L_y <= 0) b.L_y = 1.0;
    return b;
}

ModelSpec default_synthetic_spec(int k, int d, double rho, int horizon) {
    ModelSpec s;
    s.dims = ProblemDims{k, d, horizon, 50};
    s.model.gamma0 = Mat::Ones(k, d);
    if (k >= d && d > 1) {
        // All-ones is rank one for d > 1; add the identity block so the default
        // stays identified while keeping entries near one.
        s.model.gamma0.topRows(d) += Mat::Identity(d, d);
    }
    s.model.beta0 = Vec::Ones(d);
    s.model.rho = Vec::Constant(d, rho);
    s.model.sigma_u = 0.1;
    s.model.sigma_eps = 1.0;
    s.model.sigma_e = 1.0;
    s.bounds = honest_bounds(s.model, k, d);
    return s;
}

}  // namespace banditiv
