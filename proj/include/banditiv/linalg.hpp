#pragma once

#include <Eigen/Cholesky>

#include "banditiv/types.hpp"

namespace banditiv {

/// Cholesky factor of a symmetric positive-definite matrix. Throws
/// InferenceError when the factorization fails.
Eigen::LLT<Mat> spd_factor(const Mat& a, const char* what);

/// Solves a x = b for SPD a.
Mat spd_solve(const Mat& a, const Mat& b, const char* what = "matrix");

/// ||v||_{A^{-1}} = sqrt(v' A^{-1} v) given the Cholesky factor of A.
double inverse_norm(const Eigen::LLT<Mat>& factor, const Vec& v);

/// ||v||_A = sqrt(v' A v).
double weighted_norm(const Mat& a, const Vec& v);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& sym);

/// Ratio of smallest to largest singular value (0 for an all-zero matrix).
double relative_min_singular_value(const Mat& a);

/// Standard normal quantile. Rational approximation refined by one Halley
/// step against erfc; absolute error well below 1e-9 on (0, 1).
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace banditiv
