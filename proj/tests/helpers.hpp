#pragma once

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "banditiv/types.hpp"

namespace testutil {

using banditiv::Mat;
using banditiv::Vec;

inline Mat random_mat(std::mt19937_64& g, int r, int c, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = n(g);
    return m;
}

inline Vec random_vec(std::mt19937_64& g, int n, double sd = 1.0) {
    return random_mat(g, n, 1, sd).col(0);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline double max_rel_err(const Mat& a, const Mat& b) {
    double e = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) e = std::max(e, rel_err(a(i, j), b(i, j)));
    return e;
}

}  // namespace testutil
