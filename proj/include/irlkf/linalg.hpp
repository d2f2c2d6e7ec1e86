#pragma once

#include "irlkf/geometry.hpp"

#include <string>

namespace irlkf {

/// Symmetrizes and floors eigenvalues at zero.
Mat stabilize_covariance(const Mat& p);

/// Principal symmetric square root V sqrt(D) V^T. Eigenvalues in
/// [-tol * max(1, |P|), 0) are floored; anything more negative throws
/// NumericalDegeneracy naming `what`.
Mat symmetric_sqrt(const Mat& p, const std::string& what, double tol = 1e-9);

/// 2-norm condition number; infinity for singular matrices.
double condition_number(const Mat& m);

bool is_symmetric_psd(const Mat& p, double tol);

}  // namespace irlkf
