#include "irlkf/linalg.hpp"

#include "irlkf/errors.hpp"

#include <cmath>
#include <limits>

namespace irlkf {

Mat stabilize_covariance(const Mat& p) {
    const Mat sym = 0.5 * (p + p.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
    if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
    const Vec floored = eig.eigenvalues().cwiseMax(0.0);
    const Mat out = eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Mat symmetric_sqrt(const Mat& p, const std::string& what, double tol) {
    if (p.rows() != p.cols()) throw NumericalDegeneracy(what + " is not square");
    if (!p.allFinite()) throw NumericalDegeneracy(what + " has non-finite entries");
    const Mat sym = 0.5 * (p + p.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
    const double floor = -tol * std::max(1.0, sym.cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < floor)
        throw NumericalDegeneracy(what + " has negative eigenvalue " + std::to_string(eig.eigenvalues().minCoeff()) +
                                  "; no real square root");
    const Vec root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double condition_number(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 1.0;
    const double smallest = s[s.size() - 1];
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return s[0] / smallest;
}

bool is_symmetric_psd(const Mat& p, double tol) {
    if (p.rows() != p.cols()) return false;
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > tol) return false;
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (p + p.transpose()));
    return eig.eigenvalues().minCoeff() >= -tol;
}

}  // namespace irlkf
