#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "kprobe/errors.hpp"

namespace kprobe {

// Outcome of a numerical-kernel computation. Indeterminate is a value, not an
// error: it means the spectrum has no clean gap at the noise floor, so no
// dimension may honestly be asserted.
struct KernelDecision {
    bool determinate = false;
    int dim = -1;             // kernel dimension, valid when determinate
    double gap_ratio = 0.0;   // sigma_r / sigma_{r+1} at the cut; for dim = 0
                              // the margin of the smallest sigma over the floor
    Eigen::VectorXd singular_values; // descending
    Eigen::MatrixXd kernel_basis;    // right singular vectors beyond the cut
};

// Spectral-gap rank rule. Singular values below abs_floor * reference are
// noise-level; the cut needs a multiplicative gap of gap_min to count as
// clean. reference defaults to sigma_1; pass scale_ref > 0 when the matrix
// has a natural absolute scale (holonomy deviations of O(1) transports).
// A full-rank verdict (dim 0) requires the smallest singular value to clear
// the floor by the dim0_guard margin; the floor itself already sits two
// orders above the solver noise, so the guard only flags values parked
// right at the floor.
inline KernelDecision kernel_analysis(const Eigen::MatrixXd& M, double gap_min,
                                      double abs_floor = 1e-9, double scale_ref = 0.0,
                                      double dim0_guard = 2.0) {
    if (!M.allFinite()) throw Error(ErrorKind::ConfigError, "kernel_analysis: non-finite matrix");
    if (M.rows() < M.cols())
        throw Error(ErrorKind::ConfigError, "kernel_analysis: expected rows >= cols");
    const int K = static_cast<int>(M.cols());

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
    KernelDecision out;
    out.singular_values = svd.singularValues();
    const double s1 = out.singular_values(0);

    if (s1 <= 1e-300) { // zero matrix: everything is kernel
        out.determinate = true;
        out.dim = K;
        out.gap_ratio = std::numeric_limits<double>::infinity();
        out.kernel_basis = svd.matrixV();
        return out;
    }

    const double ref = scale_ref > 0.0 ? std::max(s1, scale_ref) : s1;
    const double floor = abs_floor * ref;

    int kept = 0;
    while (kept < K && out.singular_values(kept) >= floor) ++kept;

    if (kept == K) {
        const double margin = out.singular_values(K - 1) / floor;
        out.gap_ratio = margin;
        out.determinate = margin >= dim0_guard;
        out.dim = out.determinate ? 0 : -1;
        return out;
    }
    if (kept == 0) {
        out.determinate = true;
        out.dim = K;
        out.gap_ratio = std::numeric_limits<double>::infinity();
        out.kernel_basis = svd.matrixV();
        return out;
    }

    const double below = out.singular_values(kept);
    out.gap_ratio = below > 0.0 ? out.singular_values(kept - 1) / below
                                : std::numeric_limits<double>::infinity();
    out.determinate = out.gap_ratio >= gap_min;
    if (out.determinate) {
        out.dim = K - kept;
        out.kernel_basis = svd.matrixV().rightCols(out.dim);
    }
    return out;
}

} // namespace kprobe
