#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace asq {

// Smooth objective: returns the value at x and, when grad is non-null,
// writes the gradient there.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct CgOptions {
    double grad_tol = 1e-8;   // stop when ||g||_inf <= grad_tol
    double value_tol = 0.0;   // also stop when |f_{k+1} - f_k| <= value_tol (0 disables)
    int max_iter = 500;
};

struct CgResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double grad_norm = 0.0;  // ||g||_inf at the returned point
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> trace;  // value after each iteration, starting point first
};

// Polak-Ribiere(+) nonlinear conjugate gradient with a strong-Wolfe line
// search.  Deterministic for a given starting point.
CgResult cg_minimize(const Objective& f, Eigen::VectorXd x0, const CgOptions& opts = {});

struct BasinHopOptions {
    int n_hops = 10;
    double perturb_scale = 0.5;  // uniform jitter in [-scale, scale] per coordinate
    double temperature = 0.008;  // Metropolis scale; <= 0 means greedy descent
    CgOptions loose;             // relaxation after each jump
    CgOptions tight;             // final re-relaxation of the best point
    std::uint64_t seed = 1;
};

struct BasinHopResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int accepted = 0;
    int evaluations = 0;
    std::vector<double> hop_values;   // relaxed value after each jump (initial first)
    std::vector<double> final_trace;  // values along the tight re-relaxation
};

// Global search: relax, then repeatedly jump (uniform perturbation), relax,
// and accept or reject the move by the Metropolis rule on the relaxed
// values.  The best point ever seen is re-relaxed with the tight settings
// and returned.
BasinHopResult basin_hop(const Objective& f, Eigen::VectorXd x0,
                         const BasinHopOptions& opts = {});

}  // namespace asq
