#include "asq/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "asq/errors.hpp"
#include "asq/rng.hpp"

namespace asq {

namespace {

struct LinePoint {
    double a;     // step length
    double f;     // value at x + a d
    double df;    // directional derivative at x + a d
};

// Strong-Wolfe line search (bracket + zoom with bisection/interpolation).
// Returns the accepted step and leaves value/gradient of the accepted point
// in f_out/g_out.  Falls back to the best point seen if the tolerances
// cannot be met in the iteration budget.
double wolfe_line_search(const Objective& f, const Eigen::VectorXd& x, double f0,
                         const Eigen::VectorXd& g0, const Eigen::VectorXd& d, double a_init,
                         double& f_out, Eigen::VectorXd& g_out, int& evals) {
    const double c1 = 1e-4, c2 = 0.1;
    const double dphi0 = g0.dot(d);
    if (dphi0 >= 0.0) throw InvalidInput("line search: direction is not a descent direction");

    Eigen::VectorXd g(x.size());
    auto eval = [&](double a) -> LinePoint {
        double v = f(x + a * d, &g);
        ++evals;
        return {a, v, g.dot(d)};
    };

    double best_a = 0.0, best_f = f0;
    Eigen::VectorXd best_g = g0;

    auto note = [&](const LinePoint& p) {
        if (p.f < best_f) {
            best_a = p.a;
            best_f = p.f;
            best_g = g;
        }
    };

    auto zoom = [&](LinePoint lo, LinePoint hi) -> double {
        for (int i = 0; i < 30; ++i) {
            // Quadratic interpolation using lo's derivative, guarded toward
            // bisection when the model step is poor.
            double span = hi.a - lo.a;
            double a = lo.a - 0.5 * lo.df * span * span / (hi.f - lo.f - lo.df * span);
            double lo_b = std::min(lo.a, hi.a), hi_b = std::max(lo.a, hi.a);
            if (!(a > lo_b + 0.1 * (hi_b - lo_b) && a < hi_b - 0.1 * (hi_b - lo_b)))
                a = 0.5 * (lo.a + hi.a);
            LinePoint p = eval(a);
            note(p);
            if (p.f > f0 + c1 * p.a * dphi0 || p.f >= lo.f) {
                hi = p;
            } else {
                if (std::abs(p.df) <= -c2 * dphi0) {
                    f_out = p.f;
                    g_out = g;
                    return p.a;
                }
                if (p.df * (hi.a - lo.a) >= 0.0) hi = lo;
                lo = p;
            }
            if (std::abs(hi.a - lo.a) < 1e-14) break;
        }
        f_out = best_f;
        g_out = best_g;
        return best_a;
    };

    LinePoint prev{0.0, f0, dphi0};
    double a = a_init;
    for (int i = 0; i < 25; ++i) {
        LinePoint p = eval(a);
        note(p);
        if (p.f > f0 + c1 * a * dphi0 || (i > 0 && p.f >= prev.f)) return zoom(prev, p);
        if (std::abs(p.df) <= -c2 * dphi0) {
            f_out = p.f;
            g_out = g;
            return p.a;
        }
        if (p.df >= 0.0) return zoom(p, prev);
        prev = p;
        a *= 2.5;
    }
    f_out = best_f;
    g_out = best_g;
    return best_a;
}

}  // namespace

CgResult cg_minimize(const Objective& f, Eigen::VectorXd x0, const CgOptions& opts) {
    CgResult r;
    r.x = std::move(x0);
    const Eigen::Index n = r.x.size();
    Eigen::VectorXd g(n);
    r.value = f(r.x, &g);
    r.evaluations = 1;
    r.trace.push_back(r.value);
    if (n == 0) {
        r.converged = true;
        return r;
    }

    Eigen::VectorXd d = -g;
    for (int it = 1; it <= opts.max_iter; ++it) {
        r.grad_norm = g.cwiseAbs().maxCoeff();
        if (r.grad_norm <= opts.grad_tol) {
            r.converged = true;
            return r;
        }
        bool steepest = d.dot(g) >= 0.0;
        if (steepest) d = -g;  // safeguard restart

        // First step is scaled to the gradient; later steps start from 1.
        double a0 = it == 1 ? std::min(1.0, 1.0 / std::max(1e-12, g.norm())) : 1.0;
        double f_new = r.value;
        Eigen::VectorXd g_new = g;
        double a = wolfe_line_search(f, r.x, r.value, g, d, a0, f_new, g_new,
                                     r.evaluations);
        if (a == 0.0 && !steepest) {  // retry along steepest descent
            d = -g;
            a = wolfe_line_search(f, r.x, r.value, g, d, 1.0, f_new, g_new, r.evaluations);
        }
        if (a == 0.0) {  // line search stalled at numerical floor
            r.iterations = it;
            r.converged = r.grad_norm <= opts.grad_tol;
            return r;
        }
        double f_prev = r.value;
        r.x += a * d;
        r.value = f_new;
        r.trace.push_back(r.value);
        r.iterations = it;

        // Polak-Ribiere+ update.
        double beta = std::max(0.0, g_new.dot(g_new - g) / g.dot(g));
        d = -g_new + beta * d;
        g = g_new;

        if (opts.value_tol > 0.0 && std::abs(f_prev - r.value) <= opts.value_tol) {
            r.grad_norm = g.cwiseAbs().maxCoeff();
            r.converged = true;
            return r;
        }
    }
    r.grad_norm = g.cwiseAbs().maxCoeff();
    r.converged = r.grad_norm <= opts.grad_tol;
    return r;
}

BasinHopResult basin_hop(const Objective& f, Eigen::VectorXd x0, const BasinHopOptions& opts) {
    Rng rng(opts.seed);
    BasinHopResult r;

    CgResult cur = cg_minimize(f, std::move(x0), opts.loose);
    r.evaluations = cur.evaluations;
    r.hop_values.push_back(cur.value);
    Eigen::VectorXd best_x = cur.x;
    double best_f = cur.value;
    r.accepted = 0;

    for (int hop = 0; hop < opts.n_hops; ++hop) {
        Eigen::VectorXd trial = cur.x;
        for (Eigen::Index i = 0; i < trial.size(); ++i)
            trial(i) += rng.uniform(-opts.perturb_scale, opts.perturb_scale);
        CgResult relaxed = cg_minimize(f, std::move(trial), opts.loose);
        r.evaluations += relaxed.evaluations;
        r.hop_values.push_back(relaxed.value);

        double delta = relaxed.value - cur.value;
        bool accept = delta < 0.0;
        if (!accept && opts.temperature > 0.0)
            accept = rng.uniform() < std::exp(-delta / opts.temperature);
        if (accept) {
            cur = std::move(relaxed);
            ++r.accepted;
            if (cur.value < best_f) {
                best_f = cur.value;
                best_x = cur.x;
            }
        }
    }

    CgResult fin = cg_minimize(f, std::move(best_x), opts.tight);
    r.evaluations += fin.evaluations;
    r.x = std::move(fin.x);
    r.value = fin.value;
    r.final_trace = std::move(fin.trace);
    return r;
}

}  // namespace asq
