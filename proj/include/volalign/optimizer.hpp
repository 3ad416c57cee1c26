#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "volalign/gp.hpp"
#include "volalign/so3.hpp"

namespace volalign {

using RotationLoss = std::function<double(const Rotation&)>;

struct BoConfig {
    int iterations = 200; // total loss evaluations T, initial candidates included
    std::vector<Rotation> initial_candidates{Rotation::identity()};
    KernelParams kernel{};
    // The inner solver stops once both the tangent-gradient norm and the last
    // step fall below these.
    double gradient_tolerance = 0.1;
    double step_tolerance = 0.1;
    int inner_max_iterations = 100;
    int inner_restarts = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class SolverStop { Converged, IterationCap, Stalled };

struct SurrogateSolve {
    Rotation point;
    double value = 0.0;
    double gradient_norm = 0.0; // tangent-gradient norm at `point`
    double last_step = 0.0;     // Frobenius norm of the final step
    int iterations = 0;
    SolverStop stop = SolverStop::Converged;
};

// Riemannian steepest descent on the surrogate from a Haar-random start drawn
// from `seed`; with cfg.inner_restarts > 1 the lowest final value wins.
SurrogateSolve minimize_surrogate(const SurrogateModel& model, const BoConfig& cfg, std::uint64_t seed);

// Single descent run from a given start. Tangent projection G - x sym(x^T G),
// polar retraction, Armijo backtracking from a unit step.
SurrogateSolve descend_surrogate(const SurrogateModel& model, const BoConfig& cfg, const Rotation& start);

struct BoRecord {
    int iteration = 0;
    Rotation candidate;
    double loss = 0.0;
    double seconds = 0.0;
};

struct BoTrace {
    std::vector<BoRecord> records;
    std::size_t best_index = 0; // first index attaining the minimum loss
    std::vector<SurrogateSolve> solves; // one per surrogate-proposed candidate

    [[nodiscard]] const BoRecord& best() const { return records.at(best_index); }
};

struct BoResult {
    Rotation best;
    BoTrace trace;
};

// Bayesian optimization over SO(3) with the GP-interpolant acquisition.
// Performs exactly cfg.iterations loss evaluations. Throws EvaluationError if
// the loss returns a non-finite value.
BoResult bo_align(const RotationLoss& loss, const BoConfig& cfg);

struct NelderMeadOptions {
    double diameter_tolerance = 1e-4; // radians
    double spread_tolerance = 1e-10;
    int max_evaluations = 500;
};

struct RefineResult {
    Rotation rotation;
    double loss = 0.0;
    int evaluations = 0;
};

// Nelder-Mead over axis-angle coordinates w, with R(w) = exp(w) * init and an
// initial simplex {0, r e1, r e2, r e3}, r = radius in radians.
// radius_deg must lie in (0, 30].
RefineResult nelder_mead_refine(const RotationLoss& loss, const Rotation& init, double radius_deg,
                                const NelderMeadOptions& options = {});

} // namespace volalign
