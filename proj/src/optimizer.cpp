#include "volalign/optimizer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "volalign/error.hpp"

namespace volalign {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 20;

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(sub)};
    return std::mt19937_64(seq);
}

Mat3 tangent_projection(const Mat3& x, const Mat3& g) {
    const Mat3 xtg = x.transpose() * g;
    return g - x * (0.5 * (xtg + xtg.transpose()));
}

std::string describe(const Rotation& r) {
    std::ostringstream out;
    out << '[';
    const auto v = r.row_major();
    for (std::size_t i = 0; i < v.size(); ++i)
        out << (i ? ", " : "") << v[i];
    out << ']';
    return out.str();
}

double checked_loss(const RotationLoss& loss, const Rotation& r) {
    const double value = loss(r);
    if (!std::isfinite(value))
        throw EvaluationError("loss returned a non-finite value at rotation " + describe(r));
    return value;
}

} // namespace

void BoConfig::validate() const {
    if (iterations < 1)
        throw ArgumentError("BO iteration count must be at least 1");
    if (static_cast<int>(initial_candidates.size()) > iterations)
        throw ArgumentError("more initial candidates than BO iterations");
    if (!(gradient_tolerance > 0.0) || !(step_tolerance > 0.0))
        throw ArgumentError("inner solver thresholds must be positive");
    if (inner_max_iterations < 1 || inner_restarts < 1)
        throw ArgumentError("inner solver iteration cap and restarts must be positive");
    kernel.validate();
}

SurrogateSolve descend_surrogate(const SurrogateModel& model, const BoConfig& cfg, const Rotation& start) {
    Rotation x = start;
    Mat3 grad;
    double f = model.evaluate_with_gradient(x.matrix(), grad);
    Mat3 tangent = tangent_projection(x.matrix(), grad);
    double gnorm = tangent.norm();

    SurrogateSolve result{x, f, gnorm, 0.0, 0, SolverStop::IterationCap};
    for (int it = 0; it < cfg.inner_max_iterations; ++it) {
        if (gnorm == 0.0) {
            result.stop = SolverStop::Converged;
            break;
        }
        double alpha = 1.0;
        std::optional<Rotation> accepted;
        for (int h = 0; h <= kMaxHalvings; ++h, alpha *= 0.5) {
            const Rotation trial = project_to_rotation(x.matrix() - alpha * tangent);
            const double f_trial = model.evaluate(trial.matrix());
            if (f_trial <= f - kArmijo * alpha * gnorm * gnorm) {
                accepted = trial;
                break;
            }
        }
        result.iterations = it + 1;
        if (!accepted) {
            result.last_step = 0.0;
            result.stop = SolverStop::Stalled;
            break;
        }
        const double step = (accepted->matrix() - x.matrix()).norm();
        x = *accepted;
        f = model.evaluate_with_gradient(x.matrix(), grad);
        tangent = tangent_projection(x.matrix(), grad);
        gnorm = tangent.norm();
        result.last_step = step;
        if (gnorm < cfg.gradient_tolerance && step < cfg.step_tolerance) {
            result.stop = SolverStop::Converged;
            break;
        }
    }
    result.point = x;
    result.value = f;
    result.gradient_norm = gnorm;
    return result;
}

SurrogateSolve minimize_surrogate(const SurrogateModel& model, const BoConfig& cfg, std::uint64_t seed) {
    std::optional<SurrogateSolve> best;
    for (int restart = 0; restart < cfg.inner_restarts; ++restart) {
        auto rng = seeded_rng(seed, 0x5eed, static_cast<std::uint64_t>(restart));
        SurrogateSolve s = descend_surrogate(model, cfg, random_rotation(rng));
        if (!best || s.value < best->value)
            best = std::move(s);
    }
    return *best;
}

BoResult bo_align(const RotationLoss& loss, const BoConfig& cfg) {
    cfg.validate();
    using Clock = std::chrono::steady_clock;

    BoTrace trace;
    std::vector<Rotation> initial = cfg.initial_candidates;
    if (initial.empty()) {
        auto rng = seeded_rng(cfg.seed, 0x1417);
        initial.push_back(random_rotation(rng));
    }

    std::vector<double> values;
    for (const auto& r : initial) {
        const auto t0 = Clock::now();
        const double y = checked_loss(loss, r);
        const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
        trace.records.push_back({static_cast<int>(trace.records.size()) + 1, r, y, dt});
        values.push_back(y);
    }

    std::optional<SurrogateModel> model;
    for (int t = static_cast<int>(trace.records.size()); t < cfg.iterations; ++t) {
        const auto t0 = Clock::now();
        if (!model)
            model = SurrogateModel::fit(initial, values, cfg.kernel);
        else {
            const auto& last = trace.records.back();
            model = model->update(last.candidate, last.loss);
        }
        SurrogateSolve solve = minimize_surrogate(*model, cfg, cfg.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t + 1)));
        const double y = checked_loss(loss, solve.point);
        const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
        trace.records.push_back({t + 1, solve.point, y, dt});
        trace.solves.push_back(std::move(solve));
    }

    for (std::size_t i = 1; i < trace.records.size(); ++i)
        if (trace.records[i].loss < trace.records[trace.best_index].loss)
            trace.best_index = i;
    Rotation best = trace.records[trace.best_index].candidate;
    return {best, std::move(trace)};
}

RefineResult nelder_mead_refine(const RotationLoss& loss, const Rotation& init, double radius_deg,
                                const NelderMeadOptions& options) {
    if (!(radius_deg > 0.0 && radius_deg <= 30.0))
        throw ArgumentError("Nelder-Mead radius must lie in (0, 30] degrees");
    if (options.max_evaluations < 4)
        throw ArgumentError("Nelder-Mead needs at least 4 evaluations for the initial simplex");

    constexpr double kReflect = 1.0;
    constexpr double kExpand = 2.0;
    constexpr double kContract = 0.5;
    constexpr double kShrink = 0.5;

    int evaluations = 0;
    auto f = [&](const Vec3& w) {
        ++evaluations;
        return checked_loss(loss, exp_map(w) * init);
    };

    struct Vertex {
        Vec3 w;
        double value;
    };
    const double r = deg_to_rad(radius_deg);
    std::array<Vertex, 4> simplex{{{Vec3::Zero(), 0.0}, {r * Vec3::UnitX(), 0.0},
                                   {r * Vec3::UnitY(), 0.0}, {r * Vec3::UnitZ(), 0.0}}};
    for (auto& v : simplex)
        v.value = f(v.w);

    const int budget = options.max_evaluations;
    for (;;) {
        std::stable_sort(simplex.begin(), simplex.end(),
                         [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
        double diameter = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i)
            diameter = std::max(diameter, (simplex[i].w - simplex[0].w).norm());
        const double spread = simplex.back().value - simplex.front().value;
        if (diameter < options.diameter_tolerance || spread < options.spread_tolerance || evaluations >= budget)
            break;

        const Vec3 centroid = (simplex[0].w + simplex[1].w + simplex[2].w) / 3.0;
        Vertex& worst = simplex[3];
        const Vec3 xr = centroid + kReflect * (centroid - worst.w);
        const double fr = f(xr);

        if (fr < simplex[0].value) {
            if (evaluations >= budget) {
                worst = {xr, fr};
                continue;
            }
            const Vec3 xe = centroid + kExpand * (xr - centroid);
            const double fe = f(xe);
            worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
            continue;
        }
        if (fr < simplex[2].value) {
            worst = {xr, fr};
            continue;
        }
        if (evaluations >= budget) {
            if (fr < worst.value)
                worst = {xr, fr};
            continue;
        }
        if (fr < worst.value) {
            const Vec3 xc = centroid + kContract * (xr - centroid);
            const double fc = f(xc);
            if (fc <= fr) {
                worst = {xc, fc};
                continue;
            }
        } else {
            const Vec3 xc = centroid + kContract * (worst.w - centroid);
            const double fc = f(xc);
            if (fc < worst.value) {
                worst = {xc, fc};
                continue;
            }
        }
        if (evaluations + 3 > budget)
            break;
        for (std::size_t i = 1; i < simplex.size(); ++i) {
            simplex[i].w = simplex[0].w + kShrink * (simplex[i].w - simplex[0].w);
            simplex[i].value = f(simplex[i].w);
        }
    }

    const auto best = std::min_element(simplex.begin(), simplex.end(),
                                       [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
    return {exp_map(best->w) * init, best->value, evaluations};
}

} // namespace volalign
