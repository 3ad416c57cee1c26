// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "volalign/bench.hpp"
#include "volalign/gp.hpp"
#include "volalign/oracle.hpp"
#include "volalign/pipeline.hpp"
#include "volalign/wemd.hpp"

using namespace volalign;

namespace {

constexpr int kTrials = 50;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    g_failures += o.pass ? 0 : 1;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int count_below(const std::vector<double>& v, double bound) {
    return static_cast<int>(std::count_if(v.begin(), v.end(), [&](double x) { return x < bound; }));
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0, double e = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d, e);
    return buf;
}

const Volume& reference() {
    static const Volume v = synth_volume(reference_synth_spec(64));
    return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TrialSet {
    std::vector<double> pre;
    std::vector<double> post;
    std::vector<double> shift;
    std::vector<double> bo_loss;
    std::vector<double> seconds;
    std::vector<bool> reflected_ok;
};

TrialSet run_trials(LossKind loss, const SyntheticOptions& so, bool handedness, int trials, std::uint64_t first_seed) {
    TrialSet out;
    for (int k = 0; k < trials; ++k) {
        const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(k);
        const SyntheticPair pair = make_synthetic_pair(reference(), so, seed);
        AlignOptions o;
        o.loss = loss;
        o.seed = seed;
        o.handedness = handedness;
        const auto t0 = std::chrono::steady_clock::now();
        const AlignmentReport r = align_volumes(pair.v1, pair.v2, o, pair.truth);
        out.seconds.push_back(seconds_since(t0));
        out.pre.push_back(*r.error_deg_est);
        out.post.push_back(*r.error_deg);
        out.shift.push_back(*r.translation_error_voxels);
        out.bo_loss.push_back(r.trace.best().loss);
        out.reflected_ok.push_back(r.reflected == pair.truth.reflected);
    }
    return out;
}

// Criterion 7 pieces.
Outcome gp_suite() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n;
    std::vector<Rotation> rs;
    std::vector<double> ys;
    for (int i = 0; i < 20; ++i) {
        rs.push_back(random_rotation(rng));
        ys.push_back(n(rng));
    }

    const auto exact = SurrogateModel::fit(rs, ys, KernelParams{0.75, 1.0, 0.0});
    double interp = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i)
        interp = std::max(interp, std::abs(exact.predict(rs[i]) - ys[i]));

    const auto model = SurrogateModel::fit(rs, ys, KernelParams{0.75, 1.0, 1e-3});
    double grad_excess = 0.0;
    for (std::uint64_t q = 0; q < 20; ++q) {
        const Mat3 x = random_rotation(7000 + q).matrix();
        const Mat3 g = model.gradient(x);
        const Mat3 fd = oracle::finite_diff_gradient([&](const Mat3& z) { return model.evaluate(z); }, x, 1e-5);
        grad_excess = std::max(grad_excess, (g - fd).cwiseAbs().maxCoeff() / (1e-6 * (1.0 + g.norm())));
    }

    auto grown = SurrogateModel::fit({rs[0]}, {ys[0]}, KernelParams{0.75, 1.0, 1e-3});
    for (std::size_t i = 1; i < rs.size(); ++i)
        grown = grown.update(rs[i], ys[i]);
    const auto s3 = SurrogateModel::fit(rs, ys, KernelParams{0.75, 3.0, 0.0});
    double parity = 0.0;
    double sigma_dev = 0.0;
    for (std::uint64_t q = 0; q < 50; ++q) {
        const Rotation x = random_rotation(8000 + q);
        parity = std::max(parity, std::abs(grown.predict(x) - model.predict(x)));
        sigma_dev = std::max(sigma_dev, std::abs(exact.predict(x) - s3.predict(x)));
    }

    Outcome o;
    o.pass = interp < 1e-8 && grad_excess < 1.0 && parity < 1e-8 && sigma_dev < 1e-10;
    o.detail = fmt("interpolation %.2e, gradient/tolerance %.3f, update parity %.2e, sigma deviation %.2e", interp,
                   grad_excess, parity, sigma_dev);
    return o;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

Volume random_volume(int side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> data(static_cast<std::size_t>(side) * side * side);
    for (double& x : data)
        x = u(rng);
    return Volume(side, std::move(data));
}

Volume blob(int side, double sigma) {
    SynthSpec spec;
    spec.side = side;
    GaussianBlob b;
    b.covariance = Mat3::Identity() * sigma * sigma;
    b.weight = 1.0;
    spec.blobs.push_back(b);
    return synth_volume(spec);
}

Outcome wemd_suite() {
    std::vector<std::string> failed;
    std::ostringstream detail;

    // Symmetry and identity.
    bool axioms = true;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Volume a = random_volume(16, 10 + s);
        const Volume b = random_volume(16, 100 + s);
        axioms = axioms && wemd_distance(a, b, 2) == wemd_distance(b, a, 2) && wemd_distance(a, a, 2) == 0.0;
    }
    if (!axioms)
        failed.push_back("axioms");

    int violations = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Volume x = random_volume(16, 300 + 3 * s);
        const Volume y = random_volume(16, 301 + 3 * s);
        const Volume z = random_volume(16, 302 + 3 * s);
        if (wemd_distance(x, z, 2) > wemd_distance(x, y, 2) + wemd_distance(y, z, 2))
            ++violations;
    }
    if (violations)
        failed.push_back("triangle");

    const Volume g = blob(32, 3.0);
    std::vector<double> d;
    std::vector<double> w;
    bool increasing = true;
    for (int s = 1; s <= 6; ++s) {
        d.push_back(s);
        w.push_back(wemd_distance(g, shift(g, Vec3(s, 0, 0)), default_wavelet_levels(32)));
        if (w.size() > 1 && w.back() <= w[w.size() - 2])
            increasing = false;
    }
    const double r = pearson(d, w);
    if (!increasing || !(r > 0.99))
        failed.push_back("translation");
    detail << "translation Pearson r = " << r;

    const Volume v = downsample(reference(), 32);
    const Vec3 axis = Vec3(0.2, -0.7, 0.4).normalized();
    double previous = 0.0;
    bool rotation_ok = true;
    for (int deg = 2; deg <= 20; deg += 2) {
        const double x = wemd_distance(rotate(v, exp_map(axis * deg_to_rad(deg))), v, default_wavelet_levels(32));
        rotation_ok = rotation_ok && x > previous;
        previous = x;
    }
    if (!rotation_ok)
        failed.push_back("rotation");

    double worst = 0.0;
    const Volume small = random_volume(8, 77);
    for (int levels : {1, 2}) {
        const auto fast = dwt3(small, levels, WaveletFilter::sym3());
        const auto ref = oracle::dwt3_by_lines(small, levels, WaveletFilter::sym3());
        for (std::size_t b = 0; b < ref.details.size(); ++b)
            for (std::size_t i = 0; i < ref.details[b].coefficients.size(); ++i)
                worst = std::max(worst, std::abs(fast.details[b].coefficients[i] - ref.details[b].coefficients[i]));
        for (std::size_t i = 0; i < ref.approximation.coefficients.size(); ++i)
            worst = std::max(worst, std::abs(fast.approximation.coefficients[i] - ref.approximation.coefficients[i]));
    }
    if (!(worst < 1e-10))
        failed.push_back("dwt oracle");
    detail << ", dwt deviation " << worst;

    const Volume p = blob(32, 2.0);
    const auto dec = dwt3(p, 2, WaveletFilter::sym3());
    double energy = 0.0;
    for (const auto& band : dec.details)
        for (double x : band.coefficients)
            energy += x * x;
    for (double x : dec.approximation.coefficients)
        energy += x * x;
    const double parseval = std::abs(energy / p.norm_squared() - 1.0);
    if (!(parseval < 1e-6))
        failed.push_back("parseval");
    detail << ", Parseval deviation " << parseval << ", triangle violations " << violations;

    Outcome o;
    o.pass = failed.empty();
    if (!failed.empty()) {
        detail << "; failed:";
        for (const auto& f : failed)
            detail << ' ' << f;
    }
    o.detail = detail.str();
    return o;
}

bool same_rows(const std::vector<BenchRow>& a, const std::vector<BenchRow>& b) {
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].seed != b[i].seed || a[i].error_deg_pre != b[i].error_deg_pre ||
            a[i].error_deg_post != b[i].error_deg_post || a[i].translation_error != b[i].translation_error ||
            a[i].status != b[i].status)
            return false;
    return true;
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    std::printf("acceptance: %d trials per protocol, reference volume L=64, (L0, T) = (32, 200)\n", kTrials);

    const TrialSet wemd = run_trials(LossKind::Wemd, SyntheticOptions{}, false, kTrials, 0);
    {
        const double m = median(wemd.pre);
        const int under = count_below(wemd.pre, 10.0);
        Outcome o;
        o.pass = m < 5.0 && under >= 45;
        o.detail = fmt("median pre-refinement error %.2f deg, %.0f/50 below 10 deg, median %.2f s per trial", m, under,
                       median(wemd.seconds));
        report(1, "rotation recovery", o);
    }
    {
        const double m = median(wemd.post);
        const int under = count_below(wemd.post, 2.0);
        Outcome o;
        o.pass = m < 1.0 && under >= 45;
        o.detail = fmt("median refined error %.3f deg, %.0f/50 below 2 deg", m, under);
        report(2, "refinement", o);
    }
    {
        const TrialSet l2 = run_trials(LossKind::L2, SyntheticOptions{}, false, kTrials, 0);
        const double mw = median(wemd.pre);
        const double ml = median(l2.pre);
        report(3, "WEMD vs L2", {mw <= ml, fmt("pre-refinement median: WEMD %.2f deg, L2 %.2f deg", mw, ml)});
    }
    {
        const int ok = count_below(wemd.shift, 0.5);
        report(4, "translation recovery",
               {ok == kTrials, fmt("%.0f/50 within 0.5 voxel, worst %.2e voxel", ok,
                                   *std::max_element(wemd.shift.begin(), wemd.shift.end()))});
    }
    {
        bool pass = true;
        std::string detail;
        const int trials = 20;
        for (int inv : {4, 8, 16}) {
            SyntheticOptions so;
            so.snr = 1.0 / inv;
            so.shift_scale = 0.0;
            const TrialSet t = run_trials(LossKind::Wemd, so, false, trials, 1000);
            const double m = median(t.post);
            pass = pass && m < 3.0;
            detail += fmt("SNR 1/%.0f median %.2f deg (%.0f trials); ", inv, m, trials);
        }
        detail.resize(detail.size() - 2);
        report(5, "noise robustness", {pass, detail});
    }
    {
        const oracle::RotationGrid grid = oracle::build_grid(15.0);
        int wins = 0;
        for (int k = 0; k < kTrials; ++k) {
            const SyntheticPair pair = make_synthetic_pair(reference(), SyntheticOptions{}, static_cast<std::uint64_t>(k));
            const StageVolumes stage = prepare_stage(center_pair(pair.v1, pair.v2), 32, false);
            const RotationLoss loss = make_loss(stage.fixed, stage.moving, LossKind::Wemd);
            const double grid_loss = oracle::grid_search_align(loss, grid).loss;
            wins += wemd.bo_loss[static_cast<std::size_t>(k)] <= grid_loss ? 1 : 0;
        }
        report(6, "oracle equivalence",
               {wins >= 45, fmt("BO loss <= grid search loss (%.0f rotations) on %.0f/50 seeds",
                                static_cast<double>(grid.rotations.size()), wins)});
    }
    report(7, "GP correctness", gp_suite());
    report(8, "WEMD metric suite", wemd_suite());
    {
        const Volume v = downsample(reference(), 32);
        const Landscape w = loss_landscape(v, LossKind::Wemd);
        const Landscape l = loss_landscape(v, LossKind::L2);
        report(9, "landscape basin",
               {w.basin_size >= l.basin_size,
                fmt("basin points on the 21x21 grid: WEMD %.0f, L2 %.0f", w.basin_size, l.basin_size)});
    }
    {
        SyntheticOptions so;
        so.reflect = true;
        const TrialSet t = run_trials(LossKind::Wemd, so, true, kTrials, 2000);
        int ok = 0;
        int flags = 0;
        for (int k = 0; k < kTrials; ++k) {
            const auto i = static_cast<std::size_t>(k);
            flags += t.reflected_ok[i] ? 1 : 0;
            ok += t.reflected_ok[i] && t.post[i] < 1.0 ? 1 : 0;
        }
        report(10, "handedness",
               {ok >= 45, fmt("%.0f/50 with correct flag and refined error < 1 deg (flag correct in %.0f)", ok, flags)});
    }
    {
        const double t32 = median_loss_seconds(reference(), 32, LossKind::Wemd, 20, 11);
        const double t64 = median_loss_seconds(reference(), 64, LossKind::Wemd, 20, 11);
        const double ratio = t64 / t32;
        report(11, "complexity corridor",
               {ratio >= 6.0 && ratio <= 12.0,
                fmt("median WEMD evaluation %.2f ms at L0=32, %.2f ms at L0=64, ratio %.2f", 1e3 * t32, 1e3 * t64,
                    ratio)});
    }
    {
        const SyntheticPair a = make_synthetic_pair(reference(), SyntheticOptions{}, 77);
        const SyntheticPair b = make_synthetic_pair(reference(), SyntheticOptions{}, 77);
        bool same = a.v1 == b.v1 && a.v2 == b.v2 && a.truth.rotation == b.truth.rotation;
        AlignOptions o;
        o.seed = 77;
        const AlignmentReport ra = align_volumes(a.v1, a.v2, o, a.truth);
        const AlignmentReport rb = align_volumes(b.v1, b.v2, o, b.truth);
        same = same && ra.rotation_est == rb.rotation_est && *ra.rotation_refined == *rb.rotation_refined &&
               ra.translation == rb.translation && ra.trace.records.size() == rb.trace.records.size();
        for (std::size_t i = 0; same && i < ra.trace.records.size(); ++i)
            same = ra.trace.records[i].loss == rb.trace.records[i].loss &&
                   ra.trace.records[i].candidate == rb.trace.records[i].candidate;

        BenchConfig cfg;
        cfg.trials = 3;
        cfg.iterations = {60};
        cfg.losses = {LossKind::Wemd, LossKind::L2};
        cfg.seed = 5;
        cfg.jobs = 2;
        const bool bench_same = same_rows(run_bench(cfg), run_bench(cfg));
        report(12, "determinism",
               {same && bench_same, std::string("synthesis and alignment ") + (same ? "identical" : "differ") +
                                        ", bench rows " + (bench_same ? "identical" : "differ")});
    }

    std::printf("acceptance: %d failing criteria, %.0f s total\n", g_failures, seconds_since(start));
    return g_failures == 0 ? 0 : 1;
}
