#include "volalign/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "volalign/error.hpp"

namespace volalign {

using nlohmann::json;

namespace {

double quantile(std::vector<double> v, double q) {
    if (v.empty())
        return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

json describe(const std::vector<double>& v) {
    if (v.empty())
        return nullptr;
    return {{"median", quantile(v, 0.5)}, {"q1", quantile(v, 0.25)}, {"q3", quantile(v, 0.75)},
            {"max", *std::max_element(v.begin(), v.end())}};
}

double fraction_below(const std::vector<double>& v, double limit) {
    if (v.empty())
        return 0.0;
    return static_cast<double>(std::count_if(v.begin(), v.end(), [limit](double x) { return x < limit; })) /
           static_cast<double>(v.size());
}

std::string format_optional(const std::optional<double>& v) {
    if (!v)
        return "";
    std::ostringstream out;
    out.precision(10);
    out << *v;
    return out.str();
}

} // namespace

std::string format_snr(double snr) {
    if (std::isinf(snr))
        return "inf";
    std::ostringstream out;
    out.precision(10);
    out << snr;
    return out.str();
}

SyntheticPair make_synthetic_pair(const Volume& reference, const SyntheticOptions& options, std::uint64_t seed) {
    if (!(options.shift_scale >= 0.0 && options.shift_scale < 0.5))
        throw ArgumentError("shift scale must lie in [0, 0.5)");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5a17u};
    std::mt19937_64 rng(seq);
    const Rotation r = random_rotation(rng);
    const double s = options.shift_scale * reference.side();
    std::uniform_real_distribution<double> uniform(-s, s);
    Vec3 t = Vec3::Zero();
    if (s > 0.0)
        t = Vec3(uniform(rng), uniform(rng), uniform(rng));
    const std::uint64_t noise_seed_1 = rng();
    const std::uint64_t noise_seed_2 = rng();

    const Volume source = options.reflect ? reflect(reference) : reference;
    Volume v2 = shift(rotate(source, r), t);
    Volume v1 = reference;
    if (!std::isinf(options.snr)) {
        v1 = add_noise(v1, options.snr, noise_seed_1);
        v2 = add_noise(v2, options.snr, noise_seed_2);
    }
    return {std::move(v1), std::move(v2), GroundTruth{r, t, options.reflect}};
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    if (cfg.trials < 1 || cfg.downsample.empty() || cfg.iterations.empty() || cfg.losses.empty() ||
        cfg.snrs.empty())
        throw ArgumentError("empty benchmark trial matrix");
    if (cfg.jobs < 1)
        throw ArgumentError("job count must be positive");

    const SynthSpec spec = cfg.blobs > 0 ? random_synth_spec(cfg.side, cfg.blobs, cfg.seed)
                                         : reference_synth_spec(cfg.side);
    const Volume reference = synth_volume(spec);

    struct Job {
        int trial;
        double snr;
        LossKind loss;
        int downsample;
        int iterations;
    };
    std::vector<Job> jobs;
    for (double snr : cfg.snrs)
        for (LossKind loss : cfg.losses)
            for (int ds : cfg.downsample)
                for (int it : cfg.iterations)
                    for (int trial = 0; trial < cfg.trials; ++trial)
                        jobs.push_back({trial, snr, loss, ds, it});

    std::vector<BenchRow> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            BenchRow& row = rows[i];
            row.seed = cfg.seed + static_cast<std::uint64_t>(job.trial);
            row.loss = job.loss;
            row.downsample = job.downsample;
            row.iterations = job.iterations;
            row.snr = job.snr;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                SyntheticOptions so;
                so.shift_scale = cfg.shift_scale;
                so.snr = job.snr;
                so.reflect = cfg.reflect;
                const SyntheticPair pair = make_synthetic_pair(reference, so, row.seed);

                AlignOptions opts;
                opts.downsample = job.downsample;
                opts.iterations = job.iterations;
                opts.loss = job.loss;
                opts.lengthscale = cfg.lengthscale;
                opts.refine = cfg.refine;
                opts.handedness = cfg.handedness;
                opts.threshold = cfg.threshold;
                opts.wavelet_levels = cfg.wavelet_levels;
                opts.seed = row.seed;
                const AlignmentReport report = align_volumes(pair.v1, pair.v2, opts, pair.truth);
                row.error_deg_pre = report.error_deg_est;
                if (report.rotation_refined)
                    row.error_deg_post = report.error_deg;
                row.translation_error = report.translation_error_voxels;
                if (cfg.handedness)
                    row.reflection_correct = report.reflected == pair.truth.reflected;
            } catch (const std::exception& e) {
                row.status = std::string("failed: ") + e.what();
            }
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };

    const int threads = std::min<int>(cfg.jobs, static_cast<int>(jobs.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "seed,loss,L0,T,snr,error_deg_pre,error_deg_post,translation_error,reflection_correct,seconds,status\n";
    for (const auto& r : rows) {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        out << r.seed << ',' << to_string(r.loss) << ',' << r.downsample << ',' << r.iterations << ','
            << format_snr(r.snr) << ',' << format_optional(r.error_deg_pre) << ','
            << format_optional(r.error_deg_post) << ',' << format_optional(r.translation_error) << ','
            << (r.reflection_correct ? (*r.reflection_correct ? "1" : "0") : "") << ',' << r.seconds << ','
            << status << '\n';
    }
    return out.str();
}

json bench_summary(const std::vector<BenchRow>& rows) {
    using Key = std::tuple<std::string, int, int, std::string>;
    std::map<Key, std::vector<const BenchRow*>> cells;
    for (const auto& r : rows)
        cells[{to_string(r.loss), r.downsample, r.iterations, format_snr(r.snr)}].push_back(&r);

    json out = json::array();
    for (const auto& [key, members] : cells) {
        std::vector<double> pre;
        std::vector<double> post;
        std::vector<double> trans;
        std::vector<double> secs;
        int failed = 0;
        int reflection_ok = 0;
        int reflection_checked = 0;
        for (const BenchRow* r : members) {
            if (r->status != "ok") {
                ++failed;
                continue;
            }
            if (r->error_deg_pre)
                pre.push_back(*r->error_deg_pre);
            if (r->error_deg_post)
                post.push_back(*r->error_deg_post);
            if (r->translation_error)
                trans.push_back(*r->translation_error);
            if (r->reflection_correct) {
                ++reflection_checked;
                reflection_ok += *r->reflection_correct ? 1 : 0;
            }
            secs.push_back(r->seconds);
        }
        json cell = {{"loss", std::get<0>(key)},
                     {"L0", std::get<1>(key)},
                     {"T", std::get<2>(key)},
                     {"snr", std::get<3>(key)},
                     {"trials", members.size()},
                     {"failed", failed},
                     {"error_deg_pre", describe(pre)},
                     {"error_deg_post", describe(post)},
                     {"translation_error", describe(trans)},
                     {"seconds", describe(secs)},
                     {"fraction_pre_below_5", fraction_below(pre, 5.0)},
                     {"fraction_pre_below_10", fraction_below(pre, 10.0)},
                     {"fraction_post_below_1", fraction_below(post, 1.0)},
                     {"fraction_post_below_2", fraction_below(post, 2.0)},
                     {"fraction_translation_below_0.5", fraction_below(trans, 0.5)}};
        if (reflection_checked > 0)
            cell["reflection_correct"] = reflection_ok;
        out.push_back(std::move(cell));
    }
    return out;
}

} // namespace volalign
