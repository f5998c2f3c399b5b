#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lzspa/corpus.hpp"
#include "lzspa/errors.hpp"
#include "lzspa/types.hpp"

namespace lzspa {

inline constexpr std::uint32_t kStepsPerMeasure = 16;   // 16th-note grid, 4/4
inline constexpr std::uint32_t kWindowTokens = 4 * kStepsPerMeasure;
inline constexpr std::uint32_t kHopTokens = 2 * kStepsPerMeasure;
inline constexpr double kSigmaFloor = 1e-6;
inline constexpr double kKlSmoothing = 1e-9;

/// Gaussian fit of the pitch and duration samples inside one 4-measure
/// window. A window with no note onsets is "empty" and takes no part in
/// overlap statistics.
struct WindowStats {
    double pitch_mean = 0.0;
    double pitch_std = kSigmaFloor;
    double duration_mean = 0.0;
    double duration_std = kSigmaFloor;
    std::size_t note_count = 0;

    bool empty() const { return note_count == 0; }
};

namespace metrics_detail {

inline std::pair<double, double> fit_gaussian(const std::vector<double>& samples) {
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= n; // population fit; a single sample degenerates to the floor
    return {mean, std::max(std::sqrt(var), kSigmaFloor)};
}

inline double normal_cdf(double x, double mu, double sigma) {
    return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

} // namespace metrics_detail

/// Sliding 4-measure windows with a 2-measure hop. Pitch samples are the
/// onset token values (>= 2); each onset also contributes one duration
/// sample, 1 + the length of its continuation run in grid steps. A note
/// belongs to the window containing its onset and its duration is not
/// split at the window edge.
inline std::vector<WindowStats> window_stats(const TokenSequence& seq) {
    if (seq.size() < kWindowTokens)
        throw InvalidArgument("window_stats: sequence shorter than one 4-measure window");
    std::vector<WindowStats> windows;
    for (std::size_t start = 0; start + kWindowTokens <= seq.size(); start += kHopTokens) {
        std::vector<double> pitches;
        std::vector<double> durations;
        for (std::size_t i = start; i < start + kWindowTokens; ++i) {
            if (seq[i] < 2) continue;
            pitches.push_back(static_cast<double>(seq[i]));
            std::size_t end = i + 1;
            while (end < seq.size() && seq[end] == 1) ++end;
            durations.push_back(static_cast<double>(end - i));
        }
        WindowStats w;
        w.note_count = pitches.size();
        if (!pitches.empty()) {
            auto [pm, ps] = metrics_detail::fit_gaussian(pitches);
            auto [dm, ds] = metrics_detail::fit_gaussian(durations);
            w.pitch_mean = pm;
            w.pitch_std = ps;
            w.duration_mean = dm;
            w.duration_std = ds;
        }
        windows.push_back(w);
    }
    return windows;
}

/// Equal-density point of two Gaussian pdfs. With equal spreads this is
/// the midpoint of the means; otherwise it is the root of the equal-
/// density quadratic that lies between the means (falling back to the
/// root nearer their midpoint).
inline double gaussian_intersection(double mu1, double sigma1, double mu2, double sigma2) {
    if (!std::isfinite(mu1) || !std::isfinite(mu2) || !std::isfinite(sigma1) ||
        !std::isfinite(sigma2))
        throw InvalidArgument("gaussian_intersection: non-finite input");
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
        throw InvalidArgument("gaussian_intersection: spreads must be positive");

    if (sigma1 == sigma2) return 0.5 * (mu1 + mu2);

    // (x-mu2)^2/s2^2 - (x-mu1)^2/s1^2 = 2 ln(s1/s2), written as ax^2+bx+c=0
    const double is1 = 1.0 / (sigma1 * sigma1), is2 = 1.0 / (sigma2 * sigma2);
    const double a = is2 - is1;
    const double b = -2.0 * (mu2 * is2 - mu1 * is1);
    const double c = mu2 * mu2 * is2 - mu1 * mu1 * is1 - 2.0 * std::log(sigma1 / sigma2);
    const double disc = b * b - 4.0 * a * c;
    const double sq = std::sqrt(std::max(disc, 0.0));
    // stable quadratic: avoid cancellation between -b and the radical
    const double q = -0.5 * (b + std::copysign(sq, b));
    double r1 = q / a;
    double r2 = (q != 0.0) ? c / q : -b / a - r1;
    if (r1 > r2) std::swap(r1, r2);

    const double lo = std::min(mu1, mu2), hi = std::max(mu1, mu2);
    const double mid = 0.5 * (mu1 + mu2);
    const bool r1_between = r1 >= lo && r1 <= hi;
    const bool r2_between = r2 >= lo && r2 <= hi;
    if (r1_between != r2_between) return r1_between ? r1 : r2;
    // both or neither between the means: take the root nearer the midpoint
    return std::abs(r1 - mid) <= std::abs(r2 - mid) ? r1 : r2;
}

/// Area under min(pdf1, pdf2) for two Gaussians, in [0, 1]. With equal
/// spreads the densities cross once and the area is the classic pair of
/// half-erf terms around the intersection; unequal spreads cross twice,
/// and both crossings are integrated so the result matches numerical
/// integration, not just the between-the-means approximation.
inline double overlap_area(double mu1, double sigma1, double mu2, double sigma2) {
    if (!std::isfinite(mu1) || !std::isfinite(mu2) || !std::isfinite(sigma1) ||
        !std::isfinite(sigma2))
        throw InvalidArgument("overlap_area: non-finite input");
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
        throw InvalidArgument("overlap_area: spreads must be positive");

    using metrics_detail::normal_cdf;
    constexpr double kRelTol = 1e-12;
    if (std::abs(sigma1 - sigma2) <= kRelTol * std::max(sigma1, sigma2)) {
        if (mu1 == mu2) return 1.0;
        const double c = gaussian_intersection(mu1, sigma1, mu2, sigma2);
        const double lo = std::min(mu1, mu2), hi = std::max(mu1, mu2);
        const double sigma = sigma1;
        const double area =
            normal_cdf(c, hi, sigma) + 1.0 - normal_cdf(c, lo, sigma);
        return std::clamp(area, 0.0, 1.0);
    }

    // narrow wins both tails, wide wins between the two crossings
    const double mun = sigma1 < sigma2 ? mu1 : mu2;
    const double sn = std::min(sigma1, sigma2);
    const double muw = sigma1 < sigma2 ? mu2 : mu1;
    const double sw = std::max(sigma1, sigma2);

    const double isn = 1.0 / (sn * sn), isw = 1.0 / (sw * sw);
    const double a = isw - isn;
    const double b = -2.0 * (muw * isw - mun * isn);
    const double c = muw * muw * isw - mun * mun * isn - 2.0 * std::log(sn / sw);
    const double disc = b * b - 4.0 * a * c;
    if (disc <= 0.0) return 1.0; // tangent densities: overlap is total
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(sq, b));
    double r1 = q / a;
    double r2 = c / q;
    if (r1 > r2) std::swap(r1, r2);

    const double area = normal_cdf(r1, mun, sn) + (1.0 - normal_cdf(r2, mun, sn)) +
                        (normal_cdf(r2, muw, sw) - normal_cdf(r1, muw, sw));
    return std::clamp(area, 0.0, 1.0);
}

/// Mean and (unbiased) variance of a pool of overlap areas.
struct OaSummary {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t count = 0;
};

inline OaSummary summarize(std::span<const double> values) {
    OaSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() >= 2) {
        for (double v : values) s.variance += (v - s.mean) * (v - s.mean);
        s.variance /= static_cast<double>(values.size() - 1);
    }
    return s;
}

struct ConsistencyVariance {
    double consistency = 0.0;
    double variance = 0.0;
};

/// C = max(0, 1 - |mu_OA - mu_GT| / mu_GT) and the analogous clamped
/// relative agreement of the OA variances.
inline ConsistencyVariance consistency_variance(const OaSummary& generated,
                                                const OaSummary& ground_truth) {
    if (ground_truth.count == 0 || generated.count == 0)
        throw NotComputable("consistency_variance: no overlap areas to compare");
    if (!(ground_truth.mean > 0.0))
        throw NotComputable("consistency_variance: ground-truth OA mean is zero");
    if (!(ground_truth.variance > 0.0))
        throw NotComputable("consistency_variance: ground-truth OA variance is zero");
    ConsistencyVariance cv;
    cv.consistency =
        std::max(0.0, 1.0 - std::abs(generated.mean - ground_truth.mean) / ground_truth.mean);
    cv.variance = std::max(0.0, 1.0 - std::abs(generated.variance - ground_truth.variance) /
                                          ground_truth.variance);
    return cv;
}

/// KL divergence in nats between two histograms after additive smoothing
/// and normalization. Inputs may be raw counts or masses.
inline double kl_divergence(std::span<const double> p_hist, std::span<const double> q_hist) {
    if (p_hist.size() != q_hist.size())
        throw DimensionMismatch("kl_divergence: histogram lengths differ");
    if (p_hist.empty()) throw InvalidArgument("kl_divergence: empty histograms");
    double p_total = 0.0, q_total = 0.0;
    for (double v : p_hist) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidArgument("kl_divergence: negative or non-finite bin");
        p_total += v + kKlSmoothing;
    }
    for (double v : q_hist) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidArgument("kl_divergence: negative or non-finite bin");
        q_total += v + kKlSmoothing;
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p_hist.size(); ++i) {
        const double p = (p_hist[i] + kKlSmoothing) / p_total;
        const double q = (q_hist[i] + kKlSmoothing) / q_total;
        kl += p * std::log(p / q);
    }
    return std::max(kl, 0.0);
}

/// Order-1 Wasserstein distance between two empirical distributions via
/// quantile coupling: the matched-order mean for equal sizes, piecewise
/// CDF integration otherwise.
inline double wasserstein_1d(std::span<const double> x_samples,
                             std::span<const double> y_samples) {
    if (x_samples.empty() || y_samples.empty())
        throw InvalidArgument("wasserstein_1d: empty sample set");
    std::vector<double> x(x_samples.begin(), x_samples.end());
    std::vector<double> y(y_samples.begin(), y_samples.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());

    if (x.size() == y.size()) {
        double total = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) total += std::abs(x[i] - y[i]);
        return total / static_cast<double>(x.size());
    }

    // integrate |F_x(t) - F_y(t)| between consecutive breakpoints
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double prev = std::min(x[0], y[0]);
    double total = 0.0;
    while (i < x.size() || j < y.size()) {
        const double t = (j >= y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
        total += std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny) *
                 (t - prev);
        prev = t;
        while (i < x.size() && x[i] == t) ++i;
        while (j < y.size() && y[j] == t) ++j;
    }
    return total;
}

/// Pools of adjacent-window overlap areas over a whole corpus, one value
/// per (window, next window) pair whose sides both contain notes.
struct OaPools {
    std::vector<double> pitch;
    std::vector<double> duration;
};

inline OaPools collect_overlap_areas(const TokenCorpus& corpus) {
    OaPools pools;
    for (const auto& seq : corpus.sequences) {
        if (seq.size() < kWindowTokens) continue;
        auto windows = window_stats(seq);
        for (std::size_t k = 0; k + 1 < windows.size(); ++k) {
            const auto& a = windows[k];
            const auto& b = windows[k + 1];
            if (a.empty() || b.empty()) continue;
            pools.pitch.push_back(
                overlap_area(a.pitch_mean, a.pitch_std, b.pitch_mean, b.pitch_std));
            pools.duration.push_back(overlap_area(a.duration_mean, a.duration_std,
                                                  b.duration_mean, b.duration_std));
        }
    }
    return pools;
}

inline std::vector<double> pooled_pitch_values(const TokenCorpus& corpus) {
    std::vector<double> values;
    for (const auto& seq : corpus.sequences)
        for (Symbol s : seq)
            if (s >= 2) values.push_back(static_cast<double>(s));
    return values;
}

inline std::vector<double> token_histogram(const TokenCorpus& corpus) {
    std::vector<double> hist(corpus.alphabet_size, 0.0);
    for (const auto& seq : corpus.sequences)
        for (Symbol s : seq) hist[s] += 1.0;
    return hist;
}

/// Full generated-vs-reference comparison. Fields that cannot be computed
/// for the given corpora (no pitched windows, degenerate ground truth)
/// stay unset instead of carrying a made-up number. `kl` is the
/// divergence of the generated histogram from the reference one
/// (reference plays p). `fad` is attached separately by callers that
/// hold embedding sets.
struct MetricsReport {
    std::optional<double> c_pitch;
    std::optional<double> var_pitch;
    std::optional<double> c_duration;
    std::optional<double> var_duration;
    std::optional<double> wd;
    std::optional<double> kl;
    std::optional<double> fad;
    std::size_t n_generated = 0;
    std::size_t n_reference = 0;
};

inline MetricsReport evaluate_corpora(const TokenCorpus& generated,
                                      const TokenCorpus& reference) {
    if (generated.alphabet_size != reference.alphabet_size)
        throw DimensionMismatch("evaluate_corpora: corpora use different alphabets");
    MetricsReport report;
    report.n_generated = generated.sequences.size();
    report.n_reference = reference.sequences.size();

    const OaPools gen_oa = collect_overlap_areas(generated);
    const OaPools ref_oa = collect_overlap_areas(reference);
    auto try_cv = [](std::span<const double> gen, std::span<const double> ref)
        -> std::optional<ConsistencyVariance> {
        try {
            return consistency_variance(summarize(gen), summarize(ref));
        } catch (const NotComputable&) {
            return std::nullopt;
        }
    };
    if (auto cv = try_cv(gen_oa.pitch, ref_oa.pitch)) {
        report.c_pitch = cv->consistency;
        report.var_pitch = cv->variance;
    }
    if (auto cv = try_cv(gen_oa.duration, ref_oa.duration)) {
        report.c_duration = cv->consistency;
        report.var_duration = cv->variance;
    }

    const auto gen_pitches = pooled_pitch_values(generated);
    const auto ref_pitches = pooled_pitch_values(reference);
    if (!gen_pitches.empty() && !ref_pitches.empty())
        report.wd = wasserstein_1d(gen_pitches, ref_pitches);

    if (!generated.sequences.empty() && !reference.sequences.empty())
        report.kl = kl_divergence(token_histogram(reference), token_histogram(generated));

    return report;
}

} // namespace lzspa
