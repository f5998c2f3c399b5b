#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lzspa/errors.hpp"

namespace lzspa {

/// Keeps the k most probable symbols (ties resolved toward the smaller
/// symbol id), then reshapes the survivors with the temperature and
/// renormalizes. T = 1 passes the kept masses through unchanged, T = 0
/// collapses to the argmax, large T flattens toward uniform over the
/// kept support. Zero-mass symbols stay at zero for every T.
inline std::vector<double> apply_top_k_temperature(std::span<const double> dist,
                                                   std::uint32_t k, double temperature) {
    if (k < 1) throw InvalidArgument("top-k must be at least 1");
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
        throw InvalidArgument("temperature must be a nonnegative finite real");
    if (dist.empty()) throw InvalidArgument("empty distribution");
    double total = 0.0;
    for (double p : dist) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw InvalidArgument("distribution entries must be nonnegative and finite");
        total += p;
    }
    if (!(total > 0.0)) throw InvalidArgument("distribution has no mass");

    const std::size_t n = dist.size();
    const std::size_t keep = std::min<std::size_t>(k, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dist[a] != dist[b] ? dist[a] > dist[b] : a < b;
    });

    std::vector<double> out(n, 0.0);
    if (temperature == 0.0) {
        out[order[0]] = 1.0; // argmax, smallest id on ties
        return out;
    }
    if (temperature == 1.0 && keep == n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = dist[i] / total;
        return out;
    }

    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < keep; ++i)
        if (dist[order[i]] > 0.0) max_log = std::max(max_log, std::log(dist[order[i]]));

    double mass = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        const double p = dist[order[i]];
        if (p <= 0.0) continue;
        const double w = temperature == 1.0
                             ? p
                             : std::exp((std::log(p) - max_log) / temperature);
        out[order[i]] = w;
        mass += w;
    }
    for (double& w : out) w /= mass;
    return out;
}

} // namespace lzspa
