#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lzspa/corpus.hpp"
#include "lzspa/errors.hpp"
#include "lzspa/generator.hpp"
#include "lzspa/lz_tree.hpp"
#include "lzspa/metrics.hpp"
#include "lzspa/parallel.hpp"
#include "lzspa/rng.hpp"

namespace lzspa {

/// Categorical grids for the three sampling knobs. The search space is
/// their Cartesian product.
struct SearchSpace {
    std::vector<double> gammas{1e-5, 5e-5, 1e-4, 1e-3, 1e-2};
    std::vector<std::uint32_t> top_ks{4, 8, 16, 90};
    std::vector<double> temperatures{0.5, 0.8, 1.0, 1.5};

    std::size_t size() const { return gammas.size() * top_ks.size() * temperatures.size(); }

    void validate() const {
        if (gammas.empty() || top_ks.empty() || temperatures.empty())
            throw InvalidArgument("search space must not have an empty dimension");
        for (double g : gammas) SpaParams{g}.validate();
        for (double t : temperatures)
            if (!(t > 0.0) || !std::isfinite(t))
                throw InvalidArgument("temperatures in the search space must be positive");
        for (std::uint32_t k : top_ks)
            if (k < 1) throw InvalidArgument("top-k values must be at least 1");
    }
};

struct TrialResult {
    GenParams params;
    double objective_wd = 0.0;
    std::size_t samples = 0;
    double wall_s = 0.0;
    std::size_t trial_index = 0; ///< draw order within the search
};

/// Seeded random search over the grid, objective = Wasserstein distance
/// between the pooled pitch values of the generated samples and the
/// reference corpus. Configurations are drawn without replacement, so
/// trials >= |space| evaluates every configuration exactly once. The
/// returned list is sorted by ascending objective and is reproducible
/// from master_seed; trials may run in parallel without changing it.
inline std::vector<TrialResult> run_search(const LzTree& tree, const SearchSpace& space,
                                           const TokenCorpus& reference, std::size_t trials,
                                           std::size_t samples_per_trial,
                                           std::uint64_t master_seed,
                                           const GenParams& base = {}) {
    space.validate();
    if (trials < 1) throw InvalidArgument("run_search: need at least one trial");
    if (samples_per_trial < 1)
        throw InvalidArgument("run_search: need at least one sample per trial");
    if (reference.sequences.empty())
        throw InvalidArgument("run_search: reference corpus is empty");
    const std::vector<double> ref_pitches = pooled_pitch_values(reference);
    if (ref_pitches.empty())
        throw InvalidArgument("run_search: reference corpus has no pitched tokens");

    // enumerate the grid in a fixed order, then shuffle deterministically
    std::vector<GenParams> grid;
    grid.reserve(space.size());
    for (double g : space.gammas)
        for (std::uint32_t k : space.top_ks)
            for (double t : space.temperatures) {
                GenParams p = base;
                p.gamma = g;
                p.top_k = std::min<std::uint32_t>(k, tree.alphabet().size());
                p.temperature = t;
                grid.push_back(p);
            }
    Rng shuffle_rng(stream_seed(master_seed, 0x7071ULL));
    for (std::size_t i = grid.size(); i > 1; --i)
        std::swap(grid[i - 1], grid[shuffle_rng.next_index(i)]);

    const std::size_t executed = std::min(trials, grid.size());
    std::vector<TrialResult> results(executed);
    parallel_for(executed, [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        GenParams params = grid[i];
        params.master_seed = stream_seed(master_seed, i + 1);
        const auto samples = batch_generate(tree, params, samples_per_trial);
        std::vector<double> gen_pitches;
        for (const auto& seq : samples)
            for (Symbol s : seq)
                if (s >= 2) gen_pitches.push_back(static_cast<double>(s));
        TrialResult r;
        r.params = params;
        r.samples = samples.size();
        r.trial_index = i;
        r.objective_wd = gen_pitches.empty()
                             ? std::numeric_limits<double>::infinity()
                             : wasserstein_1d(gen_pitches, ref_pitches);
        r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        results[i] = std::move(r);
    });

    std::sort(results.begin(), results.end(), [](const TrialResult& a, const TrialResult& b) {
        return a.objective_wd != b.objective_wd ? a.objective_wd < b.objective_wd
                                                : a.trial_index < b.trial_index;
    });
    return results;
}

} // namespace lzspa
