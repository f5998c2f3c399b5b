#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lzspa/errors.hpp"
#include "lzspa/lz_tree.hpp"
#include "lzspa/rng.hpp"
#include "lzspa/types.hpp"

// Brute-force references and synthetic sources. Everything in here
// deliberately avoids the LzTree internals it is used to check: the
// parser and the recounting SPA work on plain phrase sets, so agreement
// with the tree is evidence, not tautology.

namespace lzspa::oracle {

struct LzParseResult {
    std::vector<TokenSequence> phrases;
    bool final_complete = true; ///< false if the last phrase was cut off by end of input
};

/// Classic LZ78 incremental parse: each phrase is the shortest prefix of
/// the remaining input that is not yet in the dictionary.
inline LzParseResult reference_lz78_parse(const TokenSequence& seq) {
    LzParseResult result;
    std::set<TokenSequence> dictionary;
    TokenSequence phrase;
    for (Symbol s : seq) {
        phrase.push_back(s);
        if (!dictionary.contains(phrase)) {
            dictionary.insert(phrase);
            result.phrases.push_back(phrase);
            phrase.clear();
        }
    }
    if (!phrase.empty()) {
        result.phrases.push_back(phrase);
        result.final_complete = false;
    }
    return result;
}

/// Naive recount of the smoothed SPA: replays the training corpus over a
/// dictionary of phrase paths (no tree structure), walks the context with
/// the same descend-or-restart rule, and applies the smoothing formula to
/// the tallied counts.
inline std::vector<double> brute_force_spa_distribution(
    const std::vector<TokenSequence>& training, const TokenSequence& context,
    double gamma, const Alphabet& alphabet) {
    if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
    std::set<TokenSequence> paths;
    std::map<TokenSequence, std::map<Symbol, std::uint64_t>> counts;

    for (const auto& seq : training) {
        TokenSequence at; // current path, relative to the root
        for (Symbol s : seq) {
            if (!alphabet.contains(s))
                throw InvalidSymbol("training symbol outside alphabet");
            ++counts[at][s];
            TokenSequence extended = at;
            extended.push_back(s);
            if (paths.contains(extended)) {
                at = std::move(extended);
            } else {
                paths.insert(extended);
                at.clear();
            }
        }
    }

    TokenSequence at;
    for (Symbol c : context) {
        if (!alphabet.contains(c))
            throw InvalidSymbol("context symbol outside alphabet");
        TokenSequence extended = at;
        extended.push_back(c);
        if (paths.contains(extended))
            at = std::move(extended);
        else
            at.clear();
    }

    const auto it = counts.find(at);
    std::uint64_t total = 0;
    if (it != counts.end())
        for (const auto& [sym, c] : it->second) total += c;
    const double denom = static_cast<double>(total) + gamma * alphabet.size();
    std::vector<double> q(alphabet.size(), gamma / denom);
    if (it != counts.end())
        for (const auto& [sym, c] : it->second)
            q[sym] = (static_cast<double>(c) + gamma) / denom;
    return q;
}

inline double brute_force_spa(const std::vector<TokenSequence>& training,
                              const TokenSequence& context, Symbol a, double gamma,
                              const Alphabet& alphabet) {
    if (!alphabet.contains(a)) throw InvalidSymbol("query symbol outside alphabet");
    return brute_force_spa_distribution(training, context, gamma, alphabet)[a];
}

/// A small synthetic process: i.i.d. draws or a first-order Markov chain
/// over tokens. Used for convergence experiments and desk-scale fidelity
/// checks where the truth is known analytically.
struct SyntheticSource {
    enum class Kind { Iid, Markov };

    Kind kind = Kind::Iid;
    std::uint32_t alphabet_size = 2;
    std::uint32_t seq_len = 8;
    std::vector<double> initial;                  ///< Iid: symbol probabilities; Markov: start dist
    std::vector<std::vector<double>> transition;  ///< Markov only: row s = P(next | s)

    void validate() const {
        Alphabet a{alphabet_size};
        if (seq_len == 0) throw InvalidArgument("source sequence length must be positive");
        auto check_row = [&](const std::vector<double>& row, const char* what) {
            if (row.size() != alphabet_size)
                throw InvalidArgument(std::string(what) + " has wrong length");
            double total = 0.0;
            for (double p : row) {
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw InvalidArgument(std::string(what) + " has a negative entry");
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw InvalidArgument(std::string(what) + " does not sum to 1");
        };
        check_row(initial, "initial distribution");
        if (kind == Kind::Markov) {
            if (transition.size() != alphabet_size)
                throw InvalidArgument("transition matrix has wrong row count");
            for (const auto& row : transition) check_row(row, "transition row");
        } else if (!transition.empty()) {
            throw InvalidArgument("iid source must not carry a transition matrix");
        }
    }
};

inline SyntheticSource iid_source(std::vector<double> probs, std::uint32_t seq_len) {
    SyntheticSource src;
    src.kind = SyntheticSource::Kind::Iid;
    src.alphabet_size = static_cast<std::uint32_t>(probs.size());
    src.seq_len = seq_len;
    src.initial = std::move(probs);
    src.validate();
    return src;
}

/// Bernoulli-style binary source with P(0) = p_zero.
inline SyntheticSource bernoulli_source(double p_zero, std::uint32_t seq_len) {
    return iid_source({p_zero, 1.0 - p_zero}, seq_len);
}

namespace detail {
inline Symbol draw_row(std::span<const double> row, Rng& rng) {
    double u = rng.next_double();
    double acc = 0.0;
    Symbol last = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] <= 0.0) continue;
        acc += row[i];
        last = static_cast<Symbol>(i);
        if (u < acc) return last;
    }
    return last;
}
} // namespace detail

/// m i.i.d. sequences from the source, reproducible from the seed.
inline std::vector<TokenSequence> sample_source(const SyntheticSource& src, std::size_t m,
                                                std::uint64_t seed) {
    src.validate();
    Rng rng(stream_seed(seed, 0x5eedULL));
    std::vector<TokenSequence> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        TokenSequence seq(src.seq_len);
        Symbol prev = detail::draw_row(src.initial, rng);
        seq[0] = prev;
        for (std::uint32_t t = 1; t < src.seq_len; ++t) {
            prev = src.kind == SyntheticSource::Kind::Iid
                       ? detail::draw_row(src.initial, rng)
                       : detail::draw_row(src.transition[prev], rng);
            seq[t] = prev;
        }
        out.push_back(std::move(seq));
    }
    return out;
}

/// Full probability table over every length-n sequence. Index order is
/// big-endian in the sequence: index = sum_t y_t * A^(n-1-t).
struct ExactDistribution {
    std::uint32_t alphabet_size = 0;
    std::uint32_t length = 0;
    std::vector<double> mass;

    std::size_t index_of(std::span<const Symbol> seq) const {
        std::size_t idx = 0;
        for (Symbol s : seq) idx = idx * alphabet_size + s;
        return idx;
    }
};

namespace detail {
inline std::size_t checked_power(std::uint32_t base, std::uint32_t exp, std::size_t budget) {
    std::size_t v = 1;
    for (std::uint32_t i = 0; i < exp; ++i) {
        if (v > budget / base)
            throw BudgetExceeded("enumeration of " + std::to_string(base) + "^" +
                                 std::to_string(exp) + " sequences exceeds budget " +
                                 std::to_string(budget));
        v *= base;
    }
    return v;
}
} // namespace detail

/// The model's exact distribution over all A^n sequences: chain-rule
/// product of SPA terms along the non-mutating descend-or-restart
/// traversal (the same walk log_loss uses).
inline ExactDistribution exact_model_distribution(const LzTree& tree, double gamma,
                                                  std::uint32_t n,
                                                  std::size_t budget = 1'000'000) {
    const std::uint32_t a_size = tree.alphabet().size();
    const std::size_t total = detail::checked_power(a_size, n, budget);
    SpaParams params{gamma};
    params.validate();

    ExactDistribution dist;
    dist.alphabet_size = a_size;
    dist.length = n;
    dist.mass.assign(total, 0.0);

    // DFS over positions so prefix probabilities are shared.
    auto rec = [&](auto&& self, std::uint32_t pos, std::uint32_t node, double prob,
                   std::size_t idx) -> void {
        if (pos == n) {
            dist.mass[idx] = prob;
            return;
        }
        std::vector<double> q = tree.spa_distribution(node, params);
        for (std::uint32_t a = 0; a < a_size; ++a) {
            std::uint32_t child = tree.child_of(node, static_cast<Symbol>(a));
            std::uint32_t next = child != LzTree::kNoNode ? child : LzTree::kRoot;
            self(self, pos + 1, next, prob * q[a], idx * a_size + a);
        }
    };
    rec(rec, 0, LzTree::kRoot, 1.0, 0);
    return dist;
}

/// The source's exact distribution over all A^n sequences.
inline ExactDistribution exact_source_distribution(const SyntheticSource& src, std::uint32_t n,
                                                   std::size_t budget = 1'000'000) {
    src.validate();
    const std::uint32_t a_size = src.alphabet_size;
    const std::size_t total = detail::checked_power(a_size, n, budget);

    ExactDistribution dist;
    dist.alphabet_size = a_size;
    dist.length = n;
    dist.mass.assign(total, 0.0);

    auto rec = [&](auto&& self, std::uint32_t pos, Symbol prev, double prob,
                   std::size_t idx) -> void {
        if (pos == n) {
            dist.mass[idx] = prob;
            return;
        }
        const std::vector<double>& row =
            pos == 0 ? src.initial
                     : (src.kind == SyntheticSource::Kind::Iid ? src.initial
                                                               : src.transition[prev]);
        for (std::uint32_t a = 0; a < a_size; ++a)
            self(self, pos + 1, static_cast<Symbol>(a), prob * row[a], idx * a_size + a);
    };
    rec(rec, 0, 0, 1.0, 0);
    return dist;
}

/// KL divergence in nats between two exact tables over the same universe.
/// Returns +infinity if q vanishes somewhere p does not (impossible for
/// smoothed models with gamma > 0).
inline double exact_kl(const ExactDistribution& p, const ExactDistribution& q) {
    if (p.alphabet_size != q.alphabet_size || p.length != q.length)
        throw DimensionMismatch("exact_kl: distributions over different universes");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i) {
        if (p.mass[i] <= 0.0) continue;
        if (q.mass[i] <= 0.0) return std::numeric_limits<double>::infinity();
        kl += p.mass[i] * std::log(p.mass[i] / q.mass[i]);
    }
    return kl;
}

/// Long-run average state distribution of the chain started from its
/// initial law (Cesaro limit of initial * P^t). For an irreducible chain
/// this is the stationary distribution; for a mixture of loops it is the
/// ergodic-decomposition weighting the process actually visits, which is
/// the right weight for time-averaged quantities like the entropy rate.
/// Handles periodic loops, where plain power iteration would oscillate.
inline std::vector<double> stationary_distribution(const SyntheticSource& src) {
    src.validate();
    if (src.kind == SyntheticSource::Kind::Iid) return src.initial;
    const std::uint32_t n = src.alphabet_size;
    std::vector<double> v = src.initial, next(n), avg(n, 0.0);
    constexpr int kBurnIn = 4096, kAverage = 65536;
    auto step = [&] {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::uint32_t s = 0; s < n; ++s) {
            if (v[s] <= 0.0) continue;
            const auto& row = src.transition[s];
            for (std::uint32_t t = 0; t < n; ++t)
                if (row[t] > 0.0) next[t] += v[s] * row[t];
        }
        v.swap(next);
    };
    for (int t = 0; t < kBurnIn; ++t) step();
    for (int t = 0; t < kAverage; ++t) {
        step();
        for (std::uint32_t s = 0; s < n; ++s) avg[s] += v[s];
    }
    double total = 0.0;
    for (double a : avg) total += a;
    for (double& a : avg) a /= total;
    return avg;
}

/// Entropy rate in nats per symbol: H(X_t | X_{t-1}) under the stationary
/// law for Markov sources, plain entropy for i.i.d. ones.
inline double conditional_entropy_rate(const SyntheticSource& src) {
    src.validate();
    auto row_entropy = [](const std::vector<double>& row) {
        double h = 0.0;
        for (double p : row)
            if (p > 0.0) h -= p * std::log(p);
        return h;
    };
    if (src.kind == SyntheticSource::Kind::Iid) return row_entropy(src.initial);
    std::vector<double> pi = stationary_distribution(src);
    double h = 0.0;
    for (std::uint32_t s = 0; s < src.alphabet_size; ++s)
        if (pi[s] > 0.0) h += pi[s] * row_entropy(src.transition[s]);
    return h;
}

/// Fixed synthetic melody source over the 90-token piano-roll alphabet:
/// a five-way mixture of deterministic 16-step arpeggio loops on
/// disjoint pitch bands. Each sequence picks one loop uniformly at the
/// first token and cycles it; 16 divides 256, so every loop slot is
/// visited equally often from any phase. All transition rows are
/// one-hot, which makes the source exactly learnable at corpus scale
/// (deep contexts carry no coin flips that sparse counts could distort,
/// and one-hot rows pass through top-k and temperature unchanged), while
/// the loop mixture gives real cross-sequence diversity. Every loop
/// exposes the same number of distinct tokens, so uniform seeding over
/// the model root's children reproduces the mixture weights.
inline SyntheticSource melody_source(std::uint32_t seq_len = kNominalSequenceLength) {
    constexpr int kLoops = 5;
    constexpr int kLoopLen = 16;

    SyntheticSource src;
    src.kind = SyntheticSource::Kind::Markov;
    src.alphabet_size = 90;
    src.seq_len = seq_len;
    src.initial.assign(90, 0.0);
    src.transition.assign(90, std::vector<double>(90, 0.0));

    for (int m = 0; m < kLoops; ++m) {
        // zigzag arpeggio inside the band [6 + 16m, 21 + 16m]
        std::vector<Symbol> loop;
        for (int k = 0; k < kLoopLen; ++k) {
            const int base = 6 + 16 * m;
            loop.push_back(static_cast<Symbol>(k % 2 == 0 ? base + k / 2 : base + 15 - k / 2));
        }
        src.initial[loop[0]] = 1.0 / kLoops;
        for (int i = 0; i < kLoopLen; ++i)
            src.transition[loop[i]][loop[(i + 1) % kLoopLen]] = 1.0;
    }
    // Tokens outside the loops are unreachable; park them on the first
    // loop's start so every row is a valid distribution.
    for (std::uint32_t s = 0; s < 90; ++s) {
        double total = 0.0;
        for (double p : src.transition[s]) total += p;
        if (total == 0.0) src.transition[s][6] = 1.0;
    }
    src.validate();
    return src;
}

struct ConvergencePoint {
    std::size_t m = 0;
    double kl_nats = 0.0;
    double wall_s = 0.0;
};

/// Trains on growing prefixes of one sampled corpus and reports the exact
/// divergence D(P || Q^m) at each requested m. Incremental training makes
/// the points nested the way the statement intends: each model extends
/// the previous one with more data.
inline std::vector<ConvergencePoint> convergence_experiment(const SyntheticSource& src,
                                                            std::vector<std::size_t> m_list,
                                                            double gamma, std::uint64_t seed,
                                                            std::size_t budget = 1'000'000) {
    src.validate();
    if (m_list.empty()) throw InvalidArgument("convergence_experiment: empty m list");
    std::sort(m_list.begin(), m_list.end());
    const ExactDistribution truth = exact_source_distribution(src, src.seq_len, budget);
    const std::vector<TokenSequence> corpus = sample_source(src, m_list.back(), seed);

    LzTree tree{Alphabet(src.alphabet_size)};
    std::vector<ConvergencePoint> points;
    std::size_t trained = 0;
    for (std::size_t m : m_list) {
        const auto t0 = std::chrono::steady_clock::now();
        for (; trained < m; ++trained) tree.train_on_sequence(corpus[trained]);
        const ExactDistribution model = exact_model_distribution(tree, gamma, src.seq_len, budget);
        const double kl = exact_kl(truth, model);
        const auto t1 = std::chrono::steady_clock::now();
        points.push_back(
            {m, kl, std::chrono::duration<double>(t1 - t0).count()});
    }
    return points;
}

} // namespace lzspa::oracle
