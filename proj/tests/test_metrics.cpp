#include <catch2/catch.hpp>

#include <cmath>
#include <sstream>

#include "lzspa/frechet.hpp"
#include "lzspa/metrics.hpp"
#include "lzspa/report.hpp"
#include "test_helpers.hpp"

using namespace lzspa;

namespace {

TokenCorpus musical_corpus(std::uint64_t seed, std::size_t count, std::size_t len = 256) {
    Rng rng(stream_seed(seed, 0));
    TokenCorpus corpus;
    corpus.alphabet_size = 90;
    corpus.seq_len = static_cast<std::uint32_t>(len);
    for (std::size_t i = 0; i < count; ++i)
        corpus.sequences.push_back(testutil::random_musical_sequence(rng, len));
    return corpus;
}

} // namespace

TEST_CASE("window stats") {
    SECTION("a 256-token sequence yields 7 windows") {
        TokenSequence seq(256, 0);
        CHECK(window_stats(seq).size() == 7);
    }
    SECTION("short sequences are rejected") {
        CHECK_THROWS_AS(window_stats(TokenSequence(63, 0)), InvalidArgument);
    }
    SECTION("a constant-pitch window is one long note") {
        TokenSequence seq(64, 1);
        seq[0] = 41;
        auto windows = window_stats(seq);
        REQUIRE(windows.size() == 1);
        CHECK(windows[0].note_count == 1);
        CHECK(windows[0].pitch_mean == Approx(41.0));
        CHECK(windows[0].pitch_std == Approx(kSigmaFloor));
        CHECK(windows[0].duration_mean == Approx(64.0));
    }
    SECTION("rest-only windows are empty") {
        TokenSequence seq(96, 0);
        seq[70] = 50; // onset inside the second window only
        auto windows = window_stats(seq);
        REQUIRE(windows.size() == 2);
        CHECK(windows[0].empty());
        CHECK_FALSE(windows[1].empty());
    }
    SECTION("durations are not split at the window edge") {
        TokenSequence seq(96, 0);
        seq[60] = 41;
        for (int i = 61; i < 80; ++i) seq[i] = 1; // 20-step note crossing the boundary
        auto windows = window_stats(seq);
        REQUIRE(windows.size() == 2);
        CHECK(windows[0].duration_mean == Approx(20.0));
        CHECK(windows[1].duration_mean == Approx(20.0)); // same onset seen by both windows
    }
}

TEST_CASE("gaussian intersection") {
    CHECK(gaussian_intersection(0, 1, 2, 1) == Approx(1.0));
    CHECK(gaussian_intersection(5.5, 0.7, 5.5, 0.7) == Approx(5.5));

    SECTION("unequal spreads: equal-density residual is tiny") {
        double c = gaussian_intersection(0, 1, 3, 2);
        auto pdf = [](double x, double m, double s) {
            return std::exp(-0.5 * (x - m) * (x - m) / (s * s)) /
                   (s * std::sqrt(2.0 * 3.14159265358979323846));
        };
        CHECK(std::abs(pdf(c, 0, 1) - pdf(c, 3, 2)) <= 1e-9);
        CHECK(c > 0.0);
        CHECK(c < 3.0);
    }
    SECTION("non-finite input is rejected") {
        CHECK_THROWS_AS(gaussian_intersection(std::nan(""), 1, 0, 1), InvalidArgument);
        CHECK_THROWS_AS(gaussian_intersection(0, 0.0, 1, 1), InvalidArgument);
    }
}

TEST_CASE("overlap area") {
    CHECK(overlap_area(3.2, 0.8, 3.2, 0.8) == Approx(1.0));
    CHECK(overlap_area(0, 1, 2, 1) == Approx(0.3173105).margin(1e-6));

    SECTION("symmetric under argument swap") {
        Rng rng(stream_seed(51, 0));
        for (int rep = 0; rep < 100; ++rep) {
            double m1 = -5 + 10 * rng.next_double(), m2 = -5 + 10 * rng.next_double();
            double s1 = 0.1 + 3 * rng.next_double(), s2 = 0.1 + 3 * rng.next_double();
            CHECK(overlap_area(m1, s1, m2, s2) ==
                  Approx(overlap_area(m2, s2, m1, s1)).margin(1e-12));
        }
    }
    SECTION("matches numerical integration of min(pdf1, pdf2)") {
        Rng rng(stream_seed(52, 0));
        for (int rep = 0; rep < 300; ++rep) {
            double m1 = -6 + 12 * rng.next_double(), m2 = -6 + 12 * rng.next_double();
            double s1 = 0.05 + 4 * rng.next_double(), s2 = 0.05 + 4 * rng.next_double();
            double fast = overlap_area(m1, s1, m2, s2);
            double slow = testutil::overlap_integral_oracle(m1, s1, m2, s2);
            CHECK(fast == Approx(slow).margin(1e-6));
        }
    }
    SECTION("always in [0, 1]") {
        Rng rng(stream_seed(53, 0));
        for (int rep = 0; rep < 200; ++rep) {
            double v = overlap_area(-100 + 200 * rng.next_double(), 0.01 + 5 * rng.next_double(),
                                    -100 + 200 * rng.next_double(), 0.01 + 5 * rng.next_double());
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("consistency and variance") {
    OaSummary ref{0.8, 0.01, 100};
    SECTION("self comparison is perfect") {
        auto cv = consistency_variance(ref, ref);
        CHECK(cv.consistency == Approx(1.0));
        CHECK(cv.variance == Approx(1.0));
    }
    SECTION("doubled mean clamps consistency to zero") {
        OaSummary gen{1.6, 0.01, 100};
        CHECK(consistency_variance(gen, ref).consistency == Approx(0.0));
    }
    SECTION("degenerate ground truth errors") {
        CHECK_THROWS_AS(consistency_variance(ref, OaSummary{0.0, 0.01, 10}), NotComputable);
        CHECK_THROWS_AS(consistency_variance(ref, OaSummary{0.5, 0.0, 10}), NotComputable);
        CHECK_THROWS_AS(consistency_variance(ref, OaSummary{}), NotComputable);
    }
}

TEST_CASE("kl divergence") {
    SECTION("identical histograms diverge by zero") {
        std::vector<double> p{0.25, 0.25, 0.5};
        CHECK(kl_divergence(p, p) == Approx(0.0).margin(1e-15));
    }
    SECTION("closed form up to smoothing") {
        std::vector<double> p{1.0, 0.0}, q{0.5, 0.5};
        CHECK(kl_divergence(p, q) == Approx(std::log(2.0)).margin(1e-7));
    }
    SECTION("nonnegative on random histogram pairs") {
        Rng rng(stream_seed(54, 0));
        for (int rep = 0; rep < 1000; ++rep) {
            std::size_t n = 2 + rng.next_index(90);
            std::vector<double> p(n), q(n);
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = rng.next_index(20);
                q[i] = rng.next_index(20);
            }
            CHECK(kl_divergence(p, q) >= 0.0);
        }
    }
    SECTION("length mismatch") {
        CHECK_THROWS_AS(kl_divergence(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                        DimensionMismatch);
    }
}

TEST_CASE("wasserstein distance") {
    CHECK(wasserstein_1d(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
    CHECK(wasserstein_1d(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == Approx(1.0));
    CHECK(wasserstein_1d(std::vector<double>{1, 3}, std::vector<double>{2, 2}) == Approx(1.0));
    CHECK_THROWS_AS(wasserstein_1d(std::vector<double>{}, std::vector<double>{1.0}),
                    InvalidArgument);

    SECTION("matches the exact transport oracle on small instances") {
        Rng rng(stream_seed(55, 0));
        for (int rep = 0; rep < 120; ++rep) {
            std::size_t n = 1 + rng.next_index(8), m = 1 + rng.next_index(8);
            std::vector<double> x(n), y(m);
            for (auto& v : x) v = std::round(20.0 * rng.next_double()) / 2.0;
            for (auto& v : y) v = std::round(20.0 * rng.next_double()) / 2.0;
            double fast = wasserstein_1d(x, y);
            double slow = testutil::wasserstein_transport_oracle(x, y);
            CHECK(fast == Approx(slow).margin(1e-9));
        }
    }
}

TEST_CASE("frechet distance") {
    SECTION("identical sets are at distance zero") {
        EmbeddingSet a;
        a.rows.resize(3, 2);
        a.rows << 0.0, 1.0, 2.0, -1.0, 4.0, 0.5;
        CHECK(frechet_distance(a, a) == Approx(0.0).margin(1e-8));
    }
    SECTION("1-D closed form") {
        EmbeddingSet a, b;
        a.rows.resize(3, 1);
        a.rows << -1.0, 0.0, 1.0; // mean 0, unbiased var 1
        b.rows.resize(3, 1);
        b.rows << 0.0, 1.0, 2.0; // mean 1, unbiased var 1
        CHECK(frechet_distance(a, b) == Approx(1.0).margin(1e-8));
    }
    SECTION("symmetry") {
        Rng rng(stream_seed(56, 0));
        for (int rep = 0; rep < 20; ++rep) {
            EmbeddingSet a, b;
            const int d = 1 + static_cast<int>(rng.next_index(6));
            a.rows.resize(4 + rng.next_index(10), d);
            b.rows.resize(4 + rng.next_index(10), d);
            for (Eigen::Index i = 0; i < a.rows.rows(); ++i)
                for (Eigen::Index j = 0; j < d; ++j) a.rows(i, j) = rng.next_double() * 4 - 2;
            for (Eigen::Index i = 0; i < b.rows.rows(); ++i)
                for (Eigen::Index j = 0; j < d; ++j) b.rows(i, j) = rng.next_double() * 4 - 2;
            double ab = frechet_distance(a, b);
            double ba = frechet_distance(b, a);
            CHECK(ab >= 0.0);
            CHECK(ab == Approx(ba).margin(1e-8));
        }
    }
    SECTION("shape errors") {
        EmbeddingSet a, b, tiny;
        a.rows.resize(3, 2);
        a.rows.setZero();
        b.rows.resize(3, 3);
        b.rows.setZero();
        tiny.rows.resize(1, 2);
        tiny.rows.setZero();
        CHECK_THROWS_AS(frechet_distance(a, b), DimensionMismatch);
        CHECK_THROWS_AS(frechet_distance(a, tiny), InvalidArgument);
    }
}

TEST_CASE("embedding csv parsing") {
    SECTION("well-formed file") {
        std::stringstream ss("dim=3\n1.0,2.0,3.0\n-0.5, 0.25 ,7\n");
        auto set = read_embeddings_csv(ss, "test");
        CHECK(set.count() == 2);
        CHECK(set.dim() == 3);
        CHECK(set.rows(1, 1) == Approx(0.25));
    }
    SECTION("errors") {
        std::stringstream missing_header("1.0,2.0\n3.0,4.0\n");
        CHECK_THROWS_AS(read_embeddings_csv(missing_header), FormatError);
        std::stringstream ragged("dim=2\n1.0,2.0\n3.0\n");
        CHECK_THROWS_AS(read_embeddings_csv(ragged), FormatError);
        std::stringstream tiny("dim=2\n1.0,2.0\n");
        CHECK_THROWS_AS(read_embeddings_csv(tiny), FormatError);
        std::stringstream junk("dim=2\n1.0,abc\n1.0,2.0\n");
        CHECK_THROWS_AS(read_embeddings_csv(junk), FormatError);
    }
}

TEST_CASE("corpus self-comparison is perfect") {
    auto corpus = musical_corpus(77, 30);
    auto report = evaluate_corpora(corpus, corpus);
    REQUIRE(report.c_pitch.has_value());
    REQUIRE(report.var_pitch.has_value());
    REQUIRE(report.c_duration.has_value());
    REQUIRE(report.var_duration.has_value());
    REQUIRE(report.wd.has_value());
    REQUIRE(report.kl.has_value());
    CHECK(*report.c_pitch == Approx(1.0).margin(1e-8));
    CHECK(*report.var_pitch == Approx(1.0).margin(1e-8));
    CHECK(*report.c_duration == Approx(1.0).margin(1e-8));
    CHECK(*report.var_duration == Approx(1.0).margin(1e-8));
    CHECK(*report.wd == Approx(0.0).margin(1e-8));
    CHECK(*report.kl == Approx(0.0).margin(1e-8));
    CHECK(report.n_generated == 30);
}

TEST_CASE("all-rest corpora yield not-computable window metrics") {
    TokenCorpus silent;
    silent.alphabet_size = 90;
    silent.seq_len = 256;
    silent.sequences.assign(5, TokenSequence(256, 0));
    auto report = evaluate_corpora(silent, silent);
    CHECK_FALSE(report.c_pitch.has_value());
    CHECK_FALSE(report.var_pitch.has_value());
    CHECK_FALSE(report.wd.has_value());
    CHECK(report.kl.has_value()); // histogram metric still defined
}

TEST_CASE("report rendering") {
    auto corpus = musical_corpus(78, 10);
    auto report = evaluate_corpora(corpus, corpus);
    auto j = report_to_json(report);
    CHECK(j.contains("c_pitch"));
    CHECK(j.contains("wd"));
    CHECK(j.contains("kl"));
    CHECK_FALSE(j.contains("fad")); // no embeddings attached
    CHECK(j["n_generated"] == 10);

    report.fad = 0.25;
    auto j2 = report_to_json(report);
    CHECK(j2["fad"] == Approx(0.25));

    auto table = report_to_table(report);
    CHECK(table.find("c_pitch") != std::string::npos);
    CHECK(table.find("n/a") == std::string::npos);
}
