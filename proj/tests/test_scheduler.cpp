#include <doctest.h>

#include <algorithm>
#include <set>

#include "pbs/scheduler.hpp"

using namespace pbs;

namespace {

// Samples of lengths 1..n (ids equal to their length) and a table over them.
struct Fixture {
    std::vector<Sample> samples;
    FrequencyTable table{std::vector<std::uint64_t>{1}, 1};
    std::uint32_t n_max;

    explicit Fixture(std::uint32_t n) : n_max(n) {
        FrequencyTracker tracker(4);
        for (std::uint32_t k = 1; k <= n; ++k) {
            samples.push_back(Sample{k, std::vector<TokenId>(k, k % 4)});
            tracker.observe(samples.back());
        }
        table = tracker.finalize();
    }
};

// Prediction = n / n_max, so the order follows sample length.
PredictorState length_scorer() {
    PredictorState s;
    s.standardize = false;
    s.weights = {0, 1, 0, 0};
    return s;
}

std::set<SampleId> ids_in(const SampleBuffer& buf, Bucket b) {
    std::set<SampleId> out;
    for (auto i : buf.bucket_members(b)) out.insert(buf.pool()[i].sample.id);
    return out;
}

}  // namespace

TEST_CASE("partition of nine ordered predictions") {
    Fixture fx(9);
    SampleBuffer buf(100);
    SampleStream stream(fx.samples);
    buf.refill(stream, length_scorer(), &fx.table, fx.n_max);
    CHECK(buf.p33() == doctest::Approx(3.0 / 9.0).epsilon(1e-15));
    CHECK(buf.p67() == doctest::Approx(7.0 / 9.0).epsilon(1e-15));
    CHECK(ids_in(buf, Bucket::Low) == std::set<SampleId>{1, 2, 3});
    CHECK(ids_in(buf, Bucket::Medium) == std::set<SampleId>{4, 5, 6, 7});
    CHECK(ids_in(buf, Bucket::High) == std::set<SampleId>{8, 9});
}

TEST_CASE("ties and single samples land in the low bucket") {
    Fixture fx(20);
    PredictorState flat;
    flat.standardize = false;
    flat.bias = 1.25;
    SampleBuffer buf(100);
    SampleStream stream(fx.samples);
    buf.refill(stream, flat, &fx.table, fx.n_max);
    CHECK(buf.bucket_sizes() == std::array<std::size_t, 3>{0, 0, 20});

    SampleBuffer one(1);
    SampleStream s2(fx.samples);
    one.refill(s2, length_scorer(), &fx.table, fx.n_max);
    CHECK(one.bucket_sizes() == std::array<std::size_t, 3>{0, 0, 1});
}

TEST_CASE("refill") {
    Fixture fx(30);
    SUBCASE("fills to capacity") {
        SampleBuffer buf(10);
        SampleStream stream(fx.samples);
        CHECK(buf.refill(stream, length_scorer(), &fx.table, fx.n_max) == 10);
        CHECK(buf.size() == 10);
        CHECK(stream.position() == 10);
        CHECK(buf.refill(stream, length_scorer(), &fx.table, fx.n_max) == 0);
    }
    SUBCASE("short stream") {
        SampleBuffer buf(10);
        SampleStream stream(std::span<const Sample>(fx.samples).first(5));
        CHECK(buf.refill(stream, length_scorer(), &fx.table, fx.n_max) == 5);
        CHECK(buf.size() == 5);
        CHECK(stream.exhausted());
    }
    SUBCASE("empty stream and empty pool") {
        SampleBuffer buf(10);
        SampleStream stream(std::span<const Sample>{});
        CHECK_THROWS_AS(buf.refill(stream, length_scorer(), &fx.table, fx.n_max), EmptyBufferError);
    }
    SUBCASE("without a table predictions are the bias") {
        PredictorState s = length_scorer();
        s.bias = 0.7;
        SampleBuffer buf(10);
        SampleStream stream(fx.samples);
        buf.refill(stream, s, nullptr, fx.n_max);
        for (const auto& item : buf.pool()) {
            CHECK_FALSE(item.has_features);
            CHECK(item.predicted_loss == 0.7);
        }
        buf.featurize(fx.table, fx.n_max);
        buf.rescore(s);
        for (const auto& item : buf.pool()) CHECK(item.has_features);
        CHECK(buf.bucket_sizes()[0] > 0);
    }
}

TEST_CASE("bucket probabilities") {
    const auto p = SamplerPolicy(2.0).bucket_probs();
    CHECK(p[0] == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
    CHECK(p[2] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    const auto u = SamplerPolicy(1.0).bucket_probs();
    CHECK(u[0] == doctest::Approx(1.0 / 3.0));
    CHECK(u[2] == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(SamplerPolicy(0.0), ConfigError);
    CHECK_THROWS_AS(SamplerPolicy(-1.0), ConfigError);
}

TEST_CASE("bucket choice frequencies and renormalization") {
    const auto probs = SamplerPolicy(2.0).bucket_probs();
    Rng rng(11);
    const int draws = 100000;
    std::array<int, 3> hits{};
    for (int i = 0; i < draws; ++i) ++hits[static_cast<std::size_t>(choose_bucket(probs, {5, 5, 5}, rng))];
    CHECK(std::abs(hits[0] / double(draws) - 4.0 / 7.0) <= 0.01);
    CHECK(std::abs(hits[1] / double(draws) - 2.0 / 7.0) <= 0.01);
    CHECK(std::abs(hits[2] / double(draws) - 1.0 / 7.0) <= 0.01);

    hits = {};
    for (int i = 0; i < draws; ++i) ++hits[static_cast<std::size_t>(choose_bucket(probs, {0, 5, 5}, rng))];
    CHECK(hits[0] == 0);
    CHECK(std::abs(hits[1] / double(draws) - 2.0 / 3.0) <= 0.01);
    CHECK(std::abs(hits[2] / double(draws) - 1.0 / 3.0) <= 0.01);

    CHECK_THROWS_AS(choose_bucket(probs, {0, 0, 0}, rng), EmptyBufferError);
}

TEST_CASE("within-bucket selection is uniform") {
    Fixture fx(9);
    std::array<int, 10> hits{};
    Rng rng(23);
    const int rounds = 60000;
    for (int r = 0; r < rounds; ++r) {
        SampleBuffer buf(9);
        SampleStream stream(fx.samples);
        buf.refill(stream, length_scorer(), &fx.table, fx.n_max);
        const auto batch = buf.sample_batch(SamplerPolicy(2.0), 1, rng);
        if (batch.drawn_per_bucket[0] == 1) ++hits[batch.items[0].sample.id];
    }
    const int high = hits[8] + hits[9];
    REQUIRE(high > 0);
    CHECK(std::abs(hits[8] / double(high) - 0.5) <= 0.01);
}

TEST_CASE("batches draw without replacement and conserve samples") {
    Fixture fx(60);
    SampleBuffer buf(60);
    SampleStream stream(fx.samples);
    buf.refill(stream, length_scorer(), &fx.table, fx.n_max);
    Rng rng(4);
    std::set<SampleId> seen;
    std::size_t drawn = 0;
    for (int step = 0; step < 3; ++step) {
        const auto before = buf.size();
        const auto batch = buf.sample_batch(SamplerPolicy(2.0), 16, rng);
        CHECK(batch.items.size() == 16);
        std::size_t per_bucket = 0;
        for (auto c : batch.drawn_per_bucket) per_bucket += c;
        CHECK(per_bucket == 16);
        for (const auto& item : batch.items) CHECK(seen.insert(item.sample.id).second);
        drawn += 16;
        CHECK(buf.size() == before - 16);
        CHECK(buf.size() + drawn == 60);
        const auto sizes = buf.bucket_sizes();
        CHECK(sizes[0] + sizes[1] + sizes[2] == buf.size());
    }
    for (const auto& item : buf.pool()) CHECK(seen.count(item.sample.id) == 0);

    CHECK_THROWS_AS(buf.sample_batch(SamplerPolicy(2.0), 13, rng), InsufficientSamplesError);
    CHECK_THROWS_AS(buf.uniform_batch(13, rng), InsufficientSamplesError);
    CHECK_THROWS_AS(buf.sample_batch(SamplerPolicy(2.0), 0, rng), ContractError);
    CHECK(buf.size() == 12);
}

TEST_CASE("uniform draws pick every sample with equal probability") {
    Fixture fx(10);
    std::array<int, 11> hits{};
    Rng rng(77);
    const int rounds = 50000;
    for (int r = 0; r < rounds; ++r) {
        SampleBuffer buf(10);
        SampleStream stream(fx.samples);
        buf.refill(stream, length_scorer(), &fx.table, fx.n_max);
        const auto batch = buf.uniform_batch(2, rng);
        CHECK(batch.drawn_per_bucket == std::array<std::size_t, 3>{});
        REQUIRE(batch.items[0].sample.id != batch.items[1].sample.id);
        for (const auto& item : batch.items) ++hits[item.sample.id];
    }
    for (int k = 1; k <= 10; ++k) CHECK(std::abs(hits[k] / double(2 * rounds) - 0.1) <= 0.01);
}

TEST_CASE("same seed, same batches") {
    Fixture fx(40);
    auto run = [&](std::uint64_t seed) {
        SampleBuffer buf(40);
        SampleStream stream(fx.samples);
        buf.refill(stream, length_scorer(), &fx.table, fx.n_max);
        Rng rng(seed);
        std::vector<SampleId> ids;
        for (int i = 0; i < 3; ++i)
            for (const auto& item : buf.sample_batch(SamplerPolicy(2.0), 8, rng).items) ids.push_back(item.sample.id);
        return ids;
    };
    CHECK(run(5) == run(5));
    CHECK(run(5) != run(6));
}

TEST_CASE("rescore") {
    Fixture fx(30);
    SampleBuffer buf(30);
    SampleStream stream(fx.samples);
    const auto s = length_scorer();
    buf.refill(stream, s, &fx.table, fx.n_max);
    std::vector<double> before;
    for (const auto& item : buf.pool()) before.push_back(item.predicted_loss);

    SUBCASE("unchanged state is bit-identical") {
        buf.rescore(s);
        for (std::size_t i = 0; i < before.size(); ++i) CHECK(buf.pool()[i].predicted_loss == before[i]);
    }
    SUBCASE("zero weights send everything low") {
        PredictorState flat;
        flat.standardize = false;
        flat.bias = 1.0;
        buf.rescore(flat);
        for (const auto& item : buf.pool()) CHECK(item.predicted_loss == 1.0);
        CHECK(buf.bucket_sizes() == std::array<std::size_t, 3>{0, 0, 30});
    }
    SUBCASE("inverted weights flip the buckets") {
        PredictorState inv = s;
        inv.weights[1] = -1.0;
        buf.rescore(inv);
        CHECK(ids_in(buf, Bucket::High).count(1) == 1);
        CHECK(ids_in(buf, Bucket::Low).count(30) == 1);
    }
}

TEST_CASE("property: bucket invariants on random pools") {
    Rng rng(303);
    for (int trial = 0; trial < 100; ++trial) {
        Fixture fx(static_cast<std::uint32_t>(rng.between(1, 64)));
        PredictorState s;
        s.standardize = false;
        for (auto& w : s.weights) w = rng.normal();
        SampleBuffer buf(rng.between(1, 80));
        SampleStream stream(fx.samples);
        buf.refill(stream, s, &fx.table, fx.n_max);
        CHECK(buf.p33() <= buf.p67());
        std::size_t total = 0;
        for (std::size_t b = 0; b < 3; ++b) {
            for (auto i : buf.bucket_members(static_cast<Bucket>(b))) {
                const double p = buf.pool()[i].predicted_loss;
                if (b == 0) CHECK(p > buf.p67());
                if (b == 1) CHECK((p > buf.p33() && p <= buf.p67()));
                if (b == 2) CHECK(p <= buf.p33());
                ++total;
            }
        }
        CHECK(total == buf.size());
        // Nearest-rank p33 is a pool value, so the low bucket is never empty.
        CHECK(buf.bucket_sizes()[2] >= 1);
    }
}

TEST_CASE("percentile nearest rank") {
    const std::vector<double> v{5, 1, 4, 2, 3};
    CHECK(percentile_nearest_rank(v, 33) == 2);
    CHECK(percentile_nearest_rank(v, 67) == 4);
    CHECK(percentile_nearest_rank(v, 100) == 5);
    CHECK(percentile_nearest_rank(v, 0) == 1);
    CHECK_THROWS_AS(percentile_nearest_rank(std::vector<double>{}, 50), ContractError);
}
