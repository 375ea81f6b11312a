#include "doctest.h"

#include "dosdef/rng.hpp"
#include "dosdef/telemetry.hpp"

using namespace dosdef;

namespace {

GenerationTrace finished_trace(std::int64_t request_id, std::int64_t input_tokens, int steps,
                               double start, double per_token) {
    GenerationTrace t;
    t.request_id = request_id;
    t.input_tokens = input_tokens;
    t.start_time = start;
    t.end_time = start + per_token * steps;
    for (int i = 1; i <= steps; ++i)
        t.steps.push_back(LogitStep{i, 10.0, 2.0, 100 + i});
    t.terminated_by = TerminationReason::Eos;
    return t;
}

CostModel noiseless_model() {
    CostModel m;
    m.noise_sigma = 0.0;
    return m;
}

} // namespace

TEST_CASE("derive_resource_vector: runtime is end minus start") {
    const auto trace = finished_trace(1, 50, 35, 10.0, 0.1);
    CHECK(trace.end_time == doctest::Approx(13.5).epsilon(1e-12));
    const auto v = derive_resource_vector(trace, noiseless_model());
    CHECK(v.runtime_s == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("derive_resource_vector: empty finished trace has zero output length") {
    GenerationTrace t;
    t.request_id = 2;
    t.input_tokens = 10;
    t.start_time = 0.0;
    t.end_time = 0.5;
    t.terminated_by = TerminationReason::Eos;
    const auto v = derive_resource_vector(t, noiseless_model());
    CHECK(v.output_tokens == 0);
}

TEST_CASE("derive_resource_vector: affine memory model") {
    // 2 GB base + 0.001 GB/token over 1000 total tokens -> 3 GB
    auto trace = finished_trace(3, 400, 600, 0.0, 0.01);
    const auto v = derive_resource_vector(trace, noiseless_model());
    CHECK(v.peak_memory_gb == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(v.input_tokens == 400);
    CHECK(v.output_tokens == 600);
}

TEST_CASE("derive_resource_vector rejects an unfinished trace") {
    GenerationTrace t;
    t.input_tokens = 1;
    CHECK_THROWS_AS(derive_resource_vector(t, noiseless_model()), UsageError);
}

TEST_CASE("cost model telemetry is monotone in output length for a fixed request") {
    CostModel m;
    m.seed = 99;
    m.noise_sigma = 0.05;
    for (std::uint64_t rid : {1ULL, 2ULL, 77ULL}) {
        double prev_mem = -1.0, prev_util = -1.0;
        for (std::int64_t out = 0; out <= 4000; out += 250) {
            const double mem = m.memory_for(100 + out, rid);
            const double util = m.util_for(100 + out, rid);
            CHECK(mem >= prev_mem);
            CHECK(util >= prev_util);
            prev_mem = mem;
            prev_util = util;
        }
    }
}

TEST_CASE("cost model noise is reproducible and seed-dependent") {
    CostModel a;
    a.seed = 5;
    CostModel b;
    b.seed = 5;
    CostModel c;
    c.seed = 6;
    CHECK(a.memory_for(1000, 42) == b.memory_for(1000, 42));
    CHECK(a.memory_for(1000, 42) != c.memory_for(1000, 42));
    CHECK(a.memory_for(1000, 42) != a.memory_for(1000, 43));
}

TEST_CASE("utilization saturates at 100 percent") {
    CostModel m = noiseless_model();
    CHECK(m.util_for(1000000, 1) == doctest::Approx(100.0));
}

TEST_CASE("ResourceVector validation enforces field ranges") {
    ResourceVector v{1.0, 2.0, 50.0, 10, 5};
    CHECK_NOTHROW(v.validate());
    v.runtime_s = 0.0;
    CHECK_THROWS_AS(v.validate(), UsageError);
    v.runtime_s = 1.0;
    v.peak_util_pct = 101.0;
    CHECK_THROWS_AS(v.validate(), UsageError);
    v.peak_util_pct = 50.0;
    v.input_tokens = 0;
    CHECK_THROWS_AS(v.validate(), UsageError);
}

TEST_CASE("SimClock only moves forward") {
    SimClock c;
    c.advance(1.5);
    c.advance(0.0);
    CHECK(c.now() == doctest::Approx(1.5));
    CHECK_THROWS_AS(c.advance(-0.1), UsageError);
}

TEST_CASE("trace JSONL has one step per line") {
    const auto trace = finished_trace(7, 3, 4, 0.0, 0.01);
    const auto text = trace_to_jsonl(trace);
    int lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == 5); // header + 4 steps
    CHECK(text.find("\"request_id\":7") != std::string::npos);
    CHECK(text.find("\"terminated_by\":\"eos\"") != std::string::npos);
}

TEST_CASE("keyed rng streams do not depend on draw order") {
    RngStream a(derive_seed(11, "x", 1));
    RngStream b(derive_seed(11, "x", 1));
    (void)RngStream(derive_seed(11, "x", 2)).uniform01();
    CHECK(a.uniform01() == b.uniform01());
    CHECK(a.uniform_int(0, 10) == b.uniform_int(0, 10));
}
