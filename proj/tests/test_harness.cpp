#include "doctest.h"
#include "test_support.hpp"

#include "tedemod/errors.hpp"
#include "tedemod/harness.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace tedemod;
using namespace tedemod::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SweepConfig small_sweep()
{
    SweepConfig cfg;
    cfg.frame.m = 20;
    cfg.frames = 6;
    cfg.es_n0_grid = {0.0, 4.0};
    cfg.mp_iters = {1, 0};
    cfg.master_seed = 11;
    return cfg;
}

std::string to_csv(const std::vector<BerRecord>& r)
{
    std::ostringstream out;
    write_results(out, r, ResultFormat::csv);
    return out.str();
}

} // namespace

TEST_CASE("splitmix64 reference values")
{
    // First outputs of the splitmix64 generator seeded with 0.
    CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(mix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
    CHECK(frame_seed(1, 2, 3) == mix64(mix64(mix64(1) ^ 2) ^ 3));
    CHECK(frame_seed(1, 2, 3) != frame_seed(1, 3, 2));
}

TEST_CASE("demodulator names")
{
    CHECK(parse_demod("pinv-batch") == Demod::pinv_batch);
    CHECK(parse_demod_list("all").size() == 4);
    CHECK(parse_demod_list("smp, mp").size() == 2);
    CHECK_THROWS_AS(parse_demod("zf"), validation_error);
    CHECK(std::string(demod_name(Demod::pinv_symbol)) == "pinv-symbol");
}

TEST_CASE("grid and iteration parsing")
{
    CHECK(parse_grid("0:2:6") == std::vector<double>{0, 2, 4, 6});
    CHECK(parse_grid("0:1:10").size() == 11);
    CHECK(parse_grid("1.5, 3") == std::vector<double>{1.5, 3});
    CHECK(parse_grid("inf").front() == kInf);
    CHECK_THROWS_AS(parse_grid("0:0:3"), validation_error);
    CHECK_THROWS_AS(parse_grid("5:1:3"), validation_error);
    CHECK_THROWS_AS(parse_grid("x"), validation_error);
    CHECK(parse_iters("1,full,3") == std::vector<std::size_t>{1, 0, 3});
}

TEST_CASE("sweep validation")
{
    auto cfg = small_sweep();
    cfg.frames = 0;
    CHECK_THROWS_AS(cfg.validate(), validation_error);
    cfg = small_sweep();
    cfg.es_n0_grid.clear();
    CHECK_THROWS_AS(cfg.validate(), validation_error);
    cfg = small_sweep();
    cfg.tem.b = 1.0;
    CHECK_THROWS_AS(cfg.validate(), validation_error);
    cfg = small_sweep();
    CHECK(cfg.resolved_iters(0) == 19);
    CHECK(cfg.resolved_iters(3) == 3);
    CHECK(cfg.resolved_tem().c == doctest::Approx(std::sqrt(0.01 / 1e-3)));
}

TEST_CASE("noiseless sweep has zero BER")
{
    auto cfg = small_sweep();
    cfg.es_n0_grid = {kInf};
    for (const auto& r : run_ber_sweep(cfg)) {
        CHECK(r.errors == 0);
        CHECK(r.ber == 0.0);
        CHECK(r.symbols == 120);
    }
}

TEST_CASE("sweep records: conservation, ordering, latency only for SMP")
{
    const auto cfg = small_sweep();
    const auto recs = run_ber_sweep(cfg);
    // 2 points x (smp, mp@1, mp@19, pinv-batch, pinv-symbol).
    REQUIRE(recs.size() == 10);
    CHECK(recs[0].demod == "smp");
    CHECK(recs[1].demod == "mp");
    CHECK(recs[1].iterations == 1);
    CHECK(recs[2].iterations == 19);
    for (const auto& r : recs) {
        CHECK(r.symbols + r.skipped_frames * 20 == 120);
        CHECK(r.ber == doctest::Approx(static_cast<double>(r.errors) / r.symbols));
        CHECK(r.ber >= 0.0);
        CHECK(r.ber <= 1.0);
        CHECK(r.seed == 11);
        CHECK(r.mean_spike_compute_s == 0.0);
        if (r.demod == "smp") CHECK(r.max_latency_s > 0.0);
        else CHECK(r.max_latency_s == 0.0);
    }
}

TEST_CASE("sweep output is independent of worker count")
{
    auto cfg = small_sweep();
    cfg.frames = 12;
    const auto one = to_csv(run_ber_sweep(cfg));
    cfg.workers = 3;
    CHECK(to_csv(run_ber_sweep(cfg)) == one);
    cfg.workers = 8;
    CHECK(to_csv(run_ber_sweep(cfg)) == one);
    cfg.master_seed = 12;
    CHECK(to_csv(run_ber_sweep(cfg)) != one);
}

TEST_CASE("stall errors carry the frame identity")
{
    auto cfg = small_sweep();
    cfg.es_n0_grid = {-70.0};
    cfg.encoder.horizon_guard = 1.0;
    try {
        run_ber_sweep(cfg);
        FAIL("expected a stall");
    } catch (const encoding_stall_error& e) {
        CHECK(std::string(e.what()).find("frame") != std::string::npos);
    }
}

TEST_CASE("results CSV and JSON round trip")
{
    auto recs = run_ber_sweep(small_sweep());
    recs[0].mean_spike_compute_s = 1.0 / 3.0;
    recs[0].es_n0_db = kInf;
    for (auto fmt : {ResultFormat::csv, ResultFormat::json}) {
        std::stringstream ss;
        write_results(ss, recs, fmt);
        auto back = read_results(ss, fmt);
        for (auto& r : recs) r.skipped_frames = 0;
        CHECK(back == recs);
    }

    std::ostringstream empty;
    write_results(empty, {}, ResultFormat::csv);
    CHECK(empty.str() ==
          "es_n0_db,demod,iterations,symbols,errors,ber,mean_latency_s,max_latency_s,mean_spike_compute_s,seed\n");

    std::ostringstream js;
    write_results(js, recs, ResultFormat::json);
    const auto doc = nlohmann::json::parse(js.str());
    REQUIRE(doc.is_array());
    const std::vector<std::string> fields{"es_n0_db", "demod", "iterations", "symbols", "errors",
                                          "ber", "mean_latency_s", "max_latency_s", "mean_spike_compute_s", "seed"};
    for (const auto& rec : doc) {
        CHECK(rec.size() == fields.size());
        for (const auto& f : fields) CHECK(rec.contains(f));
    }

    std::istringstream bad("es_n0_db,demod\n");
    CHECK_THROWS_AS(read_results(bad, ResultFormat::csv), parse_error);
    CHECK_THROWS_AS(io_results(recs, "/nonexistent/dir/out.csv", ResultFormat::csv), io_error);
    CHECK_THROWS_AS(parse_format("xml"), validation_error);

    const auto path = (std::filesystem::temp_directory_path() / "tedemod_results_test.json").string();
    io_results(recs, path, ResultFormat::json);
    std::ifstream in(path);
    CHECK(read_results(in, ResultFormat::json) == recs);
    std::filesystem::remove(path);
}

TEST_CASE("config file parsing")
{
    SweepConfig cfg;
    std::istringstream in("# comment\n"
                          "frame.m = 12\n"
                          "tem.b = 4000   # bias\n"
                          "sweep.esn0 = 0:2:4\n"
                          "sweep.demods = smp,pinv-batch\n"
                          "sweep.iters = 1,full\n"
                          "sweep.seed = 99\n"
                          "sweep.workers = 2\n"
                          "sweep.timing = true\n"
                          "\n");
    apply_config(in, cfg);
    CHECK(cfg.frame.m == 12);
    CHECK(cfg.tem.b == 4000.0);
    CHECK(cfg.es_n0_grid == std::vector<double>{0, 2, 4});
    CHECK(cfg.demods.size() == 2);
    CHECK(cfg.mp_iters == std::vector<std::size_t>{1, 0});
    CHECK(cfg.master_seed == 99);
    CHECK(cfg.workers == 2);
    CHECK(cfg.timing);

    std::istringstream unknown("frame.m = 3\nfoo.bar = 1\n");
    try {
        apply_config(unknown, cfg);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream noeq("frame.m 3\n");
    CHECK_THROWS_AS(apply_config(noeq, cfg), parse_error);
    std::istringstream badval("frame.m = -3\n");
    CHECK_THROWS_AS(apply_config(badval, cfg), parse_error);
    CHECK_THROWS_AS(apply_config_file("/nonexistent/x.cfg", cfg), io_error);
}

TEST_CASE("round trip reports")
{
    SweepConfig cfg;
    cfg.frame.m = 1;
    const auto one = run_roundtrip(5, cfg);
    CHECK(one.passed());
    CHECK(one.m == 1);
    cfg.frame.m = 100;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto r = run_roundtrip(frame_seed(1, 0, s), cfg);
        CHECK(r.passed());
        CHECK(r.q_identity_max_err <= 1e-10);
        CHECK(r.g_residual_max <= 1e-9);
        CHECK(r.mismatches.size() == 5);
    }
}

TEST_CASE("latency bench")
{
    SweepConfig cfg;
    cfg.frames = 20;
    cfg.es_n0_grid = {kInf};
    const auto base = run_latency_bench(cfg);
    CHECK(base.bound == doctest::Approx(1.3347e-4).epsilon(1e-4));
    CHECK(base.decisions == 2000);
    CHECK(base.violations == 0);
    CHECK(base.flushed == 0);
    CHECK(base.min_latency >= 0.0);
    CHECK(base.max_latency <= base.bound);
    CHECK(base.histogram.size() == 20);
    CHECK_FALSE(base.has_noisy);

    cfg.tem.b = 6000.0;
    const auto fast = run_latency_bench(cfg);
    CHECK(fast.bound == doctest::Approx(base.bound / 2).epsilon(2e-3));
    CHECK(fast.max_latency <= fast.bound);
    CHECK(fast.max_latency < 0.6 * base.max_latency);

    cfg.tem.b = 3000.0;
    cfg.es_n0_grid = {kInf, 6.0};
    const auto noisy = run_latency_bench(cfg);
    CHECK(noisy.has_noisy);
    CHECK(noisy.noisy_es_n0_db == 6.0);
    CHECK(noisy.noisy_decisions > 1900);
}

TEST_CASE("complexity bench")
{
    SweepConfig cfg;
    const auto rep = run_complexity_bench({50, 100, 200, 400}, cfg);
    CHECK(rep.find("smp").slope >= 0.9);
    CHECK(rep.find("smp").slope <= 1.1);
    CHECK(rep.find("pinv-symbol").slope >= 0.9);
    CHECK(rep.find("pinv-symbol").slope <= 1.1);
    CHECK(rep.find("pinv-dense").slope >= 2.0);
    CHECK_THROWS_AS(rep.find("nope"), validation_error);
    CHECK_THROWS_AS(run_complexity_bench({50, 100}, cfg), validation_error);
    CHECK_THROWS_AS(run_complexity_bench({100, 50, 200}, cfg), validation_error);

    CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
}
