// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include "tedemod/encoder.hpp"
#include "tedemod/harness.hpp"
#include "tedemod/mp_demod.hpp"
#include "tedemod/sampling_matrix.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace tedemod;

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail)
{
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SweepConfig reference_sweep()
{
    SweepConfig cfg;
    cfg.frame.m = 100;
    cfg.frames = 1000;
    cfg.es_n0_grid = {2.0, 4.0, 6.0};
    cfg.demods = {Demod::smp, Demod::mp, Demod::pinv_batch, Demod::pinv_symbol};
    cfg.mp_iters = {1, 0};
    cfg.master_seed = 2024;
    return cfg;
}

std::string csv(const std::vector<BerRecord>& recs)
{
    std::ostringstream out;
    write_results(out, recs, ResultFormat::csv);
    return out.str();
}

const BerRecord& find(const std::vector<BerRecord>& recs, double db, const std::string& demod, std::size_t iters = 0)
{
    for (const auto& r : recs)
        if (r.es_n0_db == db && r.demod == demod && (demod != "mp" || r.iterations == iters)) return r;
    throw std::runtime_error("missing record " + demod);
}

void criteria_1_2()
{
    SweepConfig cfg;
    const auto t0 = clock_type::now();
    std::size_t passed = 0, spikes = 0;
    double q_err = 0.0, g_err = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto rep = run_roundtrip(frame_seed(cfg.master_seed, 0, s), cfg);
        bool all = true;
        for (const auto& [name, idx] : rep.mismatches) all = all && idx.empty();
        passed += all && rep.mismatches.size() == 5;
        spikes += rep.spikes;
        q_err = std::max(q_err, rep.q_identity_max_err);
        g_err = std::max(g_err, rep.g_residual_max);
    }
    const double secs = elapsed(t0);
    report(1, passed == 50 && secs < 5.0,
           fmt("%zu/50 frames recovered 100/100 by smp, mp@1, mp@99, pinv-batch, pinv-symbol in %.3f s", passed, secs));
    report(2, q_err <= 1e-10 && g_err <= 1e-9,
           fmt("over %zu spikes max |integral - (C delta - b T_k)| = %.3g, max |q_k - sqrt(Es)(GA)_k| = %.3g", spikes,
               q_err, g_err));
}

void criterion_3()
{
    const auto t0 = clock_type::now();
    std::size_t trials = 0, decision_ok = 0;
    double worst = 0.0;
    for (std::size_t m : {4u, 6u, 8u}) {
        FrameConfig f;
        f.m = m;
        const auto tem = TemParams::for_frame(f);
        const auto chan = ChannelParams::from_es_n0(f.Es, 4.0);
        for (std::uint64_t s = 0; s < 200; ++s) {
            std::mt19937_64 rng(frame_seed(3, m, s));
            const auto fr = ModulationFrame::random(f, rng);
            const auto train = encode_stochastic(fr, tem, chan, EncoderConfig{}, rng());
            const auto meas = measurements_from_spikes(train, tem);
            const auto G = build_g(train, f);
            const auto mp = run_mp(meas, G, f, chan, m - 1);
            const auto bf = exact_marginals_bruteforce(meas, G, f.Es, chan.sigma2);
            bool same = true;
            for (std::size_t i = 0; i < m; ++i) {
                same = same && mp.decisions[i] == hard_sign(bf[i]);
                worst = std::max(worst, std::abs(mp.llr[i] - bf[i]) / std::max(1.0, std::abs(bf[i])));
            }
            decision_ok += same;
            ++trials;
        }
    }
    const double secs = elapsed(t0);
    report(3, decision_ok == trials && worst <= 1e-6 && secs < 120.0,
           fmt("%zu/%zu trials with identical decisions, max LLR relative error %.3g, %.2f s", decision_ok, trials,
               worst, secs));
}

std::vector<BerRecord> criteria_4_5_6()
{
    const auto cfg = reference_sweep();
    const auto t0 = clock_type::now();
    const auto recs = run_ber_sweep(cfg);
    const double secs = elapsed(t0);

    bool ok4 = secs < 600.0;
    std::string detail;
    for (double db : cfg.es_n0_grid) {
        const std::vector<const BerRecord*> cluster{&find(recs, db, "pinv-batch"), &find(recs, db, "mp", 1),
                                                    &find(recs, db, "mp", 99), &find(recs, db, "smp")};
        double centre = 0.0;
        for (auto* r : cluster) centre += r->ber / cluster.size();
        const double n = static_cast<double>(cluster.front()->symbols);
        const double sd = std::sqrt(centre * (1.0 - centre) / n);
        bool within = true;
        for (auto* r : cluster) within = within && r->symbols == 100000 && std::abs(r->ber - centre) <= 3.0 * sd;
        const double theory = theoretical_bpsk_ber(db);
        const double ratio = centre / theory;
        const bool near = ratio <= 2.0 && ratio >= 0.5;
        ok4 = ok4 && within && near;
        detail += fmt("%g dB cluster %.4g (pinv-batch %.4g, mp@1 %.4g, mp@99 %.4g, smp %.4g; 3sd %.2g) theory %.4g; ",
                      db, centre, cluster[0]->ber, cluster[1]->ber, cluster[2]->ber, cluster[3]->ber, 3 * sd, theory);
    }
    report(4, ok4, detail + fmt("%.1f s", secs));

    const auto& sw = find(recs, 6.0, "pinv-symbol");
    const auto& smp = find(recs, 6.0, "smp");
    const double n5 = static_cast<double>(smp.symbols);
    const double pooled = (sw.ber + smp.ber) / 2.0;
    const double z = (sw.ber - smp.ber) / std::sqrt(pooled * (1.0 - pooled) * 2.0 / n5);
    report(5, z > 1.645, fmt("6 dB pinv-symbol BER %.4g vs smp %.4g, one-sided z = %.2f (needs > 1.645)", sw.ber,
                             smp.ber, z));

    const auto& a = find(recs, 4.0, "mp", 1);
    const auto& b = find(recs, 4.0, "mp", 99);
    const double n6 = static_cast<double>(a.symbols);
    const double sd6 = std::sqrt(a.ber * (1 - a.ber) / n6 + b.ber * (1 - b.ber) / n6);
    report(6, std::abs(a.ber - b.ber) < 3.0 * sd6,
           fmt("4 dB mp@1 %.4g vs mp@99 %.4g, |diff| %.3g < 3 combined sd %.3g", a.ber, b.ber, std::abs(a.ber - b.ber),
               3.0 * sd6));
    return recs;
}

void criterion_7()
{
    SweepConfig cfg;
    cfg.frames = 100;
    cfg.es_n0_grid = {std::numeric_limits<double>::infinity()};
    const auto rep = run_latency_bench(cfg);
    report(7, rep.violations == 0 && rep.flushed == 0 && rep.decisions == 10000 && rep.max_latency <= rep.bound,
           fmt("max latency %.6g s over %llu decisions, bound C delta/(b-c) = %.6g s (reference 1.3347e-4)",
               rep.max_latency, static_cast<unsigned long long>(rep.decisions), rep.bound));
}

void criterion_8()
{
    SweepConfig cfg;
    const auto rep = run_complexity_bench({50, 100, 200, 400}, cfg);
    const double smp = rep.find("smp").slope, dense = rep.find("pinv-dense").slope;
    report(8, smp >= 0.9 && smp <= 1.1 && dense >= 2.0,
           fmt("smp slope %.3f in [0.9, 1.1], dense pinv slope %.3f >= 2.0 (mp %.3f, pinv-batch %.3f, pinv-symbol %.3f)",
               smp, dense, rep.find("mp").slope, rep.find("pinv-batch").slope, rep.find("pinv-symbol").slope));
}

void criterion_9(const std::vector<BerRecord>& reference)
{
    const std::string ref = csv(reference);
    bool same = true;
    std::string detail = "criterion-4 sweep CSV (" + std::to_string(ref.size()) + " bytes) with workers";
    for (unsigned w : {2u, 4u}) {
        auto cfg = reference_sweep();
        cfg.workers = w;
        const bool eq = csv(run_ber_sweep(cfg)) == ref;
        same = same && eq;
        detail += fmt(" %u:%s", w, eq ? "identical" : "DIFFERENT");
    }
    report(9, same, detail + " vs workers 1");
}

} // namespace

int main()
{
    try {
        criteria_1_2();
        criterion_3();
        const auto recs = criteria_4_5_6();
        criterion_7();
        criterion_8();
        criterion_9(recs);
    } catch (const std::exception& e) {
        std::printf("FAIL acceptance aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criterion/criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
