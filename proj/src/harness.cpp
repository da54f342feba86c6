#include "tedemod/harness.hpp"

#include "tedemod/errors.hpp"
#include "tedemod/format.hpp"
#include "tedemod/mp_demod.hpp"
#include "tedemod/sampling_matrix.hpp"
#include "tedemod/smp_demod.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace tedemod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Channel assumed by the LLR demodulators when the data itself is noiseless.
constexpr double kNominalEsN0Db = 10.0;

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double to_double(std::string_view text)
{
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf" || t == "Inf") return kInf;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw validation_error("not a number: '" + t + "'");
    return v;
}

std::uint64_t to_u64(std::string_view text)
{
    const std::string t = trim(text);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw validation_error("not a non-negative integer: '" + t + "'");
    return v;
}

bool to_bool(std::string_view text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw validation_error("not a boolean: '" + t + "'");
}

ChannelParams channel_for(const SweepConfig& cfg, double es_n0_db)
{
    if (es_n0_db == kInf) return ChannelParams::noiseless();
    return ChannelParams::from_es_n0(cfg.frame.Es, es_n0_db);
}

ChannelParams nominal_channel(const FrameConfig& frame)
{
    if (!(frame.Es > 0.0)) return ChannelParams::noiseless();
    return ChannelParams::from_es_n0(frame.Es, kNominalEsN0Db);
}

std::optional<std::size_t> uncovered_column(const SamplingMatrix& G)
{
    std::vector<bool> seen(G.cols(), false);
    for (const auto& r : G.band()) {
        seen[r.first_col] = true;
        if (r.nnz == 2) seen[r.first_col + 1] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) return i;
    return std::nullopt;
}

std::uint64_t count_errors(std::span<const int> truth, std::span<const int> decisions)
{
    std::uint64_t e = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) e += truth[i] != decisions[i];
    return e;
}

struct Slot {
    Demod demod;
    std::size_t iters;  // resolved; 0 for non-MP demodulators
};

std::vector<Slot> record_slots(const SweepConfig& cfg)
{
    std::vector<Slot> slots;
    for (Demod d : cfg.demods) {
        if (d == Demod::mp) {
            for (std::size_t it : cfg.mp_iters) slots.push_back({d, cfg.resolved_iters(it)});
        } else {
            slots.push_back({d, 0});
        }
    }
    return slots;
}

struct FrameOutcome {
    bool skipped = false;
    std::vector<std::uint64_t> errors;
    double latency_sum = 0.0;
    double latency_max = 0.0;
    std::uint64_t latency_count = 0;
    double compute_sum = 0.0;
    std::uint64_t spikes = 0;
};

FrameOutcome process_frame(const SweepConfig& cfg, const std::vector<Slot>& slots, std::size_t point,
                           std::size_t frame_index)
{
    const double es_n0_db = cfg.es_n0_grid[point];
    const TemParams tem = cfg.resolved_tem();
    const ChannelParams chan = channel_for(cfg, es_n0_db);

    std::mt19937_64 rng(frame_seed(cfg.master_seed, point, frame_index));
    const auto frame = ModulationFrame::random(cfg.frame, rng);
    const std::uint64_t noise_seed = rng();

    FrameOutcome out;
    out.errors.assign(slots.size(), 0);

    SpikeTrain train;
    try {
        train = chan.is_noiseless() ? encode_exact(frame, tem)
                                    : encode_stochastic(frame, tem, chan, cfg.encoder, noise_seed);
    } catch (const encoding_stall_error& e) {
        throw encoding_stall_error("Es/N0 " + format_double(es_n0_db) + " dB, frame " +
                                   std::to_string(frame_index) + ": " + e.what());
    }

    std::optional<SamplingMatrix> G;
    try {
        G.emplace(build_g(train, cfg.frame));
    } catch (const band_width_error&) {
        out.skipped = true;
        return out;
    }
    if (uncovered_column(*G)) {
        out.skipped = true;
        return out;
    }
    const auto meas = measurements_from_spikes(train, tem);
    const auto truth = frame.symbols();

    std::optional<FactorGraphIndex> graph;
    for (std::size_t s = 0; s < slots.size(); ++s) {
        switch (slots[s].demod) {
        case Demod::smp: {
            SmpDemodulator smp(SmpConfig{tem, cfg.frame, chan});
            for (double t : train.times()) {
                if (smp.complete()) break;
                std::optional<DecisionEvent> ev;
                if (cfg.timing) {
                    const auto t0 = std::chrono::steady_clock::now();
                    ev = smp.on_spike(t);
                    out.compute_sum +=
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                } else {
                    ev = smp.on_spike(t);
                }
                ++out.spikes;
                if (ev) {
                    out.latency_sum += ev->latency;
                    out.latency_max = out.latency_count ? std::max(out.latency_max, ev->latency) : ev->latency;
                    ++out.latency_count;
                }
            }
            smp.flush();
            out.errors[s] = count_errors(truth, smp.state().decisions);
            break;
        }
        case Demod::mp:
            out.errors[s] = count_errors(truth, run_mp(meas, *G, cfg.frame, chan, slots[s].iters).decisions);
            break;
        case Demod::pinv_batch:
            out.errors[s] = count_errors(truth, demod_batch_pinv(meas, *G, cfg.frame.Es).decisions);
            break;
        case Demod::pinv_symbol:
            if (!graph) graph.emplace(index_factor_graph(*G));
            out.errors[s] = count_errors(truth, demod_symbolwise_pinv(meas, *G, *graph, cfg.frame.Es).decisions);
            break;
        }
    }
    return out;
}

// Runs task(0..count-1) on `workers` threads; the exception of the lowest
// failing index is rethrown.
template <typename Task>
void parallel_for(std::size_t count, unsigned workers, Task task)
{
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = count;
    std::exception_ptr failure;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace

const char* demod_name(Demod d) noexcept
{
    switch (d) {
    case Demod::smp: return "smp";
    case Demod::mp: return "mp";
    case Demod::pinv_batch: return "pinv-batch";
    case Demod::pinv_symbol: return "pinv-symbol";
    }
    return "?";
}

Demod parse_demod(std::string_view name)
{
    const std::string n = trim(name);
    if (n == "smp") return Demod::smp;
    if (n == "mp") return Demod::mp;
    if (n == "pinv-batch") return Demod::pinv_batch;
    if (n == "pinv-symbol") return Demod::pinv_symbol;
    throw validation_error("unknown demodulator '" + n + "' (expected smp, mp, pinv-batch, pinv-symbol)");
}

std::vector<Demod> parse_demod_list(std::string_view list)
{
    std::vector<Demod> out;
    for (const auto& tok : split(list, ',')) {
        if (tok == "all") return {Demod::smp, Demod::mp, Demod::pinv_batch, Demod::pinv_symbol};
        out.push_back(parse_demod(tok));
    }
    return out;
}

SweepConfig::SweepConfig()
{
    for (int db = 0; db <= 10; ++db) es_n0_grid.push_back(db);
}

TemParams SweepConfig::resolved_tem() const
{
    TemParams t = tem;
    if (tem_c_auto) t.c = frame.amplitude();
    return t;
}

std::size_t SweepConfig::resolved_iters(std::size_t iters) const
{
    if (iters != 0) return iters;
    return frame.m > 1 ? frame.m - 1 : 1;
}

void SweepConfig::validate() const
{
    frame.validate();
    resolved_tem().validate(frame);
    encoder.validate();
    if (frames < 1) throw validation_error("sweep: frames must be at least 1");
    if (es_n0_grid.empty()) throw validation_error("sweep: Es/N0 grid is empty");
    for (double db : es_n0_grid)
        if (std::isnan(db) || db == -kInf) throw validation_error("sweep: invalid Es/N0 grid point");
    if (demods.empty()) throw validation_error("sweep: no demodulators selected");
    if (mp_iters.empty()) throw validation_error("sweep: no MP iteration counts");
    if (!(frame.Es > 0.0))
        for (double db : es_n0_grid)
            if (db != kInf) throw validation_error("sweep: a finite Es/N0 needs Es > 0");
}

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t frame_seed(std::uint64_t master, std::uint64_t point, std::uint64_t frame) noexcept
{
    return mix64(mix64(mix64(master) ^ point) ^ frame);
}

std::vector<BerRecord> run_ber_sweep(const SweepConfig& cfg)
{
    cfg.validate();
    const auto slots = record_slots(cfg);
    const std::size_t points = cfg.es_n0_grid.size();
    std::vector<FrameOutcome> outcomes(points * cfg.frames);

    parallel_for(outcomes.size(), cfg.workers, [&](std::size_t task) {
        outcomes[task] = process_frame(cfg, slots, task / cfg.frames, task % cfg.frames);
    });

    std::vector<BerRecord> records;
    for (std::size_t p = 0; p < points; ++p) {
        for (std::size_t s = 0; s < slots.size(); ++s) {
            BerRecord rec;
            rec.es_n0_db = cfg.es_n0_grid[p];
            rec.demod = demod_name(slots[s].demod);
            rec.iterations = slots[s].iters;
            rec.seed = cfg.master_seed;
            double lat_sum = 0.0, compute_sum = 0.0;
            std::uint64_t lat_count = 0, spikes = 0;
            for (std::size_t f = 0; f < cfg.frames; ++f) {
                const auto& o = outcomes[p * cfg.frames + f];
                if (o.skipped) {
                    ++rec.skipped_frames;
                    continue;
                }
                rec.symbols += cfg.frame.m;
                rec.errors += o.errors[s];
                if (slots[s].demod == Demod::smp) {
                    lat_sum += o.latency_sum;
                    if (o.latency_count)
                        rec.max_latency_s = lat_count ? std::max(rec.max_latency_s, o.latency_max) : o.latency_max;
                    lat_count += o.latency_count;
                    compute_sum += o.compute_sum;
                    spikes += o.spikes;
                }
            }
            rec.ber = rec.symbols ? static_cast<double>(rec.errors) / static_cast<double>(rec.symbols) : 0.0;
            if (lat_count) rec.mean_latency_s = lat_sum / static_cast<double>(lat_count);
            if (spikes && cfg.timing) rec.mean_spike_compute_s = compute_sum / static_cast<double>(spikes);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

bool RoundtripReport::passed() const
{
    for (const auto& [name, idx] : mismatches)
        if (!idx.empty()) return false;
    return q_identity_max_err <= 1e-10 && g_residual_max <= 1e-9;
}

RoundtripReport run_roundtrip(std::uint64_t seed, const SweepConfig& cfg)
{
    cfg.frame.validate();
    const TemParams tem = cfg.resolved_tem();
    tem.validate(cfg.frame);
    std::mt19937_64 rng(seed);
    const auto frame = ModulationFrame::random(cfg.frame, rng);
    const auto train = encode_exact(frame, tem);
    const auto meas = measurements_from_spikes(train, tem);
    const auto G = build_g(train, cfg.frame);
    const auto mean = apply_g(G, frame.symbols(), cfg.frame.Es);
    const auto chan = nominal_channel(cfg.frame);

    RoundtripReport rep;
    rep.seed = seed;
    rep.m = cfg.frame.m;
    rep.spikes = train.size();
    for (std::size_t k = 0; k < G.rows(); ++k) {
        const double direct = waveform_integral(frame, train.t(k), train.t(k + 1));
        rep.q_identity_max_err = std::max(rep.q_identity_max_err, std::abs(direct - meas.q[k]));
        rep.g_residual_max = std::max(rep.g_residual_max, std::abs(meas.q[k] - mean[k]));
    }

    auto wrong = [&](std::span<const int> decisions) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < cfg.frame.m; ++i)
            if (decisions[i] != frame.symbol(i)) idx.push_back(i);
        return idx;
    };

    SmpDemodulator smp(SmpConfig{tem, cfg.frame, chan});
    for (double t : train.times()) smp.on_spike(t);
    smp.flush();
    rep.mismatches.emplace_back("smp", wrong(smp.state().decisions));

    std::vector<std::size_t> iters{1, cfg.resolved_iters(0)};
    for (std::size_t it : iters)
        rep.mismatches.emplace_back("mp@" + std::to_string(it), wrong(run_mp(meas, G, cfg.frame, chan, it).decisions));

    rep.mismatches.emplace_back("pinv-batch", wrong(demod_batch_pinv(meas, G, cfg.frame.Es).decisions));
    const auto graph = index_factor_graph(G);
    rep.mismatches.emplace_back("pinv-symbol", wrong(demod_symbolwise_pinv(meas, G, graph, cfg.frame.Es).decisions));
    return rep;
}

LatencyReport run_latency_bench(const SweepConfig& cfg)
{
    cfg.validate();
    const TemParams tem = cfg.resolved_tem();
    LatencyReport rep;
    rep.bound = tem.max_interval();
    rep.histogram.assign(20, 0);
    rep.min_latency = kInf;

    const auto chan = nominal_channel(cfg.frame);
    double sum = 0.0;
    for (std::size_t f = 0; f < cfg.frames; ++f) {
        std::mt19937_64 rng(frame_seed(cfg.master_seed, 0, f));
        const auto frame = ModulationFrame::random(cfg.frame, rng);
        const auto train = encode_exact(frame, tem);
        SmpDemodulator smp(SmpConfig{tem, cfg.frame, chan});
        for (double t : train.times()) {
            const auto ev = smp.on_spike(t);
            if (!ev) continue;
            ++rep.decisions;
            sum += ev->latency;
            rep.max_latency = rep.decisions == 1 ? ev->latency : std::max(rep.max_latency, ev->latency);
            rep.min_latency = std::min(rep.min_latency, ev->latency);
            if (ev->latency > rep.bound) ++rep.violations;
            auto bin = static_cast<std::size_t>(std::max(0.0, ev->latency) / rep.bound * 20.0);
            ++rep.histogram[std::min<std::size_t>(bin, 19)];
        }
        rep.flushed += smp.flush().size();
    }
    if (rep.decisions) rep.mean_latency = sum / static_cast<double>(rep.decisions);

    const auto noisy = std::find_if(cfg.es_n0_grid.begin(), cfg.es_n0_grid.end(),
                                    [](double db) { return std::isfinite(db); });
    if (noisy != cfg.es_n0_grid.end()) {
        rep.has_noisy = true;
        rep.noisy_es_n0_db = *noisy;
        const auto nchan = channel_for(cfg, *noisy);
        for (std::size_t f = 0; f < cfg.frames; ++f) {
            std::mt19937_64 rng(frame_seed(cfg.master_seed, 1, f));
            const auto frame = ModulationFrame::random(cfg.frame, rng);
            const auto train = encode_stochastic(frame, tem, nchan, cfg.encoder, rng());
            SmpDemodulator smp(SmpConfig{tem, cfg.frame, nchan});
            try {
                for (double t : train.times()) {
                    const auto ev = smp.on_spike(t);
                    if (!ev) continue;
                    rep.noisy_max_latency =
                        rep.noisy_decisions ? std::max(rep.noisy_max_latency, ev->latency) : ev->latency;
                    ++rep.noisy_decisions;
                    if (ev->latency > rep.bound) ++rep.noisy_violations;
                }
            } catch (const validation_error&) {
                // An interval spanning two boundaries; nothing to time.
            }
        }
    }
    return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw validation_error("loglog_slope: need two or more points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

const ComplexitySeries& ComplexityReport::find(std::string_view demod) const
{
    for (const auto& s : series)
        if (s.demod == demod) return s;
    throw validation_error("complexity report has no series '" + std::string(demod) + "'");
}

ComplexityReport run_complexity_bench(const std::vector<std::size_t>& m_list, const SweepConfig& cfg)
{
    if (m_list.size() < 3) throw validation_error("complexity bench: need at least 3 frame sizes");
    if (!std::is_sorted(m_list.begin(), m_list.end()) ||
        std::adjacent_find(m_list.begin(), m_list.end()) != m_list.end())
        throw validation_error("complexity bench: frame sizes must be strictly ascending");

    ComplexityReport rep;
    rep.m_list = m_list;
    const OpMode modes[] = {OpMode::smp, OpMode::mp, OpMode::pinv_batch, OpMode::pinv_symbol, OpMode::pinv_dense};
    std::vector<double> xs(m_list.begin(), m_list.end());
    for (OpMode mode : modes) {
        ComplexitySeries s;
        s.demod = op_mode_name(mode);
        std::vector<double> ys;
        for (std::size_t m : m_list) {
            FrameConfig frame = cfg.frame;
            frame.m = m;
            TemParams tem = cfg.tem;
            if (cfg.tem_c_auto) tem.c = frame.amplitude();
            const auto tally_out = count_ops(mode, frame, tem, nominal_channel(frame), frame_seed(cfg.master_seed, m, 0));
            s.tallies.push_back(tally_out.mac);
            s.spikes.push_back(tally_out.spikes);
            ys.push_back(static_cast<double>(tally_out.mac));
        }
        s.slope = loglog_slope(xs, ys);
        rep.series.push_back(std::move(s));
    }
    return rep;
}

ResultFormat parse_format(std::string_view name)
{
    const std::string n = trim(name);
    if (n == "csv") return ResultFormat::csv;
    if (n == "json") return ResultFormat::json;
    throw validation_error("unknown format '" + n + "' (expected csv or json)");
}

namespace {

constexpr const char* kCsvHeader =
    "es_n0_db,demod,iterations,symbols,errors,ber,mean_latency_s,max_latency_s,mean_spike_compute_s,seed";

std::string json_number(double v)
{
    return std::isfinite(v) ? format_double(v) : std::string(v > 0 ? "\"inf\"" : "null");
}

double json_to_double(const nlohmann::json& j)
{
    if (j.is_string()) return to_double(j.get<std::string>());
    return j.get<double>();
}

} // namespace

void write_results(std::ostream& out, const std::vector<BerRecord>& records, ResultFormat format)
{
    if (format == ResultFormat::csv) {
        out << kCsvHeader << '\n';
        for (const auto& r : records)
            out << format_double(r.es_n0_db) << ',' << r.demod << ',' << r.iterations << ',' << r.symbols << ','
                << r.errors << ',' << format_double(r.ber) << ',' << format_double(r.mean_latency_s) << ','
                << format_double(r.max_latency_s) << ',' << format_double(r.mean_spike_compute_s) << ','
                << r.seed << '\n';
    } else {
        out << "[";
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            out << (i ? ",\n " : "\n ") << "{\"es_n0_db\": " << json_number(r.es_n0_db)
                << ", \"demod\": " << nlohmann::json(r.demod).dump() << ", \"iterations\": " << r.iterations
                << ", \"symbols\": " << r.symbols << ", \"errors\": " << r.errors
                << ", \"ber\": " << json_number(r.ber) << ", \"mean_latency_s\": " << json_number(r.mean_latency_s)
                << ", \"max_latency_s\": " << json_number(r.max_latency_s)
                << ", \"mean_spike_compute_s\": " << json_number(r.mean_spike_compute_s)
                << ", \"seed\": " << r.seed << "}";
        }
        out << (records.empty() ? "]\n" : "\n]\n");
    }
    if (!out) throw io_error("results: write failed");
}

std::vector<BerRecord> read_results(std::istream& in, ResultFormat format)
{
    std::vector<BerRecord> records;
    if (format == ResultFormat::csv) {
        std::string line;
        if (!std::getline(in, line) || trim(line) != kCsvHeader) throw parse_error(1, "missing or wrong CSV header");
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            const auto f = split(line, ',');
            if (f.size() != 10) throw parse_error(lineno, "expected 10 fields");
            try {
                BerRecord r;
                r.es_n0_db = to_double(f[0]);
                r.demod = f[1];
                r.iterations = to_u64(f[2]);
                r.symbols = to_u64(f[3]);
                r.errors = to_u64(f[4]);
                r.ber = to_double(f[5]);
                r.mean_latency_s = to_double(f[6]);
                r.max_latency_s = to_double(f[7]);
                r.mean_spike_compute_s = to_double(f[8]);
                r.seed = to_u64(f[9]);
                records.push_back(std::move(r));
            } catch (const parse_error&) {
                throw;
            } catch (const validation_error& e) {
                throw parse_error(lineno, e.what());
            }
        }
        return records;
    }

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(0, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw parse_error(0, "results JSON must be an array");
    for (const auto& j : doc) {
        try {
            BerRecord r;
            r.es_n0_db = json_to_double(j.at("es_n0_db"));
            r.demod = j.at("demod").get<std::string>();
            r.iterations = j.at("iterations").get<std::size_t>();
            r.symbols = j.at("symbols").get<std::uint64_t>();
            r.errors = j.at("errors").get<std::uint64_t>();
            r.ber = json_to_double(j.at("ber"));
            r.mean_latency_s = json_to_double(j.at("mean_latency_s"));
            r.max_latency_s = json_to_double(j.at("max_latency_s"));
            r.mean_spike_compute_s = json_to_double(j.at("mean_spike_compute_s"));
            r.seed = j.at("seed").get<std::uint64_t>();
            records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(0, std::string("bad result record: ") + e.what());
        }
    }
    return records;
}

void io_results(const std::vector<BerRecord>& records, const std::string& path, ResultFormat format)
{
    std::ofstream out(path);
    if (!out) throw io_error("results: cannot open " + path + " for writing");
    write_results(out, records, format);
}

std::vector<double> parse_grid(std::string_view text)
{
    const std::string t = trim(text);
    std::vector<double> grid;
    if (t.find(':') != std::string::npos) {
        const auto parts = split(t, ':');
        if (parts.size() != 3) throw validation_error("grid '" + t + "' must be start:step:stop");
        const double start = to_double(parts[0]), step = to_double(parts[1]), stop = to_double(parts[2]);
        if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0.0))
            throw validation_error("grid '" + t + "' needs finite bounds and a positive step");
        const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
        if (n < 0) throw validation_error("grid '" + t + "' is empty");
        for (long i = 0; i <= n; ++i) grid.push_back(start + static_cast<double>(i) * step);
        return grid;
    }
    for (const auto& tok : split(t, ',')) grid.push_back(to_double(tok));
    return grid;
}

std::vector<std::size_t> parse_iters(std::string_view text)
{
    std::vector<std::size_t> out;
    for (const auto& tok : split(text, ',')) out.push_back(tok == "full" ? 0 : to_u64(tok));
    return out;
}

void apply_config(std::istream& in, SweepConfig& cfg)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw parse_error(lineno, "expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        try {
            if (key == "frame.m") cfg.frame.m = to_u64(value);
            else if (key == "frame.Ts") cfg.frame.Ts = to_double(value);
            else if (key == "frame.Es") cfg.frame.Es = to_double(value);
            else if (key == "tem.C") cfg.tem.C = to_double(value);
            else if (key == "tem.delta") cfg.tem.delta = to_double(value);
            else if (key == "tem.b") cfg.tem.b = to_double(value);
            else if (key == "tem.c") {
                cfg.tem.c = to_double(value);
                cfg.tem_c_auto = false;
            }
            else if (key == "encoder.oversample") cfg.encoder.oversample = static_cast<int>(to_u64(value));
            else if (key == "encoder.horizon_guard") cfg.encoder.horizon_guard = to_double(value);
            else if (key == "sweep.esn0") cfg.es_n0_grid = parse_grid(value);
            else if (key == "sweep.frames") cfg.frames = to_u64(value);
            else if (key == "sweep.demods") cfg.demods = parse_demod_list(value);
            else if (key == "sweep.iters") cfg.mp_iters = parse_iters(value);
            else if (key == "sweep.seed") cfg.master_seed = to_u64(value);
            else if (key == "sweep.workers") cfg.workers = static_cast<unsigned>(to_u64(value));
            else if (key == "sweep.timing") cfg.timing = to_bool(value);
            else throw parse_error(lineno, "unknown key '" + key + "'");
        } catch (const parse_error&) {
            throw;
        } catch (const validation_error& e) {
            throw parse_error(lineno, key + ": " + e.what());
        }
    }
}

void apply_config_file(const std::string& path, SweepConfig& cfg)
{
    std::ifstream in(path);
    if (!in) throw io_error("config: cannot open " + path);
    apply_config(in, cfg);
}

} // namespace tedemod
