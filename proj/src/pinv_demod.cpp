#include "tedemod/pinv_demod.hpp"

#include "tedemod/errors.hpp"
#include "tedemod/smp_demod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

namespace tedemod {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start)
{
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

void check_sizes(const Measurements& meas, const SamplingMatrix& G, const char* who)
{
    if (meas.size() < G.rows())
        throw validation_error(std::string(who) + ": " + std::to_string(meas.size()) +
                               " measurements for " + std::to_string(G.rows()) + " matrix rows");
}

// Upper-bidiagonal R with the rotated right-hand side, built one row at a time.
class BandQr {
public:
    explicit BandQr(std::size_t m) : diag_(m, 0.0), super_(m, 0.0), rhs_(m, 0.0), used_(m, false) {}

    void add_row(std::size_t col, double a, double next, double b, OpCounter* counter)
    {
        const std::size_t m = diag_.size();
        std::size_t pos = col;
        while (pos < m && (a != 0.0 || next != 0.0)) {
            if (a == 0.0) {
                ++pos;
                a = next;
                next = 0.0;
                continue;
            }
            if (!used_[pos]) {
                used_[pos] = true;
                diag_[pos] = a;
                super_[pos] = pos + 1 < m ? next : 0.0;
                rhs_[pos] = b;
                return;
            }
            const double r = std::hypot(diag_[pos], a);
            const double c = diag_[pos] / r;
            const double s = a / r;
            const double sup = super_[pos];
            diag_[pos] = r;
            super_[pos] = c * sup + s * next;
            const double carry = -s * sup + c * next;
            const double z = rhs_[pos];
            rhs_[pos] = c * z + s * b;
            b = -s * z + c * b;
            tally(counter, 12);
            ++pos;
            a = carry;
            next = 0.0;
        }
        residual_sq_ += b * b;
        tally(counter, 1);
    }

    std::vector<double> solve(OpCounter* counter) const
    {
        const std::size_t m = diag_.size();
        double scale = 0.0;
        for (double d : diag_) scale = std::max(scale, std::abs(d));
        for (std::size_t i = 0; i < m; ++i)
            if (!used_[i] || std::abs(diag_[i]) <= scale * 1e-13)
                throw rank_error(i, "batch pseudo-inverse: symbol " + std::to_string(i) +
                                        " is not covered by any spike interval (rank deficient)");
        std::vector<double> x(m);
        for (std::size_t i = m; i-- > 0;) {
            double acc = rhs_[i];
            if (i + 1 < m) acc -= super_[i] * x[i + 1];
            x[i] = acc / diag_[i];
        }
        tally(counter, 3 * m);
        return x;
    }

    double residual_norm() const { return std::sqrt(residual_sq_); }

private:
    std::vector<double> diag_, super_, rhs_;
    std::vector<bool> used_;
    double residual_sq_ = 0.0;
};

void finish_report(LeastSquaresReport& rep, std::vector<double> x, double Es)
{
    const double scale = Es > 0.0 ? 1.0 / std::sqrt(Es) : 1.0;
    rep.decisions.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        rep.decisions[i] = hard_sign(x[i]);
        x[i] *= scale;
    }
    rep.solution = std::move(x);
}

} // namespace

LeastSquaresReport demod_batch_pinv(const Measurements& meas, const SamplingMatrix& G, double Es)
{
    check_sizes(meas, G, "demod_batch_pinv");
    const auto start = clock_type::now();
    OpCounter ops;
    BandQr qr(G.cols());
    for (std::size_t k = 0; k < G.rows(); ++k) {
        const auto& r = G.row(k);
        qr.add_row(r.first_col, r.values[0], r.nnz == 2 ? r.values[1] : 0.0, meas.q[k], &ops);
    }
    LeastSquaresReport rep;
    finish_report(rep, qr.solve(&ops), Es);
    rep.residual_norm = qr.residual_norm();
    rep.op_count = ops.mac;
    rep.wall_time_s = seconds_since(start);
    return rep;
}

SymbolwiseResult demod_symbolwise_pinv(const Measurements& meas, const SamplingMatrix& G,
                                       const FactorGraphIndex& graph, double Es, OpCounter* counter)
{
    (void)Es;  // a positive scale does not change the sign
    check_sizes(meas, G, "demod_symbolwise_pinv");
    SymbolwiseResult out;
    out.decisions.resize(G.cols());
    for (std::size_t i = 0; i < G.cols(); ++i) {
        const auto& rows = graph.intrinsic.at(i);
        if (rows.empty()) {
            out.decisions[i] = 1;
            out.uncovered.push_back(i);
            continue;
        }
        // (g|Q)^+ (q|Q) = <g, q> / <g, g>; the denominator is positive.
        double num = 0.0;
        for (std::size_t k : rows) num += G.at(k, i) * meas.q[k];
        out.decisions[i] = hard_sign(num);
        tally(counter, rows.size() + 1);
    }
    return out;
}

LeastSquaresReport solve_dense_least_squares(const Measurements& meas, const SamplingMatrix& G,
                                             double Es, OpCounter* counter)
{
    check_sizes(meas, G, "solve_dense_least_squares");
    const auto start = clock_type::now();
    OpCounter local;
    OpCounter& ops = counter ? *counter : local;
    const std::uint64_t before = ops.mac;

    const std::size_t n = G.rows();
    const std::size_t m = G.cols();
    const auto dense = to_dense(G);

    // Normal equations (G^T G) x = G^T q, upper triangle.
    std::vector<double> gram(m * m, 0.0), rhs(m, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& row = dense[k];
        for (std::size_t i = 0; i < m; ++i) {
            rhs[i] += row[i] * meas.q[k];
            for (std::size_t j = i; j < m; ++j) gram[i * m + j] += row[i] * row[j];
        }
    }
    ops.add(static_cast<std::uint64_t>(n) * (m + m * (m + 1) / 2));

    // Cholesky, upper factor U with U^T U = gram, stored in place.
    double scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, gram[i * m + i]);
    for (std::size_t i = 0; i < m; ++i) {
        double d = gram[i * m + i];
        for (std::size_t p = 0; p < i; ++p) d -= gram[p * m + i] * gram[p * m + i];
        if (!(d > scale * 1e-26))
            throw rank_error(i, "dense least squares: symbol " + std::to_string(i) +
                                    " makes the normal equations singular");
        d = std::sqrt(d);
        gram[i * m + i] = d;
        for (std::size_t j = i + 1; j < m; ++j) {
            double v = gram[i * m + j];
            for (std::size_t p = 0; p < i; ++p) v -= gram[p * m + i] * gram[p * m + j];
            gram[i * m + j] = v / d;
        }
    }
    ops.add(static_cast<std::uint64_t>(m) * m * m / 6 + m * m);

    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) {
        double v = rhs[i];
        for (std::size_t p = 0; p < i; ++p) v -= gram[p * m + i] * x[p];
        x[i] = v / gram[i * m + i];
    }
    for (std::size_t i = m; i-- > 0;) {
        double v = x[i];
        for (std::size_t j = i + 1; j < m; ++j) v -= gram[i * m + j] * x[j];
        x[i] = v / gram[i * m + i];
    }
    ops.add(static_cast<std::uint64_t>(m) * m);

    double res = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double fit = 0.0;
        for (std::size_t i = 0; i < m; ++i) fit += dense[k][i] * x[i];
        res += (meas.q[k] - fit) * (meas.q[k] - fit);
    }

    LeastSquaresReport rep;
    finish_report(rep, std::move(x), Es);
    rep.residual_norm = std::sqrt(res);
    rep.op_count = ops.mac - before;
    rep.wall_time_s = seconds_since(start);
    return rep;
}

const char* op_mode_name(OpMode mode) noexcept
{
    switch (mode) {
    case OpMode::smp: return "smp";
    case OpMode::mp: return "mp";
    case OpMode::pinv_batch: return "pinv-batch";
    case OpMode::pinv_symbol: return "pinv-symbol";
    case OpMode::pinv_dense: return "pinv-dense";
    }
    return "?";
}

OpTally count_ops(OpMode mode, const FrameConfig& frame, const TemParams& tem,
                  const ChannelParams& chan, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const auto symbols = ModulationFrame::random(frame, rng);
    const auto train = encode_exact(symbols, tem);
    const auto meas = measurements_from_spikes(train, tem);

    OpTally out;
    out.m = frame.m;
    out.spikes = train.size();
    OpCounter ops;
    switch (mode) {
    case OpMode::smp: {
        SmpDemodulator smp(SmpConfig{tem, frame, chan}, &ops);
        for (double t : train.times()) smp.on_spike(t);
        break;
    }
    case OpMode::mp:
        run_mp(meas, build_g(train, frame), frame, chan, 1, &ops);
        break;
    case OpMode::pinv_batch:
        ops.add(demod_batch_pinv(meas, build_g(train, frame), frame.Es).op_count);
        break;
    case OpMode::pinv_symbol: {
        const auto G = build_g(train, frame);
        demod_symbolwise_pinv(meas, G, index_factor_graph(G), frame.Es, &ops);
        break;
    }
    case OpMode::pinv_dense:
        solve_dense_least_squares(meas, build_g(train, frame), frame.Es, &ops);
        break;
    }
    out.mac = ops.mac;
    return out;
}

} // namespace tedemod
