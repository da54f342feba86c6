#pragma once

// Sum-product demodulation on the chain factor graph induced by G.
//
// Variable nodes are the symbols; factor nodes are the spike measurements.
// A row touching a single column is intrinsic evidence for that symbol. A row
// touching columns (i, i+1) is the only factor shared by that pair: it is
// the backward factor of symbol i and the forward factor of symbol i+1. The
// tail row (interval running past the frame end) is the backward factor of
// the last symbol, paired with a zero-amplitude virtual neighbour.
//
// All messages are log-likelihood ratios log p(+1)/p(-1).

#include "tedemod/encoder.hpp"
#include "tedemod/model.hpp"
#include "tedemod/op_counter.hpp"
#include "tedemod/sampling_matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tedemod {

struct FactorGraphIndex {
    std::vector<std::vector<std::size_t>> intrinsic;  // Q_i
    std::vector<std::optional<std::size_t>> fwd;      // row shared with i-1
    std::vector<std::optional<std::size_t>> bwd;      // row shared with i+1 (or the tail row)

    std::size_t symbols() const noexcept { return intrinsic.size(); }
};

FactorGraphIndex index_factor_graph(const SamplingMatrix& G);

// L_s = 2 sqrt(Es) / (sqrt(Ts) sigma2); +infinity when sigma2 == 0, which
// callers treat as the hard-decision mode.
double channel_reliability(double Es, double Ts, double sigma2);

double intrinsic_llr(std::span<const double> q, std::span<const std::size_t> rows, double Ls);

// log p(q | a_self, a_other) for one measurement, constant dropped.
double straddle_loglik(double q, double T, double g_self, double g_other, int a_self, int a_other,
                       double Es, double sigma2);

// Everything a message update needs about one frame.
struct MpProblem {
    const Measurements& meas;
    const SamplingMatrix& G;
    const FactorGraphIndex& graph;
    double Es;
    double sigma2;
};

struct MpState {
    std::vector<double> intrinsic;
    std::vector<double> eta;
    std::vector<double> alpha;
    std::vector<double> lambda;
    std::size_t iteration = 0;

    // Intrinsic terms and the tail message filled in, other messages zero.
    static MpState initial(const MpProblem& problem);
};

// Forward message into symbol i from its shared row with i-1, given the
// neighbour's extrinsic-free belief lambda_{i-1} - alpha_{i-1}.
double update_eta(const MpState& state, std::size_t i, const MpProblem& problem);
// Backward message into symbol i, using lambda_{i+1} - eta_{i+1}.
double update_alpha(const MpState& state, std::size_t i, const MpProblem& problem);

struct MpResult {
    std::vector<int> decisions;
    std::vector<double> llr;
    std::size_t iterations = 0;
    // sigma2 == 0: decisions are the sign of the raw intrinsic sums, and
    // `llr` holds those sums instead of log-likelihood ratios.
    bool hard_decision = false;
};

// `iters` message sweeps; decisions come from lambda^(iters). iters = m-1
// reaches the exact marginals on the chain.
MpResult run_mp(const Measurements& meas, const SamplingMatrix& G, const FrameConfig& frame,
                const ChannelParams& chan, std::size_t iters = 1, OpCounter* counter = nullptr);

// Exact posterior LLRs by enumerating all 2^m symbol vectors. m <= 16.
std::vector<double> exact_marginals_bruteforce(const Measurements& meas, const SamplingMatrix& G,
                                               double Es, double sigma2);

// log(e^a + e^b) without overflow; handles infinite arguments.
double log_sum_exp(double a, double b) noexcept;

} // namespace tedemod
