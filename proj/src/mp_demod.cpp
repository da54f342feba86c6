#include "tedemod/mp_demod.hpp"

#include "tedemod/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace tedemod {

double log_sum_exp(double a, double b) noexcept
{
    if (a < b) std::swap(a, b);
    if (a == -std::numeric_limits<double>::infinity()) return a;
    if (a == std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

FactorGraphIndex index_factor_graph(const SamplingMatrix& G)
{
    FactorGraphIndex graph;
    const std::size_t m = G.cols();
    graph.intrinsic.resize(m);
    graph.fwd.assign(m, std::nullopt);
    graph.bwd.assign(m, std::nullopt);
    for (std::size_t k = 0; k < G.rows(); ++k) {
        const auto& r = G.row(k);
        if (r.nnz == 2) {
            graph.bwd[r.first_col] = k;
            graph.fwd[r.first_col + 1] = k;
        } else if (G.is_tail_row(k)) {
            graph.bwd[r.first_col] = k;
        } else {
            graph.intrinsic[r.first_col].push_back(k);
        }
    }
    return graph;
}

double channel_reliability(double Es, double Ts, double sigma2)
{
    if (!(Ts > 0.0)) throw validation_error("channel_reliability: Ts must be positive");
    if (!(sigma2 >= 0.0)) throw validation_error("channel_reliability: sigma2 must be non-negative");
    if (Es == 0.0) return 0.0;
    if (sigma2 == 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 * std::sqrt(Es) / (std::sqrt(Ts) * sigma2);
}

double intrinsic_llr(std::span<const double> q, std::span<const std::size_t> rows, double Ls)
{
    double sum = 0.0;
    for (std::size_t z : rows) sum += q[z];
    return Ls * sum;
}

double straddle_loglik(double q, double T, double g_self, double g_other, int a_self, int a_other,
                       double Es, double sigma2)
{
    const double r = q - std::sqrt(Es) * (g_self * a_self + g_other * a_other);
    return -(r * r) / (2.0 * sigma2 * T);
}

namespace {

// Message through a factor shared with one neighbour whose belief, excluding
// this factor, is `x`:
//   log [p(+,+) e^x + p(+,-)] / [p(-,+) e^x + p(-,-)]
// where p(self, other) are the factor likelihoods.
double pair_message(double l_pp, double l_pm, double l_mp, double l_mm, double x)
{
    if (x == std::numeric_limits<double>::infinity()) return l_pp - l_mp;
    if (x == -std::numeric_limits<double>::infinity()) return l_pm - l_mm;
    return log_sum_exp(l_pp + x, l_pm) - log_sum_exp(l_mp + x, l_mm);
}

double shared_row_message(const MpProblem& p, std::size_t row, std::size_t self, std::size_t other,
                          double x)
{
    const auto& r = p.G.row(row);
    const double q = p.meas.q[row];
    const double T = r.interval();
    const double gs = r.at(self);
    const double go = r.at(other);
    auto l = [&](int a, int b) { return straddle_loglik(q, T, gs, go, a, b, p.Es, p.sigma2); };
    return pair_message(l(1, 1), l(1, -1), l(-1, 1), l(-1, -1), x);
}

// Tail row: the neighbour past the frame has zero amplitude, so the sum over
// its value collapses to a single-symbol likelihood ratio.
double tail_message(const MpProblem& p, std::size_t row, std::size_t self)
{
    const auto& r = p.G.row(row);
    const double q = p.meas.q[row];
    const double T = r.interval();
    const double g = r.at(self);
    return straddle_loglik(q, T, g, 0.0, 1, 0, p.Es, p.sigma2) -
           straddle_loglik(q, T, g, 0.0, -1, 0, p.Es, p.sigma2);
}

void check_problem(const MpProblem& p)
{
    if (p.meas.size() < p.G.rows())
        throw validation_error("mp: " + std::to_string(p.meas.size()) + " measurements for " +
                               std::to_string(p.G.rows()) + " matrix rows");
    if (p.graph.symbols() != p.G.cols()) throw validation_error("mp: factor graph does not match G");
}

} // namespace

MpState MpState::initial(const MpProblem& problem)
{
    const std::size_t m = problem.G.cols();
    const double Ls = channel_reliability(problem.Es, problem.G.Ts(), problem.sigma2);
    MpState s;
    s.intrinsic.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        s.intrinsic[i] = intrinsic_llr(problem.meas.q, problem.graph.intrinsic[i], Ls);
    s.eta.assign(m, 0.0);
    s.alpha.assign(m, 0.0);
    // The tail factor is a leaf: its message needs no input, so it is known
    // before the first sweep and the chain still converges in m-1 sweeps.
    if (const auto& tail = problem.graph.bwd[m - 1]; tail && problem.G.is_tail_row(*tail))
        s.alpha[m - 1] = tail_message(problem, *tail, m - 1);
    s.lambda.resize(m);
    for (std::size_t i = 0; i < m; ++i) s.lambda[i] = s.intrinsic[i] + s.alpha[i];
    return s;
}

double update_eta(const MpState& state, std::size_t i, const MpProblem& problem)
{
    if (i == 0 || !problem.graph.fwd[i]) return 0.0;
    const double x = state.lambda[i - 1] - state.alpha[i - 1];
    return shared_row_message(problem, *problem.graph.fwd[i], i, i - 1, x);
}

double update_alpha(const MpState& state, std::size_t i, const MpProblem& problem)
{
    const auto& row = problem.graph.bwd[i];
    if (!row) return 0.0;
    if (i + 1 == problem.G.cols()) return tail_message(problem, *row, i);
    const double x = state.lambda[i + 1] - state.eta[i + 1];
    return shared_row_message(problem, *row, i, i + 1, x);
}

MpResult run_mp(const Measurements& meas, const SamplingMatrix& G, const FrameConfig& frame,
                const ChannelParams& chan, std::size_t iters, OpCounter* counter)
{
    if (iters < 1) throw validation_error("run_mp: at least one iteration is required");
    if (frame.m != G.cols()) throw validation_error("run_mp: frame and matrix disagree on m");
    const FactorGraphIndex graph = index_factor_graph(G);
    const MpProblem problem{meas, G, graph, frame.Es, chan.sigma2};
    check_problem(problem);
    const std::size_t m = G.cols();

    MpResult result;
    if (chan.is_noiseless()) {
        result.hard_decision = true;
        result.llr.resize(m);
        result.decisions.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            result.llr[i] = intrinsic_llr(meas.q, graph.intrinsic[i], 1.0);
            result.decisions[i] = hard_sign(result.llr[i]);
        }
        tally(counter, G.rows() + m);
        return result;
    }

    MpState state = MpState::initial(problem);
    tally(counter, G.rows() + m);
    std::vector<double> next_eta(m), next_alpha(m);
    for (std::size_t l = 0;; ++l) {
        for (std::size_t i = 0; i < m; ++i)
            state.lambda[i] = state.intrinsic[i] + state.eta[i] + state.alpha[i];
        state.iteration = l;
        tally(counter, 2 * m);
        if (l == iters) break;
        for (std::size_t i = 0; i < m; ++i) {
            next_eta[i] = update_eta(state, i, problem);
            next_alpha[i] = update_alpha(state, i, problem);
        }
        // Four likelihoods plus two log-sum-exps per message.
        tally(counter, 2 * m * 24);
        state.eta.swap(next_eta);
        state.alpha.swap(next_alpha);
    }

    result.iterations = iters;
    result.llr = state.lambda;
    result.decisions.resize(m);
    for (std::size_t i = 0; i < m; ++i) result.decisions[i] = hard_sign(result.llr[i]);
    return result;
}

std::vector<double> exact_marginals_bruteforce(const Measurements& meas, const SamplingMatrix& G,
                                               double Es, double sigma2)
{
    const std::size_t m = G.cols();
    if (m > 16) throw validation_error("exact_marginals_bruteforce: m = " + std::to_string(m) +
                                       " exceeds the enumeration limit of 16");
    if (!(sigma2 > 0.0)) throw validation_error("exact_marginals_bruteforce: sigma2 must be positive");
    if (meas.size() < G.rows()) throw validation_error("exact_marginals_bruteforce: too few measurements");

    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> plus(m, ninf), minus(m, ninf);
    std::vector<int> A(m);
    const double scale = std::sqrt(Es);
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        for (std::size_t i = 0; i < m; ++i) A[i] = (mask >> i) & 1u ? 1 : -1;
        double ll = 0.0;
        for (std::size_t k = 0; k < G.rows(); ++k) {
            const auto& r = G.row(k);
            double mean = r.values[0] * A[r.first_col];
            if (r.nnz == 2) mean += r.values[1] * A[r.first_col + 1];
            const double res = meas.q[k] - scale * mean;
            ll -= res * res / (2.0 * sigma2 * r.interval());
        }
        for (std::size_t i = 0; i < m; ++i) {
            double& acc = A[i] > 0 ? plus[i] : minus[i];
            acc = log_sum_exp(acc, ll);
        }
    }
    std::vector<double> llr(m);
    for (std::size_t i = 0; i < m; ++i) llr[i] = plus[i] - minus[i];
    return llr;
}

} // namespace tedemod
