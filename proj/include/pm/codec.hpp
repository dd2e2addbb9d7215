#pragma once

// Feedback encode/decode with shared randomness.
//
// Encoder, horizon n, message point theta_0 drawn uniformly at the working
// precision: at each use the symbol is read off the current state, then the
// state advances through the posterior CDF of the state given the observed
// output, plus a fresh shared uniform fraction, mod 1. The decoder unwinds
// the same recursion backwards: starting from a fixed target arc J_0 of
// length 1 - p_e it pulls J back through the shared fractions and inverse
// CDFs, ending with an arc J_n whose miss probability for theta_0 is exactly
// p_e by construction (the state after every update stays uniform and
// independent of the outputs seen so far).
//
// The chain theta_0 in J_n <=> theta_final in J_0 holds deterministically
// (theta_final is the encoder state after all n updates), which gives the
// recursion an end-to-end machine check.

#include "pm/channel.hpp"
#include "pm/interval.hpp"
#include "pm/kernel.hpp"
#include "pm/numeric.hpp"
#include "pm/random.hpp"

#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace pm {

struct Seeds {
    std::uint64_t message = 1;
    std::uint64_t channel = 2;
    std::uint64_t common = 3;
};

struct TrialConfig {
    long n = 0;                // channel uses
    Rational target_error;     // p_e in (0,1)
    long precision_bits = 0;   // 0: channel's default budget for this n
    Seeds seeds;
    long trial_index = 0;      // selects the per-trial substreams
};

// Everything the decoder sees, one line per channel use when serialized.
struct Transcript {
    ChannelKind kind = ChannelKind::dmc;
    long n = 0;
    long precision_bits = 0;
    Seeds seeds;
    long trial_index = 0;
    std::string channel_hash;
    std::vector<long> x_idx, y_idx;      // finite channel
    std::vector<BigFloat> x_val, y_val;  // gaussian channel
    std::vector<Dyadic> v;               // shared fractions, one per use

    std::string to_jsonl() const;
    static Transcript from_jsonl(const std::string& text);
    void save(const std::string& path) const;
    static Transcript load(const std::string& path);
};

template <class S>
struct EncoderState {
    S theta;
    long step = 1;  // index of the next channel use
};

template <class S>
struct DecodeResultT {
    CircleInterval<S> interval;        // J_n
    std::vector<S> step_lengths;       // |J_k|, k = 0..n, at working precision
    std::vector<double> log2_lengths;  // log2 |J_k|, k = 0..n
    std::vector<double> contractions;  // L_0 = -log2 |J_0|, then per-step log gains
    double rate = 0;                   // -(1/n) log2 |J_n|, n >= 1
    bool rate_defined = false;
    std::string bits;                  // longest common binary prefix of J_n
    bool bits_wrapped = false;
    double target_error = 0;
};

inline Dyadic draw_message(RandomStream& rng, long precision_bits) {
    return rng.next_fraction(precision_bits);
}
inline Dyadic draw_message(const Seeds& seeds, long trial_index, long precision_bits) {
    RandomStream rng = RandomStream::from_seed(seeds.message).substream(
        static_cast<std::uint64_t>(trial_index));
    return draw_message(rng, precision_bits);
}

template <class K>
typename K::Input encoder_symbol(const K& k, const EncoderState<typename K::Scalar>& st) {
    return k.input_of(st.theta);
}

template <class K>
void advance_encoder(const K& k, EncoderState<typename K::Scalar>& st, const typename K::Input& x,
                     const typename K::Output& y, const Dyadic& v) {
    using S = typename K::Scalar;
    st.theta = mod1(k.eval_step(st.theta, x, y) + scalar_from_dyadic<S>(v));
    ++st.step;
}

// Symbol from the current state, then advance through (y, v).
template <class K>
typename K::Input encode_step(const K& k, EncoderState<typename K::Scalar>& st,
                              const typename K::Output& y, const Dyadic& v) {
    auto x = encoder_symbol(k, st);
    advance_encoder(k, st, x, y, v);
    return x;
}

// One backward step: shift the arc by -v, pull it through the inverse CDF.
// Monotone endpoint mapping keeps it an arc; a flat stretch of the CDF can
// only enlarge it (over-cover), never lose points.
template <class K>
CircleInterval<typename K::Scalar> interval_map_inverse(const K& k,
                                                        const CircleInterval<typename K::Scalar>& j,
                                                        const typename K::Output& y,
                                                        const Dyadic& v) {
    using S = typename K::Scalar;
    if (j.full()) return CircleInterval<S>{S(0), S(1)};
    S vs = scalar_from_dyadic<S>(v);
    S s = mod1(j.start - vs);
    S e = mod1(s + j.length);
    S gs = k.inverse(s, y);
    S ge = k.inverse(e, y);
    S len = mod1(ge - gs);
    if (len == S(0)) {
        // e < s: the arc wrapped and the inverse was constant on its
        // complement, so the image covers the whole circle.
        if (e < s) return CircleInterval<S>{mod1(gs), S(1)};
        if constexpr (std::is_same_v<S, Rational>)
            throw internal_error("arc collapsed under an exact inverse map");
        else
            throw precision_error("decoder arc collapsed; raise the precision budget");
    }
    return CircleInterval<S>{mod1(gs), len};
}

namespace detail {

template <class K>
const typename K::Output& transcript_output(const Transcript& t, long i) {
    if constexpr (std::is_same_v<typename K::Output, long>)
        return t.y_idx[static_cast<std::size_t>(i)];
    else
        return t.y_val[static_cast<std::size_t>(i)];
}

}  // namespace detail

// Reversed recursion over the transcript. j0_start overrides the target arc's
// start (default p_e / 2); the arc length is always 1 - p_e.
template <class K>
DecodeResultT<typename K::Scalar> rifs_decode(const K& k, const Transcript& t, const Rational& p_e,
                                              const Rational* j0_start = nullptr) {
    using S = typename K::Scalar;
    if (!(p_e > 0 && p_e < 1)) throw config_error("target error probability must be in (0,1)");
    constexpr bool finite = std::is_same_v<typename K::Output, long>;
    if (finite != (t.kind == ChannelKind::dmc)) throw config_error("transcript kind does not match kernel");
    std::size_t n = static_cast<std::size_t>(t.n);
    if (t.n < 0 || t.v.size() != n || (finite ? t.y_idx.size() : t.y_val.size()) != n)
        throw config_error("transcript row count does not match its horizon");
    BigFloat::PrecisionGuard guard(std::max<long>(t.precision_bits, 64) + 64);

    DecodeResultT<S> r;
    r.target_error = to_double(p_e);
    Rational start_q = j0_start ? mod1(*j0_start) : Rational(p_e / 2);
    CircleInterval<S> j{scalar_from_rational<S>(start_q), scalar_from_rational<S>(1 - p_e)};
    r.step_lengths.reserve(n + 1);
    r.log2_lengths.reserve(n + 1);
    r.step_lengths.push_back(j.length);
    r.log2_lengths.push_back(log2_length(j));
    for (long i = t.n - 1; i >= 0; --i) {
        j = interval_map_inverse(k, j, detail::transcript_output<K>(t, i), t.v[static_cast<std::size_t>(i)]);
        r.step_lengths.push_back(j.length);
        r.log2_lengths.push_back(log2_length(j));
    }
    r.interval = j;
    r.contractions.reserve(n + 1);
    r.contractions.push_back(-r.log2_lengths[0]);
    for (std::size_t i = 1; i <= n; ++i)
        r.contractions.push_back(r.log2_lengths[i - 1] - r.log2_lengths[i]);
    if (t.n >= 1) {
        // one rounding from a 128-bit log2 so the rate and the telescoped
        // length agree to machine precision
        BigFloat l2 = log2_bf(j.length, 128);
        r.rate = (-l2 / BigFloat(t.n)).to_double();
        r.rate_defined = true;
    }
    BitExtraction bx = extract_bits(j);
    r.bits = std::move(bx.bits);
    r.bits_wrapped = bx.wrapped;
    return r;
}

template <class K>
struct TrialOutcome {
    Transcript transcript;
    DecodeResultT<typename K::Scalar> decode;
    Dyadic theta0;
    typename K::Scalar theta_final;  // encoder state after all n updates
    bool error = false;              // theta0 outside the decoded arc
    bool final_in_j0 = false;        // theta_final inside the target arc
};

template <class K>
TrialOutcome<K> run_trial(const ChannelSpec& ch, const K& k, const TrialConfig& cfg) {
    using S = typename K::Scalar;
    if (cfg.n < 0) throw config_error("horizon must be nonnegative");
    if (!(cfg.target_error > 0 && cfg.target_error < 1))
        throw config_error("target error probability must be in (0,1)");
    long budget = cfg.precision_bits > 0 ? cfg.precision_bits : default_precision_budget(ch, cfg.n);
    if constexpr (std::is_same_v<K, AwgnKernel>) {
        if (k.prec < budget) throw config_error("kernel precision is below the trial budget");
    }
    BigFloat::PrecisionGuard guard(budget + 64);

    RandomStream chan = RandomStream::from_seed(cfg.seeds.channel)
                            .substream(static_cast<std::uint64_t>(cfg.trial_index));
    RandomStream common = RandomStream::from_seed(cfg.seeds.common)
                              .substream(static_cast<std::uint64_t>(cfg.trial_index));

    TrialOutcome<K> out;
    out.theta0 = draw_message(cfg.seeds, cfg.trial_index, budget);
    EncoderState<S> st{scalar_from_dyadic<S>(out.theta0), 1};

    Transcript& t = out.transcript;
    t.kind = ch.kind;
    t.n = cfg.n;
    t.precision_bits = budget;
    t.seeds = cfg.seeds;
    t.trial_index = cfg.trial_index;
    t.channel_hash = ch.hash();

    for (long i = 0; i < cfg.n; ++i) {
        auto x = encoder_symbol(k, st);
        Dyadic v = common.next_fraction(budget);
        if constexpr (std::is_same_v<typename K::Output, long>) {
            long y = sample_dmc_output(ch, x, chan);
            advance_encoder(k, st, x, y, v);
            t.x_idx.push_back(x);
            t.y_idx.push_back(y);
        } else {
            BigFloat y = sample_awgn_output(ch, x, chan, budget);
            advance_encoder(k, st, x, y, v);
            t.x_val.push_back(std::move(x));
            t.y_val.push_back(std::move(y));
        }
        t.v.push_back(std::move(v));
    }
    out.theta_final = st.theta;
    out.decode = rifs_decode(k, t, cfg.target_error);
    out.error = !out.decode.interval.contains(scalar_from_dyadic<S>(out.theta0));
    CircleInterval<S> j0{scalar_from_rational<S>(cfg.target_error / 2),
                         scalar_from_rational<S>(1 - cfg.target_error)};
    out.final_in_j0 = j0.contains(out.theta_final);
    return out;
}

// ---------------------------------------------------------------------------
// Result serialization.

inline std::string serialize_scalar(const Rational& q) { return rational_to_string(q); }
inline std::string serialize_scalar(const BigFloat& x) { return x.to_hex(); }

template <class S>
nlohmann::ordered_json decode_result_to_json(const DecodeResultT<S>& r) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["type"] = "decode_result";
    j["target_error"] = r.target_error;
    j["interval"] = {{"start", serialize_scalar(r.interval.start)},
                     {"length", serialize_scalar(r.interval.length)},
                     {"log2_length", r.log2_lengths.empty() ? 0.0 : r.log2_lengths.back()}};
    j["contractions"] = r.contractions;
    if (r.rate_defined) j["rate"] = r.rate;
    j["bits"] = r.bits;
    j["bits_wrapped"] = r.bits_wrapped;
    return j;
}

}  // namespace pm
