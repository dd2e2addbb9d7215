#pragma once

// Memoryless channel descriptions. Probabilities are exact rationals; JSON
// files carry them as decimal strings (or "num/den" fractions) so loading is
// lossless. A finite channel is an input pmf plus a transition matrix; the
// Gaussian channel is an average power constraint plus a noise variance.

#include "pm/numeric.hpp"
#include "pm/random.hpp"

#include "json.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace pm {

enum class ChannelKind { dmc, awgn };

struct ChannelSpec {
    ChannelKind kind = ChannelKind::dmc;

    // dmc
    std::vector<Rational> input_pmf;                 // P_X
    std::vector<std::vector<Rational>> transition;   // W[x][y]

    // awgn
    Rational power;  // P, input second-moment budget
    Rational noise;  // N, noise variance

    std::size_t num_inputs() const { return input_pmf.size(); }
    std::size_t num_outputs() const { return transition.empty() ? 0 : transition[0].size(); }

    std::vector<Rational> output_pmf() const;  // P_Y, exact

    // Capacity-side quantity the rate results compare against: I(X;Y) of this
    // input under this channel, in bits. 0.5*log2(1+P/N) for the Gaussian.
    double mutual_information() const;

    // FNV-1a 64 over the canonical serialization; identifies the channel in
    // result files so mixed-channel sweeps stay attributable.
    std::string hash() const;

    void validate() const;  // throws config_error

    static ChannelSpec dmc(std::vector<Rational> pmf, std::vector<std::vector<Rational>> w);
    static ChannelSpec awgn(const Rational& power, const Rational& noise);
    static ChannelSpec bsc(const Rational& crossover);  // uniform input

    static ChannelSpec from_json(const nlohmann::ordered_json& j);
    static ChannelSpec load(const std::string& path);
    nlohmann::ordered_json to_json() const;
    void save(const std::string& path) const;
};

// Exact inverse-CDF sample from W[x][.] using a 128-bit dyadic uniform.
long sample_dmc_output(const ChannelSpec& ch, long x, RandomStream& rng);

// y = x + sqrt(N) * Phi^{-1}(U) at the given precision.
BigFloat sample_awgn_output(const ChannelSpec& ch, const BigFloat& x, RandomStream& rng, long prec);

}  // namespace pm
