#include "pm/channel.hpp"

#include "pm/normal.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace pm {

namespace {

using ordered_json = nlohmann::ordered_json;

// Probability sums are validated against 1 within this tolerance, then
// renormalized exactly so downstream arithmetic sees mass exactly 1.
const char* kSumToleranceStr = "1e-12";

Rational sum_tolerance() {
    return rational_from_decimal(kSumToleranceStr);
}

Rational vec_sum(const std::vector<Rational>& v) {
    Rational s = 0;
    for (const auto& q : v) s += q;
    return s;
}

void check_and_renormalize(std::vector<Rational>& v, const std::string& what) {
    for (const auto& q : v)
        if (q < 0) throw config_error(what + " has a negative entry");
    Rational s = vec_sum(v);
    if (s <= 0) throw config_error(what + " has zero total mass");
    Rational err = s - 1;
    if (err < 0) err = -err;
    if (err > sum_tolerance())
        throw config_error(what + " sums to " + rational_to_string(s) + ", not 1 (tolerance " +
                           kSumToleranceStr + ")");
    if (s != 1)
        for (auto& q : v) q /= s;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

Rational rational_from_json(const ordered_json& j, const std::string& what) {
    if (j.is_string()) return rational_from_decimal(j.get<std::string>());
    throw config_error(what + " must be a decimal string, got: " + j.dump());
}

}  // namespace

std::vector<Rational> ChannelSpec::output_pmf() const {
    if (kind != ChannelKind::dmc) throw config_error("output_pmf is defined for finite channels only");
    std::vector<Rational> py(num_outputs(), Rational(0));
    for (std::size_t x = 0; x < num_inputs(); ++x)
        for (std::size_t y = 0; y < num_outputs(); ++y) py[y] += input_pmf[x] * transition[x][y];
    return py;
}

double ChannelSpec::mutual_information() const {
    if (kind == ChannelKind::awgn) {
        Rational snr1 = 1 + power / noise;
        return 0.5 * log2d(snr1);
    }
    std::vector<Rational> py = output_pmf();
    double i = 0;
    for (std::size_t x = 0; x < num_inputs(); ++x)
        for (std::size_t y = 0; y < num_outputs(); ++y) {
            if (transition[x][y] == 0) continue;
            Rational ratio = transition[x][y] / py[y];
            i += to_double(input_pmf[x] * transition[x][y]) * log2d(ratio);
        }
    return i;
}

std::string ChannelSpec::hash() const {
    std::ostringstream os;
    if (kind == ChannelKind::awgn) {
        os << "awgn|P=" << rational_to_string(power) << "|N=" << rational_to_string(noise);
    } else {
        os << "dmc|pmf=";
        for (const auto& q : input_pmf) os << rational_to_string(q) << ",";
        os << "|W=";
        for (const auto& row : transition) {
            for (const auto& q : row) os << rational_to_string(q) << ",";
            os << ";";
        }
    }
    return hex64(fnv1a64(os.str()));
}

void ChannelSpec::validate() const {
    if (kind == ChannelKind::awgn) {
        if (power <= 0) throw config_error("power must be positive");
        if (noise <= 0) throw config_error("noise variance must be positive");
        return;
    }
    if (input_pmf.empty()) throw config_error("finite channel needs at least one input");
    if (transition.size() != input_pmf.size())
        throw config_error("transition matrix must have one row per input");
    std::size_t ny = transition[0].size();
    if (ny == 0) throw config_error("finite channel needs at least one output");
    for (const auto& row : transition)
        if (row.size() != ny) throw config_error("transition rows have unequal lengths");
    for (const auto& q : input_pmf) {
        if (q < 0) throw config_error("input pmf has a negative entry");
        // Zero-mass inputs would create zero-length kernel segments.
        if (q == 0) throw config_error("input pmf has a zero-mass symbol; drop it from the channel");
    }
    for (const auto& row : transition)
        for (const auto& q : row)
            if (q < 0) throw config_error("transition matrix has a negative entry");
    if (vec_sum(input_pmf) != 1) throw config_error("input pmf does not sum to 1");
    for (const auto& row : transition) {
        Rational s = 0;
        for (const auto& q : row) s += q;
        if (s != 1) throw config_error("a transition row does not sum to 1");
    }
}

ChannelSpec ChannelSpec::dmc(std::vector<Rational> pmf, std::vector<std::vector<Rational>> w) {
    ChannelSpec ch;
    ch.kind = ChannelKind::dmc;
    ch.input_pmf = std::move(pmf);
    ch.transition = std::move(w);
    if (ch.transition.size() != ch.input_pmf.size())
        throw config_error("transition matrix must have one row per input");
    check_and_renormalize(ch.input_pmf, "input pmf");
    for (auto& row : ch.transition) check_and_renormalize(row, "transition row");
    ch.validate();
    return ch;
}

ChannelSpec ChannelSpec::awgn(const Rational& power, const Rational& noise) {
    ChannelSpec ch;
    ch.kind = ChannelKind::awgn;
    ch.power = power;
    ch.noise = noise;
    ch.validate();
    return ch;
}

ChannelSpec ChannelSpec::bsc(const Rational& crossover) {
    if (crossover < 0 || crossover > 1) throw config_error("crossover must be in [0,1]");
    Rational h(1, 2);
    return dmc({h, h}, {{1 - crossover, crossover}, {crossover, 1 - crossover}});
}

ChannelSpec ChannelSpec::from_json(const ordered_json& j) {
    if (!j.is_object()) throw config_error("channel file must be a JSON object");
    if (!j.contains("schema") || !j["schema"].is_number_integer() || j["schema"].get<long>() != 1)
        throw config_error("channel file must carry \"schema\": 1");
    if (!j.contains("kind") || !j["kind"].is_string())
        throw config_error("channel file must carry a \"kind\" string");
    std::string kind = j["kind"].get<std::string>();
    if (kind == "awgn") {
        if (!j.contains("power") || !j.contains("noise"))
            throw config_error("awgn channel needs \"power\" and \"noise\"");
        return awgn(rational_from_json(j["power"], "power"), rational_from_json(j["noise"], "noise"));
    }
    if (kind != "dmc") throw config_error("unknown channel kind: " + kind);
    if (!j.contains("input_pmf") || !j["input_pmf"].is_array())
        throw config_error("dmc channel needs an \"input_pmf\" array");
    if (!j.contains("transition") || !j["transition"].is_array())
        throw config_error("dmc channel needs a \"transition\" array of rows");
    std::vector<Rational> pmf;
    for (const auto& e : j["input_pmf"]) pmf.push_back(rational_from_json(e, "input_pmf entry"));
    std::vector<std::vector<Rational>> w;
    for (const auto& rj : j["transition"]) {
        if (!rj.is_array()) throw config_error("transition rows must be arrays");
        std::vector<Rational> row;
        for (const auto& e : rj) row.push_back(rational_from_json(e, "transition entry"));
        w.push_back(std::move(row));
    }
    return dmc(std::move(pmf), std::move(w));
}

ChannelSpec ChannelSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open channel file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error("bad JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::ordered_json ChannelSpec::to_json() const {
    ordered_json j;
    j["schema"] = 1;
    if (kind == ChannelKind::awgn) {
        j["kind"] = "awgn";
        j["power"] = rational_to_string(power);
        j["noise"] = rational_to_string(noise);
        return j;
    }
    j["kind"] = "dmc";
    ordered_json pmf = ordered_json::array();
    for (const auto& q : input_pmf) pmf.push_back(rational_to_string(q));
    j["input_pmf"] = std::move(pmf);
    ordered_json w = ordered_json::array();
    for (const auto& row : transition) {
        ordered_json rj = ordered_json::array();
        for (const auto& q : row) rj.push_back(rational_to_string(q));
        w.push_back(std::move(rj));
    }
    j["transition"] = std::move(w);
    return j;
}

void ChannelSpec::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write channel file: " + path);
    out << to_json().dump(2) << "\n";
}

long sample_dmc_output(const ChannelSpec& ch, long x, RandomStream& rng) {
    if (ch.kind != ChannelKind::dmc) throw internal_error("sample_dmc_output on non-dmc channel");
    if (x < 0 || static_cast<std::size_t>(x) >= ch.num_inputs())
        throw internal_error("input symbol out of range");
    Rational u = rng.next_fraction(128).to_rational();
    Rational acc = 0;
    std::size_t ny = ch.num_outputs();
    for (std::size_t y = 0; y + 1 < ny; ++y) {
        acc += ch.transition[static_cast<std::size_t>(x)][y];
        if (u < acc) return static_cast<long>(y);
    }
    return static_cast<long>(ny - 1);
}

BigFloat sample_awgn_output(const ChannelSpec& ch, const BigFloat& x, RandomStream& rng, long prec) {
    if (ch.kind != ChannelKind::awgn) throw internal_error("sample_awgn_output on non-awgn channel");
    Dyadic u = rng.next_fraction(prec);
    if (u.num == 0) u.num = 1;  // keep the quantile argument in (0,1)
    BigFloat z = phi_inv(scalar_from_dyadic<BigFloat>(u), prec);
    BigFloat sn = BigFloat::with_precision(prec + 32);
    mpfr_set_q(sn.get(), ch.noise.get_mpq_t(), MPFR_RNDN);
    mpfr_sqrt(sn.get(), sn.get(), MPFR_RNDN);
    BigFloat y = BigFloat::with_precision(prec);
    mpfr_fma(y.get(), sn.get(), z.get(), x.get(), MPFR_RNDN);
    return y;
}

}  // namespace pm
