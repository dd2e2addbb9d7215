#include "pm/codec.hpp"

#include <fstream>
#include <sstream>

namespace pm {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json parse_line(const std::string& line, const char* what) {
    try {
        return ordered_json::parse(line);
    } catch (const std::exception& e) {
        throw config_error(std::string("bad JSON in ") + what + ": " + e.what());
    }
}

template <class T>
T require(const ordered_json& j, const char* key, const char* what) {
    if (!j.contains(key)) throw config_error(std::string(what) + " is missing \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const std::exception&) {
        throw config_error(std::string(what) + " has a malformed \"" + key + "\"");
    }
}

}  // namespace

std::string Transcript::to_jsonl() const {
    ordered_json h;
    h["schema"] = 1;
    h["type"] = "transcript";
    h["kind"] = kind == ChannelKind::dmc ? "dmc" : "awgn";
    h["n"] = n;
    h["precision_bits"] = precision_bits;
    h["seeds"] = {{"message", seeds.message}, {"channel", seeds.channel}, {"common", seeds.common}};
    h["trial_index"] = trial_index;
    h["channel_hash"] = channel_hash;
    std::ostringstream os;
    os << h.dump() << "\n";
    for (long i = 0; i < n; ++i) {
        std::size_t u = static_cast<std::size_t>(i);
        ordered_json row;
        row["i"] = i + 1;
        if (kind == ChannelKind::dmc) {
            row["x"] = x_idx[u];
            row["y"] = y_idx[u];
        } else {
            row["x"] = x_val[u].to_hex();
            row["y"] = y_val[u].to_hex();
        }
        row["v_hex"] = v[u].to_hex();
        os << row.dump() << "\n";
    }
    return os.str();
}

Transcript Transcript::from_jsonl(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw config_error("transcript is empty");
    ordered_json h = parse_line(line, "transcript header");
    if (require<long>(h, "schema", "transcript header") != 1)
        throw config_error("transcript header must carry \"schema\": 1");
    if (require<std::string>(h, "type", "transcript header") != "transcript")
        throw config_error("not a transcript file");

    Transcript t;
    std::string kind = require<std::string>(h, "kind", "transcript header");
    if (kind == "dmc")
        t.kind = ChannelKind::dmc;
    else if (kind == "awgn")
        t.kind = ChannelKind::awgn;
    else
        throw config_error("unknown transcript kind: " + kind);
    t.n = require<long>(h, "n", "transcript header");
    if (t.n < 0) throw config_error("transcript has negative horizon");
    t.precision_bits = require<long>(h, "precision_bits", "transcript header");
    if (t.precision_bits < 1) throw config_error("transcript has bad precision_bits");
    if (!h.contains("seeds")) throw config_error("transcript header is missing \"seeds\"");
    t.seeds.message = require<std::uint64_t>(h["seeds"], "message", "seeds");
    t.seeds.channel = require<std::uint64_t>(h["seeds"], "channel", "seeds");
    t.seeds.common = require<std::uint64_t>(h["seeds"], "common", "seeds");
    t.trial_index = require<long>(h, "trial_index", "transcript header");
    t.channel_hash = require<std::string>(h, "channel_hash", "transcript header");

    long rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        ordered_json row = parse_line(line, "transcript row");
        ++rows;
        if (require<long>(row, "i", "transcript row") != rows)
            throw config_error("transcript rows are out of order");
        if (t.kind == ChannelKind::dmc) {
            t.x_idx.push_back(require<long>(row, "x", "transcript row"));
            t.y_idx.push_back(require<long>(row, "y", "transcript row"));
        } else {
            t.x_val.push_back(
                BigFloat::from_hex(require<std::string>(row, "x", "transcript row"), t.precision_bits + 64));
            t.y_val.push_back(
                BigFloat::from_hex(require<std::string>(row, "y", "transcript row"), t.precision_bits + 64));
        }
        t.v.push_back(Dyadic::from_hex(require<std::string>(row, "v_hex", "transcript row"),
                                       t.precision_bits));
    }
    if (rows != t.n) throw config_error("transcript row count does not match its horizon");
    return t;
}

void Transcript::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write transcript: " + path);
    out << to_jsonl();
}

Transcript Transcript::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open transcript: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return from_jsonl(os.str());
}

}  // namespace pm
