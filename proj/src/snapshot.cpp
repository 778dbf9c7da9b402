#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "evspike/core/state.hpp"
#include "evspike/errors.hpp"

namespace evspike::core {
namespace {

const double kInf = std::numeric_limits<double>::infinity();

/* %.17g survives a text round trip for any finite double; infinities get
 * spelled-out tokens so the file stays locale-proof */
void put(std::ostream& out, double v) {
    if (v == kInf) {
        out << "inf";
        return;
    }
    if (v == -kInf) {
        out << "-inf";
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

double get(std::istream& in, const char* what) {
    std::string tok;
    if (!(in >> tok)) throw SpecError("state", std::string("truncated before ") + what);
    if (tok == "inf") return kInf;
    if (tok == "-inf") return -kInf;
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size())
        throw SpecError("state", std::string("bad number for ") + what + ": " + tok);
    return v;
}

long get_int(std::istream& in, const char* what) {
    double v = get(in, what);
    long n = std::lround(v);
    if (static_cast<double>(n) != v)
        throw SpecError("state", std::string(what) + " must be an integer");
    return n;
}

void put_vec(std::ostream& out, const char* key, const std::vector<double>& v) {
    out << key;
    for (double x : v) {
        out << ' ';
        put(out, x);
    }
    out << '\n';
}

void expect_key(std::istream& in, const char* key) {
    std::string tok;
    if (!(in >> tok) || tok != key)
        throw SpecError("state", std::string("expected '") + key + "', got '" + tok + "'");
}

}  // namespace

std::vector<double> SpikeTrain::times_for(int neuron) const {
    std::vector<double> out;
    for (const auto& r : records)
        if (r.neuron == neuron) out.push_back(r.time);
    return out;
}

void SpikeTrain::write_csv(std::ostream& out) const {
    out << "time,neuron_id\n";
    for (const auto& r : records) {
        put(out, r.time);
        out << ',' << r.neuron << '\n';
    }
}

SpikeTrain SpikeTrain::read_csv(std::istream& in) {
    SpikeTrain train;
    std::string line;
    if (!std::getline(in, line) || line.rfind("time,neuron_id", 0) != 0)
        throw SpecError("csv", "missing 'time,neuron_id' header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double t;
        int id;
        if (std::sscanf(line.c_str(), "%lf,%d", &t, &id) != 2)
            throw SpecError("csv", "bad record at line " + std::to_string(lineno));
        train.add(t, id);
    }
    return train;
}

void CountdownState::validate(const models::NetworkSpec& spec) const {
    std::size_t nn = spec.neurons.size();
    if (X.size() != nn || i_s.size() != nn || last_spike.size() != nn ||
        anchor_v.size() != nn || anchor_t.size() != nn || anchor_i.size() != nn ||
        kicks.size() != nn)
        throw SpecError("state", "per-neuron array sizes do not match the spec");
    if (M < 0 || H.size() != nn * static_cast<std::size_t>(M))
        throw SpecError("state", "H must be n*M entries");
    if (!std::isfinite(T)) throw SpecError("state", "T must be finite");
    for (std::size_t i = 0; i < nn; ++i) {
        if (std::isnan(X[i]) || X[i] < 0.0)
            throw SpecError("state", "countdowns must be >= 0 (or +inf)");
        if (last_spike[i] > T) throw SpecError("state", "last_spike in the future");
        if (anchor_t[i] > T + X[i] && X[i] < kInf)
            throw SpecError("state", "anchor beyond the scheduled hit");
    }
    for (const auto& p : pending) {
        if (p.syn < 0 || static_cast<std::size_t>(p.syn) >= spec.synapses.size())
            throw SpecError("state", "pending entry with bad synapse index");
        if (p.due < T) throw SpecError("state", "pending delivery already past due");
        if (p.emission > p.due) throw SpecError("state", "emission after its delivery");
    }
    for (std::size_t i = 0; i < nn; ++i)
        for (int k = 0; k < M; ++k) {
            if (k + 1 < M &&
                h_at(static_cast<int>(i), k) > h_at(static_cast<int>(i), k + 1))
                throw SpecError("state", "H rows must be nondecreasing");
            if (h_at(static_cast<int>(i), k) > T)
                throw SpecError("state", "H entry in the future");
        }
}

void serialize_state(const CountdownState& st, std::ostream& out) {
    out << "evspike-state 1\n";
    out << "n " << st.n() << " M " << st.M << "\nT ";
    put(out, st.T);
    out << '\n';
    put_vec(out, "X", st.X);
    put_vec(out, "i_s", st.i_s);
    put_vec(out, "last_spike", st.last_spike);
    put_vec(out, "H", st.H);
    put_vec(out, "anchor_v", st.anchor_v);
    put_vec(out, "anchor_t", st.anchor_t);
    put_vec(out, "anchor_i", st.anchor_i);
    out << "pending " << st.pending.size() << '\n';
    for (const auto& p : st.pending) {
        put(out, p.due);
        out << ' ';
        put(out, p.emission);
        out << ' ' << p.syn << '\n';
    }
    std::size_t total_kicks = 0;
    for (const auto& ks : st.kicks) total_kicks += ks.size();
    out << "kicks " << total_kicks << '\n';
    for (std::size_t i = 0; i < st.kicks.size(); ++i)
        for (const auto& k : st.kicks[i]) {
            out << i << ' ';
            put(out, k.at);
            out << ' ';
            put(out, k.w);
            out << '\n';
        }
    out << "guard ";
    put(out, st.guard_time);
    out << ' ' << st.guard_count << '\n';
}

std::string serialize_state(const CountdownState& st) {
    std::ostringstream out;
    serialize_state(st, out);
    return out.str();
}

CountdownState parse_state(std::istream& in) {
    std::string magic;
    in >> magic;
    if (magic != "evspike-state")
        throw SpecError("state", "not a state snapshot (missing magic)");
    long version = get_int(in, "version");
    if (version != 1) throw SpecError("state", "unsupported snapshot version");

    CountdownState st;
    expect_key(in, "n");
    long n = get_int(in, "n");
    expect_key(in, "M");
    st.M = static_cast<int>(get_int(in, "M"));
    if (n < 0 || st.M < 0) throw SpecError("state", "negative dimensions");
    expect_key(in, "T");
    st.T = get(in, "T");

    auto read_vec = [&](const char* key, std::vector<double>& v, std::size_t count) {
        expect_key(in, key);
        v.resize(count);
        for (std::size_t i = 0; i < count; ++i) v[i] = get(in, key);
    };
    std::size_t nn = static_cast<std::size_t>(n);
    read_vec("X", st.X, nn);
    read_vec("i_s", st.i_s, nn);
    read_vec("last_spike", st.last_spike, nn);
    read_vec("H", st.H, nn * static_cast<std::size_t>(st.M));
    read_vec("anchor_v", st.anchor_v, nn);
    read_vec("anchor_t", st.anchor_t, nn);
    read_vec("anchor_i", st.anchor_i, nn);

    expect_key(in, "pending");
    long np = get_int(in, "pending count");
    for (long p = 0; p < np; ++p) {
        PendingDelivery d{};
        d.due = get(in, "pending due");
        d.emission = get(in, "pending emission");
        d.syn = static_cast<int>(get_int(in, "pending syn"));
        st.pending.push_back(d);
    }
    st.kicks.assign(nn, {});
    expect_key(in, "kicks");
    long nk = get_int(in, "kick count");
    for (long k = 0; k < nk; ++k) {
        long i = get_int(in, "kick neuron");
        if (i < 0 || i >= n) throw SpecError("state", "kick neuron out of range");
        MeanKick mk{};
        mk.at = get(in, "kick at");
        mk.w = get(in, "kick w");
        st.kicks[static_cast<std::size_t>(i)].push_back(mk);
    }
    expect_key(in, "guard");
    st.guard_time = get(in, "guard time");
    st.guard_count = static_cast<int>(get_int(in, "guard count"));
    return st;
}

CountdownState parse_state_string(const std::string& text) {
    std::istringstream in(text);
    return parse_state(in);
}

}  // namespace evspike::core
