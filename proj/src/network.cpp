#include "dmcanc/network.hpp"

#include <algorithm>
#include <cmath>

#include "dmcanc/dsp.hpp"

namespace dmcanc {

void CommPolicy::validate() const {
    if (fs <= 0.0)
        throw ConfigError("comm policy: sampling rate not set");
    if (kind == Kind::Delay && delay_samples < 0)
        throw ConfigError("comm policy: delay must be >= 0 samples");
    if (kind == Kind::Intermittent && !(rate_per_s > 0.0 && rate_per_s <= fs))
        throw ConfigError("comm policy: intermittent rate must be in (0, fs] events/s");
}

bool CommPolicy::event(std::size_t receiver, long long n) const {
    switch (kind) {
    case Kind::Ideal:
    case Kind::Delay:
        return true;
    case Kind::Intermittent: {
        if (periodic) {
            const long long period = std::max<long long>(1, std::llround(fs / rate_per_s));
            return n % period == 0;
        }
        const double p = rate_per_s / fs;
        const std::uint64_t z = substream_seed(seed, 31 + receiver, static_cast<std::uint64_t>(n));
        const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
        return u < p;
    }
    }
    return true;
}

std::string CommPolicy::describe() const {
    switch (kind) {
    case Kind::Ideal:
        return "ideal";
    case Kind::Delay:
        return "delay:" + std::to_string(delay_samples);
    case Kind::Intermittent:
        return "intermittent:" + std::to_string(rate_per_s) + (periodic ? ":periodic" : "");
    }
    return "?";
}

CommPolicy CommPolicy::parse(const std::string& text, double fs, std::uint64_t seed) {
    CommPolicy p;
    p.fs = fs;
    p.seed = seed;
    if (text == "ideal" || text.empty()) {
        p.kind = Kind::Ideal;
    } else if (text.rfind("delay:", 0) == 0) {
        p.kind = Kind::Delay;
        try {
            p.delay_samples = std::stoll(text.substr(6));
        } catch (const std::exception&) {
            throw ConfigError("comm policy: bad delay in '" + text + "'");
        }
    } else if (text.rfind("intermittent:", 0) == 0) {
        p.kind = Kind::Intermittent;
        std::string rest = text.substr(13);
        const auto colon = rest.find(':');
        if (colon != std::string::npos) {
            const std::string tail = rest.substr(colon + 1);
            if (tail != "periodic")
                throw ConfigError("comm policy: unknown schedule '" + tail + "'");
            p.periodic = true;
            rest = rest.substr(0, colon);
        }
        try {
            p.rate_per_s = std::stod(rest);
        } catch (const std::exception&) {
            throw ConfigError("comm policy: bad rate in '" + text + "'");
        }
    } else {
        throw ConfigError("comm policy: unknown spec '" + text +
                          "' (expected ideal | delay:<samples> | intermittent:<rate>[:periodic])");
    }
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// CoefficientBus

CoefficientBus::CoefficientBus(std::size_t n_nodes, std::size_t coeff_len, std::size_t capacity)
    : n_nodes_(n_nodes), coeff_len_(coeff_len), capacity_(capacity) {
    if (n_nodes == 0 || coeff_len == 0)
        throw ArgumentError("coefficient bus: empty dimensions");
    slots_.assign(n_nodes, std::vector<double>((capacity + 1) * coeff_len, 0.0));
    stamps_.assign(n_nodes, std::vector<long long>(capacity + 1, -1));
    last_published_.assign(n_nodes, -1);
    delivered_.assign(n_nodes, std::vector<long long>(n_nodes, 0));
}

void CoefficientBus::publish(std::size_t k, std::span<const double> psi, long long n) {
    if (k >= n_nodes_)
        throw ArgumentError("publish: node index out of range");
    if (psi.size() != coeff_len_)
        throw ArgumentError("publish: coefficient length mismatch");
    if (n <= last_published_[k])
        throw ArgumentError("publish: sample index must be strictly increasing per node");
    last_published_[k] = n;
    const std::size_t slot = static_cast<std::size_t>(n % static_cast<long long>(capacity_ + 1));
    std::copy(psi.begin(), psi.end(), slots_[k].begin() + slot * coeff_len_);
    stamps_[k][slot] = n;
}

PeerUpdate CoefficientBus::entry_at(std::size_t sender, long long stamp) const {
    PeerUpdate out;
    out.coeffs.assign(coeff_len_, 0.0);
    out.stamp = 0;
    if (sender >= n_nodes_ || last_published_[sender] < 0)
        return out;
    if (stamp > last_published_[sender])
        stamp = last_published_[sender];
    const long long oldest = std::max<long long>(0, last_published_[sender] - static_cast<long long>(capacity_));
    if (stamp < oldest)
        return out;  // aged out: cold-start zeros
    // Walk back to the newest retained entry at or before `stamp` (publishes
    // are dense in the simulator, so this hits on the first probe).
    for (long long s = stamp; s >= oldest; --s) {
        const std::size_t slot = static_cast<std::size_t>(s % static_cast<long long>(capacity_ + 1));
        if (stamps_[sender][slot] == s) {
            const double* base = slots_[sender].data() + slot * coeff_len_;
            out.coeffs.assign(base, base + coeff_len_);
            out.stamp = s;
            return out;
        }
    }
    return out;
}

std::optional<std::map<std::size_t, PeerUpdate>> CoefficientBus::snapshot(const CommPolicy& policy,
                                                                          std::size_t receiver,
                                                                          long long n) {
    if (receiver >= n_nodes_)
        throw ArgumentError("snapshot: node index out of range");
    if (!policy.event(receiver, n))
        return std::nullopt;
    const long long target =
        policy.kind == CommPolicy::Kind::Delay ? n - policy.delay_samples : n;
    std::map<std::size_t, PeerUpdate> out;
    for (std::size_t m = 0; m < n_nodes_; ++m) {
        if (m == receiver)
            continue;
        PeerUpdate u = target < 0 ? PeerUpdate{std::vector<double>(coeff_len_, 0.0), 0}
                                  : entry_at(m, target);
        delivered_[receiver][m] = u.stamp;
        out.emplace(m, std::move(u));
    }
    return out;
}

// ---------------------------------------------------------------------------
// StalenessStats

StalenessStats::StalenessStats(std::size_t n_nodes) : n_nodes_(n_nodes) {
    hist_.resize(n_nodes * n_nodes);
}

void StalenessStats::record(std::size_t receiver, std::size_t sender, long long staleness) {
    ++hist_[receiver * n_nodes_ + sender][staleness];
}

void StalenessStats::merge(const StalenessStats& other) {
    if (n_nodes_ == 0)
        *this = StalenessStats(other.n_nodes_);
    for (std::size_t i = 0; i < hist_.size(); ++i)
        for (const auto& [age, count] : other.hist_[i])
            hist_[i][age] += count;
}

double StalenessStats::mean(std::size_t receiver, std::size_t sender) const {
    const auto& h = hist_[receiver * n_nodes_ + sender];
    double sum = 0.0;
    std::uint64_t count = 0;
    for (const auto& [age, c] : h) {
        sum += static_cast<double>(age) * static_cast<double>(c);
        count += c;
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

long long StalenessStats::max_staleness(std::size_t receiver, std::size_t sender) const {
    const auto& h = hist_[receiver * n_nodes_ + sender];
    return h.empty() ? 0 : h.rbegin()->first;
}

double StalenessStats::overall_mean() const {
    double sum = 0.0;
    std::uint64_t count = 0;
    for (const auto& h : hist_)
        for (const auto& [age, c] : h) {
            sum += static_cast<double>(age) * static_cast<double>(c);
            count += c;
        }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

const std::map<long long, std::uint64_t>& StalenessStats::histogram(std::size_t receiver,
                                                                    std::size_t sender) const {
    return hist_[receiver * n_nodes_ + sender];
}

}  // namespace dmcanc
