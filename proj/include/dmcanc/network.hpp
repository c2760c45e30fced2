#ifndef DMCANC_NETWORK_HPP
#define DMCANC_NETWORK_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmcanc/errors.hpp"

namespace dmcanc {

// Coefficient-exchange regime between nodes.
//   ideal               every sample, zero age
//   delay:<p>           every sample, exactly p samples old
//   intermittent:<rate>[:periodic]
//                       delivery events only; rate in events per second.
//                       Default schedule is an independent per-receiver
//                       Bernoulli draw each sample with probability rate/fs;
//                       ":periodic" switches to a fixed every-fs/rate grid.
struct CommPolicy {
    enum class Kind { Ideal, Delay, Intermittent };
    Kind kind = Kind::Ideal;
    long long delay_samples = 0;
    double rate_per_s = 0.0;
    bool periodic = false;
    std::uint64_t seed = 0;
    double fs = 0.0;

    void validate() const;
    // True when the receiver gets fresh coefficients at sample n. Stateless:
    // intermittent draws are keyed on (seed, receiver, n).
    bool event(std::size_t receiver, long long n) const;
    std::string describe() const;

    static CommPolicy parse(const std::string& text, double fs, std::uint64_t seed);
};

struct PeerUpdate {
    std::vector<double> coeffs;
    long long stamp = 0;
};

// Shared snapshot store. Every node publishes its local filter each sample;
// receivers pull per-policy views. History depth `capacity` is the largest
// supported age; older queries fall back to the zero vector (cold start).
class CoefficientBus {
public:
    CoefficientBus(std::size_t n_nodes, std::size_t coeff_len, std::size_t capacity);

    void publish(std::size_t k, std::span<const double> psi, long long n);

    // Deliveries for `receiver` at sample n, or nullopt when the policy has
    // no communication event (receiver keeps its held copies).
    std::optional<std::map<std::size_t, PeerUpdate>> snapshot(const CommPolicy& policy,
                                                              std::size_t receiver,
                                                              long long n);

    // Entry with version stamp exactly `stamp`, the oldest retained entry if
    // the request predates the ring, or zeros with stamp 0 when aged out.
    PeerUpdate entry_at(std::size_t sender, long long stamp) const;

    long long delivered_stamp(std::size_t receiver, std::size_t sender) const {
        return delivered_[receiver][sender];
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t n_nodes() const { return n_nodes_; }

private:
    std::size_t n_nodes_;
    std::size_t coeff_len_;
    std::size_t capacity_;                       // max age with an exact hit
    std::vector<std::vector<double>> slots_;     // [node], (capacity+1)*coeff_len
    std::vector<std::vector<long long>> stamps_; // [node][slot], -1 = empty
    std::vector<long long> last_published_;
    std::vector<std::vector<long long>> delivered_;  // [receiver][sender]
};

// Age accounting for held peer copies: one histogram per (receiver, sender).
class StalenessStats {
public:
    StalenessStats() = default;
    explicit StalenessStats(std::size_t n_nodes);

    void record(std::size_t receiver, std::size_t sender, long long staleness);
    void merge(const StalenessStats& other);

    double mean(std::size_t receiver, std::size_t sender) const;
    long long max_staleness(std::size_t receiver, std::size_t sender) const;
    double overall_mean() const;
    const std::map<long long, std::uint64_t>& histogram(std::size_t receiver,
                                                        std::size_t sender) const;
    std::size_t n_nodes() const { return n_nodes_; }

private:
    std::size_t n_nodes_ = 0;
    std::vector<std::map<long long, std::uint64_t>> hist_;  // receiver*n + sender
};

}  // namespace dmcanc

#endif
