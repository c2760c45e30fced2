#ifndef DMCANC_CONTROL_HPP
#define DMCANC_CONTROL_HPP

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dmcanc/compensation.hpp"
#include "dmcanc/network.hpp"
#include "dmcanc/plant.hpp"

namespace dmcanc {

// Combined control filter: psi_k minus every held peer copy convolved with
// the matching compensation filter. Length psi_taps + comp_taps - 1, with
// psi_k zero-padded. Throws ConfigError when peer and compensation keys
// disagree.
std::vector<double> global_filter(std::span<const double> psi,
                                  const std::map<std::size_t, std::vector<double>>& peer_copies,
                                  const CompensationSet& comp);

// Filtered-reference prefilter for one node: the self-path estimate
// composed with (delta - sum over peers of incoming_comp[m] * own_comp[m]).
// With no peers this is exactly the self-path estimate.
FirFilter compose_filtered_reference(const FirFilter& s_kk_est, const CompensationSet& own_comp,
                                     const std::map<std::size_t, FirFilter>& incoming_comp);

// One distributed node: adapts only its local filter from its own error;
// peer filters arrive through the bus and are folded in via compensation
// filters. The combined filter's input delay line survives coefficient
// swaps, so updating weights never restarts the output stream.
class DmcancNode {
public:
    DmcancNode(std::size_t k, std::size_t n_nodes, std::size_t psi_taps,
               const CompensationSet& own_comp, const std::map<std::size_t, FirFilter>& incoming_comp,
               const FirFilter& s_kk_est, std::size_t w_update_interval = 1);

    // x(n) through the filtered-reference prefilter; pushes the history used
    // by update().
    double step_reference(double x_n);

    // y_k(n) from the combined filter.
    double output(double x_n);

    // Convenience: step_reference then output.
    double emit(double x_n) {
        step_reference(x_n);
        return output(x_n);
    }

    // Local LMS step from this node's error sample. Throws DivergenceError
    // on non-finite input.
    void update(double e_k, double mu_psi);

    // Install delivered peer copies (communication event).
    void apply_delivery(const std::map<std::size_t, PeerUpdate>& delivery);

    // Overwrite the local filter (diagnostics and warm starts).
    void set_psi(std::span<const double> psi);

    // Rebuild the combined filter if anything changed; honors the rebuild
    // interval. Call once per sample after update/delivery.
    void end_sample(long long n);

    const std::vector<double>& psi() const { return psi_; }
    std::vector<double> psi_snapshot() const { return psi_; }
    const std::vector<double>& combined_coeffs() const { return w_stream_.coeffs(); }
    std::vector<double> global_filter_now() const;  // recomputed from current state
    long long peer_stamp(std::size_t m) const { return peers_.at(m).stamp; }
    std::vector<double> peer_copy(std::size_t m) const { return peers_.at(m).coeffs; }
    std::vector<double> filtered_reference_history() const;  // newest first, psi_taps long
    std::size_t index() const { return k_; }

private:
    void rebuild_combined();

    std::size_t k_;
    std::size_t n_nodes_;
    std::vector<double> psi_;
    std::map<std::size_t, PeerUpdate> peers_;
    CompensationSet comp_;
    FirFilter fx_filter_;
    HistoryRing xhat_hist_;
    std::vector<double> w_buf_;
    FirFilter w_stream_;
    std::size_t w_update_interval_;
    bool dirty_ = false;
};

// Centralized multichannel baseline: one controller adapts all source
// filters from all error signals, with the reference prefiltered through
// every estimated secondary path.
class CentralizedController {
public:
    CentralizedController(std::size_t n_nodes, std::size_t taps,
                          const std::vector<std::vector<FirFilter>>& path_estimates);

    // All control outputs for sample n; also advances the reference
    // prefilter bank.
    std::vector<double> emit(double x_n);

    // Gradient step for every source filter from this sample's errors.
    void update(std::span<const double> e, double mu);

    const std::vector<std::vector<double>>& weights() const { return weights_; }
    std::vector<double> filtered_reference_history(std::size_t k, std::size_t m) const;

    // Overwrite one source filter (diagnostics and warm starts).
    void set_weights(std::size_t m, std::span<const double> w);

private:
    std::size_t n_nodes_;
    std::size_t taps_;
    std::vector<std::vector<double>> weights_;       // [m]
    std::vector<FirFilter> out_streams_;             // [m]
    std::vector<std::vector<FirFilter>> fx_;         // [k][m]
    std::vector<std::vector<HistoryRing>> fx_hist_;  // [k][m]
};

// Offline consistency check: expand the residual error from recorded
// signals, frozen weights, and the plant/compensation filters, and compare
// with the error the plant actually measured. Exact (to rounding) when the
// cross paths are exactly self*compensation and weights are frozen.
//
// Expansion per node k (all convolutions batch, zero initial state):
//   e_k(n) = d_k(n)
//          - (x * [psi_k - sum_m psi_k*c_mk*c_km] * s_kk)(n)
//          + (x * sum_m sum_{l != k,m} psi_l*c_ml*s_km)(n)
std::vector<double> error_expansion_check(std::span<const double> x,
                                          const std::vector<std::vector<double>>& d,
                                          const std::vector<std::vector<double>>& e,
                                          const Plant& plant,
                                          const std::vector<CompensationSet>& comps,
                                          const std::vector<std::vector<double>>& psi);

}  // namespace dmcanc

#endif
