#include "dmcanc/control.hpp"

#include <algorithm>
#include <cmath>

namespace dmcanc {

namespace {

// out[i+j] -= a[i]*b[j], accumulated in place.
void subtract_convolution(std::span<double> out, std::span<const double> a,
                          std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        double* o = out.data() + i;
        for (std::size_t j = 0; j < b.size(); ++j)
            o[j] -= ai * b[j];
    }
}

}  // namespace

std::vector<double> global_filter(std::span<const double> psi,
                                  const std::map<std::size_t, std::vector<double>>& peer_copies,
                                  const CompensationSet& comp) {
    if (peer_copies.size() != comp.filters.size())
        throw ConfigError("global_filter: peer copies and compensation filters disagree");
    for (const auto& [m, c] : comp.filters)
        if (!peer_copies.contains(m))
            throw ConfigError("global_filter: missing peer copy for node " + std::to_string(m + 1));

    const std::size_t comp_len = comp.filters.empty() ? 1 : comp.comp_taps();
    std::vector<double> w(psi.size() + comp_len - 1, 0.0);
    std::copy(psi.begin(), psi.end(), w.begin());
    for (const auto& [m, c] : comp.filters) {
        const auto& copy = peer_copies.at(m);
        if (copy.size() != psi.size())
            throw ConfigError("global_filter: peer copy length mismatch for node " +
                              std::to_string(m + 1));
        subtract_convolution(w, copy, c.coeffs());
    }
    return w;
}

FirFilter compose_filtered_reference(const FirFilter& s_kk_est, const CompensationSet& own_comp,
                                     const std::map<std::size_t, FirFilter>& incoming_comp) {
    if (incoming_comp.size() != own_comp.filters.size())
        throw ConfigError("filtered reference: incoming/outgoing compensation sets disagree");
    if (own_comp.filters.empty())
        return FirFilter(s_kk_est.coeffs());

    const std::size_t comp_len = own_comp.comp_taps();
    std::vector<double> kernel(2 * comp_len - 1, 0.0);
    kernel[0] = 1.0;
    for (const auto& [m, c_km] : own_comp.filters) {
        auto it = incoming_comp.find(m);
        if (it == incoming_comp.end())
            throw ConfigError("filtered reference: missing incoming compensation from node " +
                              std::to_string(m + 1));
        subtract_convolution(kernel, it->second.coeffs(), c_km.coeffs());
    }
    return FirFilter(convolve(s_kk_est.coeffs(), kernel));
}

// ---------------------------------------------------------------------------
// DmcancNode

DmcancNode::DmcancNode(std::size_t k, std::size_t n_nodes, std::size_t psi_taps,
                       const CompensationSet& own_comp,
                       const std::map<std::size_t, FirFilter>& incoming_comp,
                       const FirFilter& s_kk_est, std::size_t w_update_interval)
    : k_(k),
      n_nodes_(n_nodes),
      psi_(psi_taps, 0.0),
      comp_(own_comp),
      fx_filter_(compose_filtered_reference(s_kk_est, own_comp, incoming_comp).coeffs()),
      xhat_hist_(psi_taps),
      w_buf_(psi_taps + (own_comp.filters.empty() ? 1 : own_comp.comp_taps()) - 1, 0.0),
      w_stream_(std::vector<double>(psi_taps + (own_comp.filters.empty() ? 1 : own_comp.comp_taps()) - 1,
                                    0.0)),
      w_update_interval_(std::max<std::size_t>(1, w_update_interval)) {
    if (own_comp.filters.size() != n_nodes - 1 || own_comp.filters.contains(k))
        throw ConfigError("node " + std::to_string(k + 1) +
                          ": compensation set must cover exactly the other nodes");
    for (std::size_t m = 0; m < n_nodes_; ++m) {
        if (m == k_)
            continue;
        peers_.emplace(m, PeerUpdate{std::vector<double>(psi_taps, 0.0), 0});
    }
}

double DmcancNode::step_reference(double x_n) {
    const double xhat = fx_filter_.step(x_n);
    xhat_hist_.push(xhat);
    return xhat;
}

double DmcancNode::output(double x_n) {
    return w_stream_.step(x_n);
}

void DmcancNode::update(double e_k, double mu_psi) {
    if (!std::isfinite(e_k))
        throw DivergenceError("node " + std::to_string(k_ + 1) + ": non-finite error sample", -1);
    const double scale = mu_psi * e_k;
    if (scale != 0.0) {
        axpy_reversed(psi_, xhat_hist_.window(), scale);
        dirty_ = true;
    }
}

void DmcancNode::set_psi(std::span<const double> psi) {
    if (psi.size() != psi_.size())
        throw ArgumentError("set_psi: length mismatch");
    std::copy(psi.begin(), psi.end(), psi_.begin());
    dirty_ = true;
}

void DmcancNode::apply_delivery(const std::map<std::size_t, PeerUpdate>& delivery) {
    for (const auto& [m, upd] : delivery) {
        auto it = peers_.find(m);
        if (it == peers_.end())
            throw ArgumentError("node " + std::to_string(k_ + 1) + ": delivery from unknown node " +
                                std::to_string(m + 1));
        if (upd.stamp < it->second.stamp)
            throw ArgumentError("node " + std::to_string(k_ + 1) + ": peer version went backwards");
        it->second = upd;
        dirty_ = true;
    }
}

void DmcancNode::rebuild_combined() {
    std::fill(w_buf_.begin(), w_buf_.end(), 0.0);
    std::copy(psi_.begin(), psi_.end(), w_buf_.begin());
    for (const auto& [m, c] : comp_.filters)
        subtract_convolution(w_buf_, peers_.at(m).coeffs, c.coeffs());
    w_stream_.set_coeffs(w_buf_);
    dirty_ = false;
}

void DmcancNode::end_sample(long long n) {
    if (!dirty_)
        return;
    if (w_update_interval_ == 1 || (n % static_cast<long long>(w_update_interval_)) ==
                                       static_cast<long long>(w_update_interval_) - 1)
        rebuild_combined();
}

std::vector<double> DmcancNode::global_filter_now() const {
    std::map<std::size_t, std::vector<double>> copies;
    for (const auto& [m, upd] : peers_)
        copies.emplace(m, upd.coeffs);
    return global_filter(psi_, copies, comp_);
}

std::vector<double> DmcancNode::filtered_reference_history() const {
    std::vector<double> h(psi_.size());
    const double* win = xhat_hist_.window();
    for (std::size_t i = 0; i < h.size(); ++i)
        h[i] = win[-static_cast<std::ptrdiff_t>(i)];
    return h;
}

// ---------------------------------------------------------------------------
// CentralizedController

CentralizedController::CentralizedController(std::size_t n_nodes, std::size_t taps,
                                             const std::vector<std::vector<FirFilter>>& path_estimates)
    : n_nodes_(n_nodes), taps_(taps) {
    if (path_estimates.size() != n_nodes)
        throw ConfigError("centralized controller: need the full estimated path matrix");
    weights_.assign(n_nodes, std::vector<double>(taps, 0.0));
    for (std::size_t m = 0; m < n_nodes; ++m)
        out_streams_.emplace_back(std::vector<double>(taps, 0.0));
    for (std::size_t k = 0; k < n_nodes; ++k) {
        if (path_estimates[k].size() != n_nodes)
            throw ConfigError("centralized controller: estimated path matrix must be square");
        fx_.emplace_back();
        fx_hist_.emplace_back();
        for (std::size_t m = 0; m < n_nodes; ++m) {
            fx_[k].emplace_back(path_estimates[k][m].coeffs());
            fx_hist_[k].emplace_back(taps);
        }
    }
}

std::vector<double> CentralizedController::emit(double x_n) {
    std::vector<double> y(n_nodes_);
    for (std::size_t m = 0; m < n_nodes_; ++m)
        y[m] = out_streams_[m].step(x_n);
    for (std::size_t k = 0; k < n_nodes_; ++k)
        for (std::size_t m = 0; m < n_nodes_; ++m)
            fx_hist_[k][m].push(fx_[k][m].step(x_n));
    return y;
}

void CentralizedController::update(std::span<const double> e, double mu) {
    if (e.size() != n_nodes_)
        throw ArgumentError("centralized update: need one error sample per node");
    bool changed = false;
    for (std::size_t k = 0; k < n_nodes_; ++k) {
        if (!std::isfinite(e[k]))
            throw DivergenceError("centralized controller: non-finite error sample", -1);
        const double scale = mu * e[k];
        if (scale == 0.0)
            continue;
        changed = true;
        for (std::size_t m = 0; m < n_nodes_; ++m)
            axpy_reversed(weights_[m], fx_hist_[k][m].window(), scale);
    }
    if (changed)
        for (std::size_t m = 0; m < n_nodes_; ++m)
            out_streams_[m].set_coeffs(weights_[m]);
}

void CentralizedController::set_weights(std::size_t m, std::span<const double> w) {
    if (m >= n_nodes_ || w.size() != taps_)
        throw ArgumentError("set_weights: bad index or length");
    std::copy(w.begin(), w.end(), weights_[m].begin());
    out_streams_[m].set_coeffs(weights_[m]);
}

std::vector<double> CentralizedController::filtered_reference_history(std::size_t k,
                                                                      std::size_t m) const {
    std::vector<double> h(taps_);
    const double* win = fx_hist_[k][m].window();
    for (std::size_t i = 0; i < h.size(); ++i)
        h[i] = win[-static_cast<std::ptrdiff_t>(i)];
    return h;
}

// ---------------------------------------------------------------------------
// Error expansion diagnostic

namespace {

std::vector<double> truncated_convolve(std::span<const double> x, std::span<const double> h,
                                       std::size_t len) {
    std::vector<double> full = convolve(x, h);
    full.resize(len);
    return full;
}

}  // namespace

std::vector<double> error_expansion_check(std::span<const double> x,
                                          const std::vector<std::vector<double>>& d,
                                          const std::vector<std::vector<double>>& e,
                                          const Plant& plant,
                                          const std::vector<CompensationSet>& comps,
                                          const std::vector<std::vector<double>>& psi) {
    const std::size_t n_nodes = plant.n_nodes;
    const std::size_t len = x.size();
    std::vector<double> max_dev(n_nodes, 0.0);

    for (std::size_t k = 0; k < n_nodes; ++k) {
        // Self branch: psi_k minus all round-trip compensation echoes,
        // through the self path.
        std::vector<double> self_kernel(psi[k].size() +
                                            2 * (comps[k].filters.empty() ? 1 : comps[k].comp_taps()) - 2,
                                        0.0);
        std::copy(psi[k].begin(), psi[k].end(), self_kernel.begin());
        for (const auto& [m, c_km] : comps[k].filters) {
            const auto& c_mk = comps[m].filters.at(k);
            std::vector<double> echo = convolve(c_mk.coeffs(), c_km.coeffs());
            subtract_convolution(self_kernel, psi[k], echo);
        }
        std::vector<double> self_branch =
            truncated_convolve(x, convolve(self_kernel, plant.secondary[k][k].coeffs()), len);

        // Third-order leakage: peer l's compensation held by node m, heard
        // at sensor k.
        std::vector<double> leak(len, 0.0);
        for (std::size_t m = 0; m < n_nodes; ++m) {
            if (m == k)
                continue;
            for (std::size_t l = 0; l < n_nodes; ++l) {
                if (l == k || l == m)
                    continue;
                std::vector<double> kernel =
                    convolve(convolve(psi[l], comps[m].filters.at(l).coeffs()),
                             plant.secondary[k][m].coeffs());
                std::vector<double> contrib = truncated_convolve(x, kernel, len);
                for (std::size_t n = 0; n < len; ++n)
                    leak[n] += contrib[n];
            }
        }

        for (std::size_t n = 0; n < len; ++n) {
            const double expansion = d[k][n] - self_branch[n] + leak[n];
            max_dev[k] = std::max(max_dev[k], std::fabs(e[k][n] - expansion));
        }
    }
    return max_dev;
}

}  // namespace dmcanc
