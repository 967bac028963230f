#include "ptilab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ptilab/errors.hpp"

namespace ptilab {

namespace {

Vec average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    Vec ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("mse: dimension mismatch");
    if (a.empty()) throw DimensionError("mse: empty input");
    return squared_distance(a, b) / static_cast<double>(a.size());
}

double psnr_from_mse(double mse_value, double max_val) {
    if (!(max_val > 0.0)) throw ConfigError("psnr: max_val must be > 0");
    if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(max_val * max_val / mse_value);
}

double psnr(std::span<const double> a, std::span<const double> b, double max_val) {
    return psnr_from_mse(mse(a, b), max_val);
}

double ssim(std::span<const double> a, std::span<const double> b, double dynamic_range) {
    if (a.size() != kShapePixels || b.size() != kShapePixels) {
        throw DimensionError("ssim: inputs must be 8x8 images (64 values)");
    }
    const double n = static_cast<double>(a.size());
    double mu_a = 0.0, mu_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mu_a += a[i];
        mu_b += b[i];
    }
    mu_a /= n;
    mu_b /= n;
    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mu_a;
        const double db = b[i] - mu_b;
        var_a += da * da;
        var_b += db * db;
        cov += da * db;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
    return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DimensionError("spearman: need two equal-length series (n >= 2)");
    const Vec rx = average_ranks(x);
    const Vec ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

const char* edit_method_name(EditMethod m) {
    switch (m) {
        case EditMethod::pti: return "pti";
        case EditMethod::ddim_edit: return "ddim-edit";
        case EditMethod::latent_interp: return "latent-interp";
    }
    return "unknown";
}

std::vector<TradeoffPoint> tradeoff_sweep(const DenoiserModel& model, const MixtureSpec& spec,
                                          const std::vector<Vec>& inputs,
                                          const std::vector<double>& etas, const EditConfig& cfg,
                                          EditMethod method, const DdimSteps& steps,
                                          const NoiseSchedule& sched) {
    if (inputs.empty() || etas.empty()) throw ConfigError("tradeoff_sweep: inputs and etas must be non-empty");
    cfg.validate();
    for (double eta : etas) {
        if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("tradeoff_sweep: eta outside [0, 1]");
    }
    const Embedding c_star = embed(model, cfg.target_class);
    PtiConfig pti = cfg.pti;
    pti.omega = cfg.omega;

    std::vector<TradeoffPoint> points(etas.size());
    for (const Vec& x : inputs) {
        const Trajectory inverted =
            invert_trajectory(model, encode(x), embed(model, std::nullopt), 0.0, steps, sched);
        PtiResult tuned;
        if (method == EditMethod::pti) tuned = prompt_tuning_inversion(model, inverted, c_star, pti, steps, sched);
        Vec ddim_out;
        if (method == EditMethod::ddim_edit) ddim_out = edit_ddim(model, x, cfg.target_class, cfg.omega, steps, sched);

        for (std::size_t e = 0; e < etas.size(); ++e) {
            Vec out;
            switch (method) {
                case EditMethod::pti:
                    out = edit_from_pti(model, tuned, c_star, etas[e], cfg.omega, steps, sched);
                    break;
                case EditMethod::ddim_edit:
                    out = ddim_out;
                    break;
                case EditMethod::latent_interp:
                    out = edit_latent_interp(model, inverted, cfg.target_class, etas[e], cfg.omega, steps, sched);
                    break;
            }
            auto& p = points[e];
            p.alignment_nll += component_nll(spec, out, cfg.target_class);
            p.fidelity_l2 += std::sqrt(squared_distance(x, out));
            p.mse += mse(x, out);
            ++p.count;
        }
    }
    for (std::size_t e = 0; e < etas.size(); ++e) {
        auto& p = points[e];
        const double n = static_cast<double>(p.count);
        p.eta = etas[e];
        p.alignment_nll /= n;
        p.fidelity_l2 /= n;
        p.mse /= n;
        p.psnr_db = psnr_from_mse(p.mse);
    }
    return points;
}

}  // namespace ptilab
