#pragma once

#include "restrictlab/errors.hpp"
#include "restrictlab/spectral/spectrum.hpp"

#include <functional>
#include <future>
#include <optional>
#include <string>
#include <vector>

namespace restrictlab::spectral {

/// Smallest-modulus eigenvalues of a scenario at grid size N.
using Scenario = std::function<std::vector<cplx>(std::size_t)>;

struct ConvergenceReport {
    std::vector<std::size_t> sizes;
    std::vector<std::vector<cplx>> values;
    // errors[g][k]: relative error of eigenvalue k on grid g
    std::vector<std::vector<double>> errors;
    std::vector<double> max_errors;
    std::optional<double> order;
    bool failed = false;
    std::string reason;
};

/// Least-squares slope of -log(err) against log(N) over the positive errors.
inline std::optional<double> fitted_order(const std::vector<std::size_t>& sizes, const std::vector<double>& errs) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < errs.size(); ++i) {
        if (errs[i] > 0.0 && std::isfinite(errs[i])) {
            x.push_back(std::log(static_cast<double>(sizes[i])));
            y.push_back(-std::log(errs[i]));
        }
    }
    if (x.size() < 2) return std::nullopt;
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/**
 * Runs the scenario on every size (up to `workers` at a time) and measures the
 * first m eigenvalues against `exact` when given, otherwise against the finest grid.
 */
inline ConvergenceReport convergence_sweep(const Scenario& scenario, std::vector<std::size_t> sizes, std::size_t m,
                                           const std::optional<std::vector<cplx>>& exact = std::nullopt,
                                           std::size_t workers = 1) {
    ConvergenceReport r;
    std::sort(sizes.begin(), sizes.end());
    r.sizes = sizes;
    if (sizes.size() < 3) {
        r.failed = true;
        r.reason = "convergence sweep needs at least 3 grid sizes";
        return r;
    }
    r.values.resize(sizes.size());
    workers = std::max<std::size_t>(workers, 1);
    try {
        for (std::size_t start = 0; start < sizes.size(); start += workers) {
            std::vector<std::future<std::vector<cplx>>> jobs;
            for (std::size_t i = start; i < std::min(sizes.size(), start + workers); ++i) {
                jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, scenario, sizes[i]));
            }
            for (std::size_t j = 0; j < jobs.size(); ++j) r.values[start + j] = jobs[j].get();
        }
    } catch (const Error& e) {
        r.failed = true;
        r.reason = e.what();
        return r;
    }
    const std::vector<cplx>& ref = exact ? *exact : r.values.back();
    const std::size_t graded = exact ? sizes.size() : sizes.size() - 1;
    for (const auto& v : r.values) {
        if (v.size() < m || ref.size() < m) {
            r.failed = true;
            r.reason = "fewer than m eigenvalues on some grid";
            return r;
        }
    }
    for (std::size_t g = 0; g < graded; ++g) {
        const SpectrumMatch match = compare_spectra(ref, r.values[g], m, INFINITY);
        r.errors.push_back(match.deviations);
        r.max_errors.push_back(match.max_deviation);
    }
    std::vector<std::size_t> used(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(graded));
    r.order = fitted_order(used, r.max_errors);
    return r;
}

} // namespace restrictlab::spectral
