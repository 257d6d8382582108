#include "gsattack/lemma.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>

#include "gsattack/error.hpp"
#include "gsattack/random.hpp"

namespace gsattack {

const char* to_string(Family family) {
    switch (family) {
        case Family::uniform: return "uniform";
        case Family::laplace: return "laplace";
        case Family::gaussian: return "gaussian";
    }
    return "?";
}

double gaussian_entropy_bound(double variance) {
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

double family_entropy(Family family, double variance) {
    const double sigma = std::sqrt(variance);
    switch (family) {
        case Family::uniform: return std::log(std::sqrt(12.0) * sigma);
        case Family::laplace: return 1.0 + std::log(std::sqrt(2.0) * sigma);
        case Family::gaussian: return gaussian_entropy_bound(variance);
    }
    return 0.0;
}

std::vector<double> sample_family(Family family, double variance, std::size_t count, std::uint64_t seed) {
    if (!(variance > 0.0)) throw ArgumentError("sample_family: variance must be positive");
    Rng rng(seed);
    const double sigma = std::sqrt(variance);
    std::vector<double> out(count);
    switch (family) {
        case Family::uniform: {
            const double half_width = std::sqrt(3.0) * sigma;
            for (auto& v : out) v = rng.uniform(-half_width, half_width);
            break;
        }
        case Family::laplace: {
            const double b = sigma / std::sqrt(2.0);
            for (auto& v : out) {
                const double u = rng.uniform() - 0.5;
                v = -b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
            }
            break;
        }
        case Family::gaussian: {
            std::normal_distribution<double> normal(0.0, sigma);
            for (auto& v : out) v = normal(rng.engine());
            break;
        }
    }
    return out;
}

double knn_entropy(std::vector<double> samples, int k) {
    const std::size_t n = samples.size();
    if (k < 1 || n <= static_cast<std::size_t>(k)) throw ArgumentError("knn_entropy: need more than k samples");
    std::sort(samples.begin(), samples.end());

    // In 1D the k nearest neighbours of a sorted sample lie within k
    // positions on either side; merge outward from both.
    double log_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t left = i, right = i;
        double radius = 0.0;
        for (int step = 0; step < k; ++step) {
            const double dl = left > 0 ? samples[i] - samples[left - 1] : std::numeric_limits<double>::infinity();
            const double dr = right + 1 < n ? samples[right + 1] - samples[i] : std::numeric_limits<double>::infinity();
            if (dl <= dr) {
                radius = dl;
                --left;
            } else {
                radius = dr;
                ++right;
            }
        }
        // Exact duplicates carry no volume information.
        if (radius > 0.0) {
            log_sum += std::log(radius);
            ++used;
        }
    }
    const double unit_ball = 2.0;  // length of [-1, 1]
    return boost::math::digamma(static_cast<double>(used)) - boost::math::digamma(static_cast<double>(k)) +
           std::log(unit_ball) + log_sum / static_cast<double>(used);
}

std::vector<std::string> LemmaReport::failures() const {
    std::vector<std::string> out;
    if (!bound_holds) out.emplace_back("an entropy estimate exceeds the Gaussian bound");
    if (!gaussian_is_max) out.emplace_back("the Gaussian family is not the entropy maximiser");
    if (!derivative_matches) out.emplace_back("finite-difference derivative disagrees with 1/(2 variance)");
    if (!bound_increasing) out.emplace_back("the bound is not increasing in the variance");
    if (!bound_diverges) out.emplace_back("the bound does not decrease without limit as variance -> 0");
    return out;
}

LemmaReport validate_lemma(const std::vector<double>& variances, std::size_t sample_count, std::uint64_t seed,
                           double tolerance) {
    if (variances.empty()) throw ArgumentError("validate_lemma: no variances given");
    for (double v : variances) {
        if (!(v > 0.0)) throw ArgumentError("validate_lemma: variances must be positive");
    }
    if (sample_count < 100000) throw ArgumentError("validate_lemma: at least 1e5 samples are required");

    constexpr Family kFamilies[] = {Family::uniform, Family::laplace, Family::gaussian};
    LemmaReport report;
    report.tolerance = tolerance;
    report.rows.resize(variances.size() * 3);

    const auto n_jobs = static_cast<std::ptrdiff_t>(report.rows.size());
    #pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t job = 0; job < n_jobs; ++job) {
        const std::size_t vi = static_cast<std::size_t>(job) / 3;
        const Family family = kFamilies[job % 3];
        LemmaRow row;
        row.variance = variances[vi];
        row.family = family;
        row.estimate = knn_entropy(sample_family(family, row.variance, sample_count, Rng::derive(seed, static_cast<std::uint64_t>(job))));
        row.bound = gaussian_entropy_bound(row.variance);
        row.margin = row.bound - row.estimate;
        report.rows[job] = row;
    }

    for (std::size_t vi = 0; vi < variances.size(); ++vi) {
        const auto& uniform = report.rows[3 * vi];
        const auto& laplace = report.rows[3 * vi + 1];
        const auto& gaussian = report.rows[3 * vi + 2];
        for (const auto* r : {&uniform, &laplace, &gaussian}) {
            if (r->estimate > r->bound + tolerance) report.bound_holds = false;
        }
        if (!(gaussian.estimate > uniform.estimate && gaussian.estimate > laplace.estimate)) report.gaussian_is_max = false;

        const double v = variances[vi];
        const double h = 1e-4 * v;
        DerivativeCheck d;
        d.variance = v;
        d.finite_difference = (gaussian_entropy_bound(v + h) - gaussian_entropy_bound(v - h)) / (2.0 * h);
        d.analytic = 1.0 / (2.0 * v);
        d.relative_error = std::abs(d.finite_difference - d.analytic) / d.analytic;
        if (!(d.relative_error <= 1e-4)) report.derivative_matches = false;
        if (!(d.finite_difference > 0.0)) report.bound_increasing = false;
        report.derivatives.push_back(d);
    }

    // Each decade of variance lowers the bound by ln(10) / 2.
    const double step = 0.5 * std::log(10.0);
    for (int e = 0; e >= -12; --e) {
        const double v = std::pow(10.0, e);
        report.decade_sweep.emplace_back(v, gaussian_entropy_bound(v));
    }
    for (std::size_t i = 1; i < report.decade_sweep.size(); ++i) {
        const double drop = report.decade_sweep[i - 1].second - report.decade_sweep[i].second;
        if (!(std::abs(drop - step) <= 1e-9)) report.bound_diverges = false;
    }
    if (!(report.decade_sweep.back().second < -10.0)) report.bound_diverges = false;
    return report;
}

void write_lemma_csv(const LemmaReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "variance,family,entropy_estimate,bound,margin\n" << std::setprecision(17);
    for (const auto& r : report.rows) {
        out << r.variance << ',' << to_string(r.family) << ',' << r.estimate << ',' << r.bound << ',' << r.margin << '\n';
    }
}

}  // namespace gsattack
