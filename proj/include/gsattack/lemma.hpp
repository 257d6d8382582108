#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gsattack {

enum class Family { uniform, laplace, gaussian };

const char* to_string(Family family);

/// 0.5 * ln(2 pi e variance): the largest differential entropy of any
/// density with this variance.
double gaussian_entropy_bound(double variance);

/// Closed-form differential entropy of the variance-matched family.
double family_entropy(Family family, double variance);

/// Zero-mean samples with the requested variance.
std::vector<double> sample_family(Family family, double variance, std::size_t count, std::uint64_t seed);

inline constexpr int kEntropyNeighbours = 4;

/// Kozachenko-Leonenko k-nearest-neighbour entropy estimate (nats) of
/// one-dimensional samples.
double knn_entropy(std::vector<double> samples, int k = kEntropyNeighbours);

struct LemmaRow {
    double variance = 0.0;
    Family family = Family::gaussian;
    double estimate = 0.0;
    double bound = 0.0;
    double margin = 0.0;  // bound - estimate
};

struct DerivativeCheck {
    double variance = 0.0;
    double finite_difference = 0.0;
    double analytic = 0.0;  // 1 / (2 variance)
    double relative_error = 0.0;
};

struct LemmaReport {
    std::vector<LemmaRow> rows;
    std::vector<DerivativeCheck> derivatives;
    std::vector<std::pair<double, double>> decade_sweep;  // (variance, bound)
    double tolerance = 5e-3;

    bool bound_holds = true;  // every estimate <= bound + tolerance
    bool gaussian_is_max = true;  // Gaussian estimate is the largest at each variance
    bool derivative_matches = true;  // within 1e-4 relative
    bool bound_increasing = true;  // positive derivative everywhere tested
    bool bound_diverges = true;  // decade sweep drops by ln(10) / 2 per decade

    bool passed() const {
        return bound_holds && gaussian_is_max && derivative_matches && bound_increasing && bound_diverges;
    }
    std::vector<std::string> failures() const;
};

/// Throws ArgumentError on a non-positive variance or fewer than 1e5
/// samples.
LemmaReport validate_lemma(const std::vector<double>& variances, std::size_t sample_count, std::uint64_t seed,
                           double tolerance = 5e-3);

/// variance,family,entropy_estimate,bound,margin
void write_lemma_csv(const LemmaReport& report, const std::filesystem::path& path);

}  // namespace gsattack
