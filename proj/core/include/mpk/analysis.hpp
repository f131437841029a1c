#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mpk/corpus.hpp"
#include "mpk/language_model.hpp"

namespace mpk {

enum class FeatureKind : std::uint8_t { embedding = 0, counts = 1 };

const char* to_string(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view s);

/// Row-major n x d feature matrix, one row per instance.
struct FeatureMatrix {
    FeatureKind kind = FeatureKind::counts;
    std::uint32_t d = 0;
    std::uint64_t n = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values).subspan(i * d, d);
    }
};

/// embedding: mean over positions of the scorer's embedding rows (throws
/// ConfigError when the scorer has none). counts: L2-normalized unigram counts
/// over the vocabulary (the scorer is ignored and may be null).
FeatureMatrix extract_features(const Scorer* scorer, const PackedCorpus& corpus, FeatureKind kind,
                               std::size_t workers = 1);

/// Symmetric n x n cosine-similarity Gram matrix of the rows (row-major).
std::vector<double> cosine_kernel(const FeatureMatrix& features);

struct LinearHead {
    std::vector<double> w;
    double b = 0.0;
    double lambda = 0.0;
    double sse = 0.0;  // training residual sum of squares
};

/// Minimizes sum_i (w.f_i + b - r_i)^2 + lambda * |w|^2 (bias unpenalized) via
/// the (d+1)-dimensional normal equations. Singular systems raise NumericalError.
LinearHead fit_linear_head(const FeatureMatrix& features, std::span<const double> rewards, double lambda);

std::vector<double> predict_rewards(const LinearHead& head, const FeatureMatrix& features);

struct Correlation {
    double pearson = 0.0;
    double spearman = 0.0;
};

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

Correlation rank_correlation(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kMaxVendiSize = 1024;

/// Eigenvalues of a symmetric n x n matrix by cyclic Jacobi rotations, run
/// until the off-diagonal Frobenius norm is below `tolerance`. Ascending.
std::vector<double> jacobi_eigenvalues(std::vector<double> matrix, std::size_t n, double tolerance = 1e-10);

/// exp(-sum lambda_i ln lambda_i) over the eigenvalues of K/n, negatives
/// clipped to 0. K must be symmetric within 1e-9 and n <= 1024.
double vendi_score(std::span<const double> kernel, std::size_t n);

std::string encode_features(const FeatureMatrix& features);
FeatureMatrix decode_features(std::string_view bytes, const std::string& what);
void save_features(const std::filesystem::path& path, const FeatureMatrix& features);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace mpk
