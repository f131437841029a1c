#include "mpk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "mpk/binary_io.hpp"
#include "mpk/error.hpp"
#include "mpk/parallel.hpp"

namespace mpk {

namespace {

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw NumericalError("correlation undefined for a zero-variance input");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

const char* to_string(FeatureKind kind) noexcept {
    return kind == FeatureKind::embedding ? "embedding" : "counts";
}

FeatureKind parse_feature_kind(std::string_view s) {
    if (s == "embedding") return FeatureKind::embedding;
    if (s == "counts") return FeatureKind::counts;
    throw ConfigError("unknown feature kind '" + std::string(s) + "' (expected embedding or counts)");
}

FeatureMatrix extract_features(const Scorer* scorer, const PackedCorpus& corpus, FeatureKind kind,
                               std::size_t workers) {
    FeatureMatrix out;
    out.kind = kind;
    out.n = corpus.size();
    if (kind == FeatureKind::embedding) {
        if (scorer == nullptr) throw ConfigError("embedding features need a scorer");
        require_same_vocabulary(scorer->vocabulary(), corpus.vocabulary(), "extract_features");
        const auto probe = scorer->embedding(corpus.vocabulary().bos());
        if (!probe)
            throw ConfigError("scorer kind '" + std::string(scorer->kind_name()) +
                              "' has no embeddings; use counts features");
        out.d = static_cast<std::uint32_t>(probe->size());
    } else {
        out.d = corpus.vocabulary().size();
    }
    out.values.assign(out.n * out.d, 0.0);
    const double len = static_cast<double>(corpus.seq_len());
    parallel_for(corpus.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double* row = out.values.data() + i * out.d;
            for (TokenId t : corpus.instance(i)) {
                if (kind == FeatureKind::embedding) {
                    const auto e = *scorer->embedding(t);
                    for (std::size_t k = 0; k < out.d; ++k) row[k] += e[k];
                } else {
                    row[t] += 1.0;
                }
            }
            if (kind == FeatureKind::embedding) {
                for (std::size_t k = 0; k < out.d; ++k) row[k] /= len;
            } else {
                double norm = 0.0;
                for (std::size_t k = 0; k < out.d; ++k) norm += row[k] * row[k];
                norm = std::sqrt(norm);
                for (std::size_t k = 0; k < out.d; ++k) row[k] /= norm;
            }
        }
    });
    return out;
}

std::vector<double> cosine_kernel(const FeatureMatrix& f) {
    const std::size_t n = f.n;
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = f.row(i);
        norms[i] = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
        if (norms[i] == 0.0) throw InputError("cosine_kernel: zero feature vector at row " + std::to_string(i));
    }
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        k[i * n + i] = 1.0;
        const auto ri = f.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto rj = f.row(j);
            double v = std::inner_product(ri.begin(), ri.end(), rj.begin(), 0.0) / (norms[i] * norms[j]);
            v = std::clamp(v, -1.0, 1.0);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    return k;
}

LinearHead fit_linear_head(const FeatureMatrix& f, std::span<const double> rewards, double lambda) {
    if (rewards.size() != f.n) throw InputError("fit_linear_head: features and rewards are not aligned");
    if (f.n == 0) throw InputError("fit_linear_head: no training rows");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("fit_linear_head: lambda must be >= 0");
    const std::size_t d = f.d;
    // Unknowns [w; b]; accumulated in index order.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d + 1), static_cast<Eigen::Index>(d + 1));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
    Eigen::VectorXd x(static_cast<Eigen::Index>(d + 1));
    for (std::size_t i = 0; i < f.n; ++i) {
        const auto r = f.row(i);
        for (std::size_t k = 0; k < d; ++k) x[static_cast<Eigen::Index>(k)] = r[k];
        x[static_cast<Eigen::Index>(d)] = 1.0;
        a.noalias() += x * x.transpose();
        rhs += rewards[i] * x;
    }
    for (std::size_t k = 0; k < d; ++k) a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) += lambda;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible())
        throw NumericalError("fit_linear_head: singular normal equations (rank " + std::to_string(lu.rank()) + " < " +
                             std::to_string(d + 1) + "); use a ridge penalty lambda > 0");
    const Eigen::VectorXd sol = lu.solve(rhs);

    LinearHead head;
    head.lambda = lambda;
    head.w.assign(sol.data(), sol.data() + d);
    head.b = sol[static_cast<Eigen::Index>(d)];
    for (double v : head.w)
        if (!std::isfinite(v)) throw NumericalError("fit_linear_head: non-finite weights");
    const auto pred = predict_rewards(head, f);
    for (std::size_t i = 0; i < f.n; ++i) head.sse += (pred[i] - rewards[i]) * (pred[i] - rewards[i]);
    return head;
}

std::vector<double> predict_rewards(const LinearHead& head, const FeatureMatrix& f) {
    if (head.w.size() != f.d)
        throw InputError("predict_rewards: head has dimension " + std::to_string(head.w.size()) + ", features " +
                         std::to_string(f.d));
    std::vector<double> out(f.n);
    for (std::size_t i = 0; i < f.n; ++i) {
        const auto r = f.row(i);
        out[i] = std::inner_product(r.begin(), r.end(), head.w.begin(), head.b);
    }
    return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

Correlation rank_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InputError("rank_correlation: length mismatch");
    if (a.size() < 3) throw InputError("rank_correlation: need at least 3 values");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return {pearson(a, b), pearson(ra, rb)};
}

std::vector<double> jacobi_eigenvalues(std::vector<double> m, std::size_t n, double tolerance) {
    if (m.size() != n * n) throw InputError("jacobi: matrix is not n x n");
    auto at = [&](std::size_t i, std::size_t j) -> double& { return m[i * n + j]; };
    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += at(i, j) * at(i, j);
        return std::sqrt(s);
    };
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps && off_norm() > tolerance; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    if (off_norm() > tolerance) throw NumericalError("jacobi: did not converge");
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

double vendi_score(std::span<const double> kernel, std::size_t n) {
    if (n == 0) throw InputError("vendi_score: empty kernel");
    if (n > kMaxVendiSize)
        throw ConfigError("vendi_score: n=" + std::to_string(n) + " exceeds the limit of " +
                          std::to_string(kMaxVendiSize));
    if (kernel.size() != n * n) throw InputError("vendi_score: kernel is not n x n");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(kernel[i * n + j] - kernel[j * n + i]) > 1e-9)
                throw InputError("vendi_score: kernel is not symmetric");
    std::vector<double> scaled(kernel.begin(), kernel.end());
    for (auto& v : scaled) v /= static_cast<double>(n);
    double entropy = 0.0;
    for (double l : jacobi_eigenvalues(std::move(scaled), n))
        if (l > 0.0) entropy -= l * std::log(l);
    return std::exp(entropy);
}

std::string encode_features(const FeatureMatrix& f) {
    ByteWriter w;
    w.magic("MPKF");
    w.u32(1);
    w.u32(f.d);
    w.u64(f.n);
    w.array(std::span<const double>(f.values));
    return std::move(w).take();
}

FeatureMatrix decode_features(std::string_view bytes, const std::string& what) {
    ByteReader r(bytes, what);
    r.expect_magic("MPKF");
    if (auto v = r.u32(); v != 1) throw InputError(what + ": unsupported feature version " + std::to_string(v));
    FeatureMatrix f;
    f.d = r.u32();
    f.n = r.u64();
    if (f.d == 0 || r.remaining() != f.n * f.d * sizeof(double))
        throw InputError(what + ": feature payload does not match n x d");
    f.values.resize(f.n * f.d);
    r.array(std::span<double>(f.values));
    for (double v : f.values)
        if (!std::isfinite(v)) throw InputError(what + ": non-finite feature");
    return f;
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& features) {
    write_file_atomic(path, encode_features(features));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
    return decode_features(read_file(path), path.string());
}

}  // namespace mpk
