#pragma once
//
// News cohesiveness: the Frobenius norm of the document (A A^T) or entity
// (A^T A) similarity matrix of a binary document-entity matrix A.
//
// Two independent routes are provided. The explicit route accumulates the
// squared co-occurrence counts in exact integer arithmetic through the
// sparse rows and columns. The spectral route uses
//
//     ||A A^T||_F = sqrt(sum_i sigma_i^4)
//
// with singular values obtained incrementally from a Lanczos
// bidiagonalization, stopping once the truncated tail is bounded below the
// requested relative tolerance.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "nci/corpus.hpp"
#include "nci/lanczos.hpp"
#include "nci/series.hpp"

namespace nci {

enum class CohesionMethod { explicit_products, svd };

inline const char* to_string(CohesionMethod m) {
    return m == CohesionMethod::svd ? "svd" : "explicit";
}

struct SvdSpectrum {
    std::vector<double> sigmas;  // descending
    std::size_t k = 0;
    bool converged = false;
    double residual_bound = 0.0;  // bound on tail share of sum sigma^4
};

struct CohesionResult {
    Date bucket;
    std::size_t m = 0;
    double nci_raw = 0.0;
    double nci_normalized = 0.0;
    std::size_t k_used = 0;
    CohesionMethod method = CohesionMethod::explicit_products;
    bool missing = false;  // empty bucket, no value
};

struct CohesionOptions {
    double tol = 1e-6;
    std::size_t k_step = 16;
};

namespace detail {

inline void require_rows(const EntityMatrix& a) {
    if (a.rows() == 0)
        throw EmptyBucketError("bucket " + a.bucket().str() + " has no documents");
}

}  // namespace detail

/// ||A A^T||_F^2 as an exact integer: sum over document pairs of squared
/// shared-entity counts.
inline std::uint64_t document_similarity_frobenius_sq(const EntityMatrix& a) {
    const auto cols = a.columns();
    std::vector<std::uint32_t> overlap(a.rows(), 0);
    std::vector<std::uint32_t> touched;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (auto e : a.row(i))
            for (auto j : cols[e])
                if (overlap[j]++ == 0) touched.push_back(j);
        for (auto j : touched) {
            total += std::uint64_t(overlap[j]) * overlap[j];
            overlap[j] = 0;
        }
        touched.clear();
    }
    return total;
}

/// ||A^T A||_F^2 as an exact integer: sum over entity pairs of squared
/// co-occurrence counts.
inline std::uint64_t entity_similarity_frobenius_sq(const EntityMatrix& a) {
    const auto cols = a.columns();
    std::vector<std::uint32_t> cooc(a.cols(), 0);
    std::vector<std::uint32_t> touched;
    std::uint64_t total = 0;
    for (std::size_t e = 0; e < a.cols(); ++e) {
        for (auto i : cols[e])
            for (auto f : a.row(i))
                if (cooc[f]++ == 0) touched.push_back(f);
        for (auto f : touched) {
            total += std::uint64_t(cooc[f]) * cooc[f];
            cooc[f] = 0;
        }
        touched.clear();
    }
    return total;
}

/// ||A A^T||_F through sparse products.
inline double frobenius_explicit(const EntityMatrix& a) {
    detail::require_rows(a);
    return std::sqrt(double(document_similarity_frobenius_sq(a)));
}

/// ||A^T A||_F through sparse products.
inline double frobenius_entity_projection(const EntityMatrix& a) {
    detail::require_rows(a);
    return std::sqrt(double(entity_similarity_frobenius_sq(a)));
}

/// Relative bound on the share of sum sigma^4 not captured by the Ritz
/// values `sigmas` of U_k^T A. With A = [[B, g], [0, C]] in the Lanczos bases,
/// the missing mass is 2 ||g C^T||^2 + ||C C^T||^2, where ||g|| = `residual`,
/// ||C||_F^2 = nnz - sum sigma^2 and ||C||_2^2 <= `norm2_sq` (any upper bound
/// on ||A||_2^2).
inline double truncated_tail_bound(std::span<const double> sigmas, double residual, std::size_t nnz,
                                   double norm2_sq) {
    double s2 = 0.0, s4 = 0.0;
    for (double s : sigmas) {
        s2 += s * s;
        s4 += s * s * s * s;
    }
    if (s4 <= 0.0) return nnz == 0 ? 0.0 : 1.0;
    const double energy = std::max(0.0, double(nnz) - s2);
    const double c2 = std::min(energy, norm2_sq);
    return (2.0 * residual * residual * c2 + energy * c2) / s4;
}

/// ||A||_2^2 <= ||A||_1 ||A||_inf: largest column count times largest row count.
inline double norm2_sq_bound(const EntityMatrix& a) {
    std::size_t row = 0;
    std::vector<std::size_t> col(a.cols(), 0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        row = std::max(row, a.row(i).size());
        for (auto e : a.row(i)) ++col[e];
    }
    return double(row) * double(col.empty() ? 0 : *std::max_element(col.begin(), col.end()));
}

/// Cohesiveness from the leading singular values, extended in batches of
/// `k_step` until the tail bound falls to `tol` or the spectrum is complete.
inline std::pair<CohesionResult, SvdSpectrum> nci_svd(const EntityMatrix& a,
                                                      const CohesionOptions& opt = {}) {
    detail::require_rows(a);
    if (!(opt.tol > 0.0 && opt.tol < 1.0)) throw ValidationError("tol must lie in (0, 1)");
    if (opt.k_step < 1) throw ValidationError("k_step must be >= 1");

    CohesionResult res;
    res.bucket = a.bucket();
    res.m = a.rows();
    res.method = CohesionMethod::svd;
    SvdSpectrum spec;

    if (a.nnz() == 0) {
        spec.converged = true;
        return {res, spec};
    }

    BidiagonalLanczos lanczos(a);
    const double norm2_sq = norm2_sq_bound(a);
    std::vector<double> ritz;
    double bound = 1.0;
    while (true) {
        lanczos.extend(opt.k_step);
        ritz = lanczos.ritz_values();
        bound = lanczos.complete() ? 0.0 : truncated_tail_bound(ritz, lanczos.residual(), a.nnz(), norm2_sq);
        if (bound <= opt.tol || lanczos.complete() || lanczos.stalled()) break;
    }

    if (bound > opt.tol || ritz.empty()) {
        res.method = CohesionMethod::explicit_products;
        res.nci_raw = frobenius_explicit(a);
        res.nci_normalized = res.nci_raw / double(res.m);
        spec.sigmas = ritz;
        spec.k = ritz.size();
        spec.residual_bound = bound;
        return {res, spec};
    }

    // numerically zero values carry no sigma^4 mass
    const double floor = ritz.front() * 1e-8;
    while (!ritz.empty() && ritz.back() <= floor) ritz.pop_back();

    double s4 = 0.0;
    for (auto it = ritz.rbegin(); it != ritz.rend(); ++it) s4 += (*it) * (*it) * (*it) * (*it);
    res.nci_raw = std::sqrt(s4);
    res.nci_normalized = res.nci_raw / double(res.m);
    res.k_used = ritz.size();
    spec.sigmas = std::move(ritz);
    spec.k = spec.sigmas.size();
    spec.converged = true;
    spec.residual_bound = bound;
    return {res, spec};
}

/// Per-bucket cohesion; empty buckets come back flagged missing.
inline CohesionResult compute_cohesion(const EntityMatrix& a, const CohesionOptions& opt = {}) {
    if (a.rows() == 0) {
        CohesionResult r;
        r.bucket = a.bucket();
        r.missing = true;
        return r;
    }
    return nci_svd(a, opt).first;
}

// ---------------------------------------------------------------------------
// Semantic partitions
// ---------------------------------------------------------------------------

enum class PartitionAxis { entity, document };

struct PartitionGroup {
    std::string name;
    std::vector<std::uint32_t> ids;
};

struct PartitionSpec {
    PartitionAxis axis = PartitionAxis::entity;
    std::vector<PartitionGroup> groups;

    /// Group index per id; throws when the groups do not partition [0, size).
    std::vector<std::size_t> assignment(std::size_t size) const {
        constexpr auto unset = std::size_t(-1);
        std::vector<std::size_t> owner(size, unset);
        std::vector<std::uint32_t> duplicated, out_of_range;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            for (auto id : groups[g].ids) {
                if (id >= size) {
                    out_of_range.push_back(id);
                } else if (owner[id] != unset) {
                    duplicated.push_back(id);
                } else {
                    owner[id] = g;
                }
            }
        }
        std::vector<std::uint32_t> uncovered;
        for (std::size_t i = 0; i < size; ++i)
            if (owner[i] == unset) uncovered.push_back(std::uint32_t(i));
        if (uncovered.empty() && duplicated.empty() && out_of_range.empty()) return owner;

        auto list = [](const std::vector<std::uint32_t>& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size() && i < 10; ++i) s += (i ? "," : "") + std::to_string(v[i]);
            if (v.size() > 10) s += ",... (" + std::to_string(v.size()) + " total)";
            return s;
        };
        std::string msg = "partition does not cover [0, " + std::to_string(size) + ") exactly once:";
        if (!uncovered.empty()) msg += " uncovered {" + list(uncovered) + "}";
        if (!duplicated.empty()) msg += " duplicated {" + list(duplicated) + "}";
        if (!out_of_range.empty()) msg += " out of range {" + list(out_of_range) + "}";
        throw ValidationError(msg);
    }

    /// One group per taxonomy root, in declared-root order; roots with no
    /// entity are kept as empty groups.
    static PartitionSpec by_taxonomy_root(const Vocabulary& vocab) {
        PartitionSpec spec;
        std::map<std::string, std::size_t> slot;
        for (const auto& r : vocab.roots()) {
            slot.emplace(r, spec.groups.size());
            spec.groups.push_back({r, {}});
        }
        for (const auto& e : vocab.entities()) {
            auto [it, fresh] = slot.emplace(e.root(), spec.groups.size());
            if (fresh) spec.groups.push_back({e.root(), {}});
            spec.groups[it->second].ids.push_back(e.id);
        }
        return spec;
    }
};

struct BlockCohesion {
    std::string group_a, group_b;
    double frob_sq = 0.0;
    double frob = 0.0;
};

/// Squared Frobenius norm of every (g, h) block of the similarity matrix on
/// the chosen axis, full grid including the diagonal.
inline std::vector<BlockCohesion> partition_cohesion(const EntityMatrix& a, const PartitionSpec& spec) {
    const bool entity_axis = spec.axis == PartitionAxis::entity;
    const auto owner = spec.assignment(entity_axis ? a.cols() : a.rows());
    const auto g = spec.groups.size();
    std::vector<std::uint64_t> blocks(g * g, 0);
    const auto cols = a.columns();

    if (entity_axis) {
        std::vector<std::uint32_t> cooc(a.cols(), 0);
        std::vector<std::uint32_t> touched;
        for (std::size_t e = 0; e < a.cols(); ++e) {
            for (auto i : cols[e])
                for (auto f : a.row(i))
                    if (cooc[f]++ == 0) touched.push_back(f);
            for (auto f : touched) {
                blocks[owner[e] * g + owner[f]] += std::uint64_t(cooc[f]) * cooc[f];
                cooc[f] = 0;
            }
            touched.clear();
        }
    } else {
        std::vector<std::uint32_t> overlap(a.rows(), 0);
        std::vector<std::uint32_t> touched;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            for (auto e : a.row(i))
                for (auto j : cols[e])
                    if (overlap[j]++ == 0) touched.push_back(j);
            for (auto j : touched) {
                blocks[owner[i] * g + owner[j]] += std::uint64_t(overlap[j]) * overlap[j];
                overlap[j] = 0;
            }
            touched.clear();
        }
    }

    std::vector<BlockCohesion> out;
    out.reserve(g * g);
    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t y = 0; y < g; ++y) {
            const double v = double(blocks[x * g + y]);
            out.push_back({spec.groups[x].name, spec.groups[y].name, v, std::sqrt(v)});
        }
    return out;
}

// ---------------------------------------------------------------------------
// Degree-preserving null model
// ---------------------------------------------------------------------------

struct NullModelOptions {
    std::size_t n_samples = 200;
    std::uint64_t seed = 1;
    std::size_t swaps_per_edge = 10;
};

struct NullModelReport {
    Date bucket;
    double observed = 0.0;  // normalized NCI of the input
    double sample_mean = 0.0;
    double sample_std = 0.0;
    double z_score = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::size_t accepted_swaps = 0;
    bool degenerate = false;
};

/// Rewires the bipartite occurrence graph with double-edge swaps
/// (d1,e1),(d2,e2) -> (d1,e2),(d2,e1), keeping every document length and
/// entity frequency. Returns the number of accepted swaps.
inline std::size_t rewire(std::vector<std::vector<EntityId>>& rows, std::size_t n,
                          std::size_t attempts, Rng& rng) {
    std::vector<std::pair<std::uint32_t, EntityId>> edges;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (auto e : rows[i]) edges.emplace_back(std::uint32_t(i), e);
    if (edges.size() < 2) return 0;
    std::unordered_set<std::uint64_t> present;
    present.reserve(edges.size() * 2);
    auto key = [n](std::uint64_t d, std::uint64_t e) { return d * n + e; };
    for (auto [d, e] : edges) present.insert(key(d, e));

    std::size_t accepted = 0;
    for (std::size_t t = 0; t < attempts; ++t) {
        auto i1 = uniform_below(rng, edges.size());
        auto i2 = uniform_below(rng, edges.size());
        auto [d1, e1] = edges[i1];
        auto [d2, e2] = edges[i2];
        if (d1 == d2 || e1 == e2) continue;
        if (present.count(key(d1, e2)) || present.count(key(d2, e1))) continue;
        present.erase(key(d1, e1));
        present.erase(key(d2, e2));
        present.insert(key(d1, e2));
        present.insert(key(d2, e1));
        edges[i1].second = e2;
        edges[i2].second = e1;
        ++accepted;
    }
    for (auto& r : rows) r.clear();
    for (auto [d, e] : edges) rows[d].push_back(e);
    for (auto& r : rows) std::sort(r.begin(), r.end());
    return accepted;
}

/// z-score of the observed normalized NCI against degree-preserving
/// randomizations. Sample i draws from stream (seed, i).
inline NullModelReport null_model(const EntityMatrix& a, const NullModelOptions& opt) {
    if (opt.n_samples < 2) throw ValidationError("null model needs n_samples >= 2");
    if (a.nnz() < 2) throw ValidationError("null model needs nnz >= 2");

    NullModelReport rep;
    rep.bucket = a.bucket();
    rep.n_samples = opt.n_samples;
    rep.seed = opt.seed;
    const double m = double(a.rows());
    rep.observed = std::sqrt(double(document_similarity_frobenius_sq(a))) / m;

    std::vector<std::vector<EntityId>> original(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) original[i].assign(a.row(i).begin(), a.row(i).end());

    std::vector<double> samples(opt.n_samples);
    for (std::size_t s = 0; s < opt.n_samples; ++s) {
        auto rng = make_stream(opt.seed, s);
        auto rows = original;
        rep.accepted_swaps += rewire(rows, a.cols(), opt.swaps_per_edge * a.nnz(), rng);
        auto sample = EntityMatrix::from_rows(a.bucket(), a.cols(), rows);
        samples[s] = std::sqrt(double(document_similarity_frobenius_sq(sample))) / m;
    }
    // shifted by the first sample so identical samples give exactly zero spread
    double shift = 0.0;
    for (double v : samples) shift += v - samples[0];
    const double mean = samples[0] + shift / double(samples.size());
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= double(samples.size() - 1);
    rep.sample_mean = mean;
    rep.sample_std = std::sqrt(var);
    rep.degenerate = rep.accepted_swaps == 0 || rep.sample_std <= 1e-12 * std::abs(mean);
    if (!rep.degenerate) rep.z_score = (rep.observed - mean) / rep.sample_std;
    return rep;
}

// ---------------------------------------------------------------------------
// Series
// ---------------------------------------------------------------------------

/// Per-bucket results; buckets must be strictly increasing.
inline std::vector<CohesionResult> cohesion_results(const std::vector<EntityMatrix>& matrices,
                                                    const CohesionOptions& opt = {}) {
    std::vector<CohesionResult> out;
    out.reserve(matrices.size());
    for (std::size_t i = 0; i < matrices.size(); ++i) {
        if (i > 0 && !(matrices[i - 1].bucket() < matrices[i].bucket()))
            throw InputError(matrices[i - 1].bucket() == matrices[i].bucket()
                                 ? "duplicate bucket " + matrices[i].bucket().str()
                                 : "buckets out of order at " + matrices[i].bucket().str());
        out.push_back(compute_cohesion(matrices[i], opt));
    }
    return out;
}

/// Normalized NCI per bucket; empty buckets are missing points.
inline IndexSeries nci_series(const std::vector<EntityMatrix>& matrices,
                              const CohesionOptions& opt = {}, std::string name = "nci") {
    IndexSeries s(std::move(name));
    for (const auto& r : cohesion_results(matrices, opt))
        s.push(r.bucket, r.missing ? std::nullopt : std::optional<double>(r.nci_normalized));
    return s;
}

}  // namespace nci
