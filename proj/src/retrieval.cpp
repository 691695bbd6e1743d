#include "edenet/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "edenet/errors.hpp"

namespace edenet {

DescriptorIndex build_index(const std::vector<Descriptor>& entries) {
    if (entries.empty()) throw DimensionError("build_index: empty descriptor set");
    DescriptorIndex idx;
    idx.dim_ = (int)entries[0].values.size();
    if (idx.dim_ < 1) throw DimensionError("build_index: zero-dimensional descriptor");
    idx.rows_.reserve(entries.size());
    idx.poses_.reserve(entries.size());
    idx.frame_ids_.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if ((int)e.values.size() != idx.dim_)
            throw DimensionError("build_index: descriptor " + std::to_string(i) + " has dim " +
                                 std::to_string(e.values.size()) + ", expected " +
                                 std::to_string(idx.dim_));
        double norm = 0.0;
        for (double v : e.values) norm += v * v;
        norm = std::sqrt(norm);
        if (std::fabs(norm - 1.0) > 1e-5)
            throw DomainError("build_index: descriptor " + std::to_string(i) +
                              " has norm " + std::to_string(norm) + ", expected 1");
        idx.rows_.push_back(e.values);
        idx.poses_.push_back(e.pose);
        idx.frame_ids_.push_back(e.frame_id);
    }
    return idx;
}

MatchResult query(const DescriptorIndex& index, const Descriptor& q, int topk) {
    if (topk < 1 || topk > index.size())
        throw UsageError("query: topk " + std::to_string(topk) + " out of range [1, " +
                         std::to_string(index.size()) + "]");
    if ((int)q.values.size() != index.dim())
        throw DimensionError("query: descriptor has dim " + std::to_string(q.values.size()) +
                             ", index has dim " + std::to_string(index.dim()));
    const int n = index.size();
    const int dim = index.dim();
    const double* qv = q.values.data();
    std::vector<double> d2((std::size_t)n, 0.0);
    // four independent accumulators break the sum's dependency chain; the
    // grouping is fixed, so results stay run-to-run identical
    for (int i = 0; i < n; ++i) {
        const double* row = index.row(i).data();
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        int j = 0;
        for (; j + 4 <= dim; j += 4) {
            const double e0 = row[j] - qv[j];
            const double e1 = row[j + 1] - qv[j + 1];
            const double e2 = row[j + 2] - qv[j + 2];
            const double e3 = row[j + 3] - qv[j + 3];
            a0 += e0 * e0;
            a1 += e1 * e1;
            a2 += e2 * e2;
            a3 += e3 * e3;
        }
        for (; j < dim; ++j) {
            const double e = row[j] - qv[j];
            a0 += e * e;
        }
        d2[(std::size_t)i] = (a0 + a1) + (a2 + a3);
    }
    std::vector<int> order((std::size_t)n);
    std::iota(order.begin(), order.end(), 0);
    // ordering by (distance, insertion index) is total, so partial_sort
    // selects exactly what a stable full sort would
    std::partial_sort(order.begin(), order.begin() + topk, order.end(), [&](int a, int b) {
        return d2[(std::size_t)a] < d2[(std::size_t)b] ||
               (d2[(std::size_t)a] == d2[(std::size_t)b] && a < b);
    });
    MatchResult res;
    res.frame_ids.reserve((std::size_t)topk);
    res.distances.reserve((std::size_t)topk);
    res.poses.reserve((std::size_t)topk);
    for (int r = 0; r < topk; ++r) {
        const int i = order[(std::size_t)r];
        res.frame_ids.push_back(index.frame_id(i));
        res.distances.push_back(std::sqrt(d2[(std::size_t)i]));
        res.poses.push_back(index.pose(i));
    }
    return res;
}

double recall_at_k(const std::vector<MatchResult>& results,
                   const std::vector<std::array<double, 2>>& query_poses, int k,
                   double dist_thresh) {
    if (results.empty()) throw UsageError("recall_at_k: no query results");
    if (k < 1) throw UsageError("recall_at_k: k must be at least 1");
    if (results.size() != query_poses.size())
        throw DimensionError("recall_at_k: " + std::to_string(results.size()) + " results vs " +
                             std::to_string(query_poses.size()) + " query poses");
    if (dist_thresh < 0.0) throw DomainError("recall_at_k: negative distance threshold");
    int hits = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& res = results[i];
        const auto& qp = query_poses[i];
        const int kk = std::min<int>(k, (int)res.poses.size());
        for (int r = 0; r < kk; ++r) {
            const double dx = res.poses[(std::size_t)r][0] - qp[0];
            const double dy = res.poses[(std::size_t)r][1] - qp[1];
            if (std::sqrt(dx * dx + dy * dy) <= dist_thresh) {
                ++hits;
                break;
            }
        }
    }
    return (double)hits / (double)results.size();
}

std::array<double, 2> localize(const MatchResult& result) {
    if (result.poses.empty()) throw UsageError("localize: empty match result");
    return result.poses[0];
}

}  // namespace edenet
