#pragma once

#include <array>
#include <vector>

#include "edenet/network.hpp"

namespace edenet {

// Exact nearest-neighbour index over unit-norm descriptors. Rows are stored
// in insertion order, which also breaks distance ties.
class DescriptorIndex {
public:
    int size() const { return (int)poses_.size(); }
    int dim() const { return dim_; }
    const std::vector<double>& row(int i) const { return rows_[(std::size_t)i]; }
    const std::array<double, 2>& pose(int i) const { return poses_[(std::size_t)i]; }
    int frame_id(int i) const { return frame_ids_[(std::size_t)i]; }

private:
    friend DescriptorIndex build_index(const std::vector<Descriptor>& entries);
    int dim_ = 0;
    std::vector<std::vector<double>> rows_;
    std::vector<std::array<double, 2>> poses_;
    std::vector<int> frame_ids_;
};

// Ranked candidates for one query, nearest first.
struct MatchResult {
    std::vector<int> frame_ids;
    std::vector<double> distances;
    std::vector<std::array<double, 2>> poses;
};

// Builds an index from descriptors. Throws DimensionError on an empty set or
// mixed dimensions, DomainError if any row is not unit-norm within 1e-5.
DescriptorIndex build_index(const std::vector<Descriptor>& entries);

// Exact top-k Euclidean scan. Ties rank by insertion order. Throws UsageError
// unless 1 <= topk <= index size, DimensionError on a dimension mismatch.
MatchResult query(const DescriptorIndex& index, const Descriptor& q, int topk);

// Fraction of queries whose top-k candidates include a pose within
// dist_thresh metres of the query pose. Throws UsageError on empty results or
// k < 1, DimensionError if results and query_poses differ in length,
// DomainError on a negative threshold. k beyond a result's length uses all
// of its candidates.
double recall_at_k(const std::vector<MatchResult>& results,
                   const std::vector<std::array<double, 2>>& query_poses, int k,
                   double dist_thresh = 3.0);

// Pose of the rank-1 match. Throws UsageError on an empty result.
std::array<double, 2> localize(const MatchResult& result);

}  // namespace edenet
