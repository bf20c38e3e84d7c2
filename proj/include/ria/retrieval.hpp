#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ria/aggregation.hpp"

namespace ria {

struct IndexedDescriptor {
  std::string id;
  GlobalDescriptor descriptor;
};

/// Immutable, insertion-ordered set of unit descriptors with unique ids.
class DescriptorIndex {
 public:
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<IndexedDescriptor>& entries() const { return entries_; }

 private:
  friend DescriptorIndex build_index(std::vector<IndexedDescriptor> descriptors);
  std::size_t dim_ = 0;
  std::vector<IndexedDescriptor> entries_;
};

/// Rejects empty input, duplicate ids, mixed dims and descriptors whose norm is
/// off unit by more than 1e-6.
DescriptorIndex build_index(std::vector<IndexedDescriptor> descriptors);

struct SearchHit {
  std::string id;
  double similarity;
  std::size_t position;  // insertion index in the DescriptorIndex

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Exact top-k by dot product, descending; equal scores keep insertion order.
/// k larger than the index returns the full ranking.
std::vector<SearchHit> search(const DescriptorIndex& index, const GlobalDescriptor& query,
                              std::size_t k);

struct ManifestQuery {
  std::string id;
  std::vector<std::string> positives;
};

struct DatasetManifest {
  std::vector<std::string> database;
  std::vector<ManifestQuery> queries;

  /// Every query has ≥1 positive and every positive is a database id.
  void validate() const;
};

/// {"database": [...], "queries": [{"id": ..., "positives": [...]}]}
DatasetManifest manifest_from_json(const std::string& text);
std::string manifest_to_json(const DatasetManifest& manifest);

struct RecallTable {
  std::map<std::size_t, double> recall;  // K -> fraction of queries

  /// "k,recall" header plus one row per K.
  std::string to_csv() const;
};

/// For each K, the fraction of manifest queries with a positive in the top K.
/// Queries are looked up by id in `queries`; a manifest query without a
/// descriptor is an error, as is an empty query list.
RecallTable evaluate_recall(const DescriptorIndex& index,
                            const std::vector<IndexedDescriptor>& queries,
                            const DatasetManifest& manifest, const std::vector<std::size_t>& ks);

}  // namespace ria
