#include "ria/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ria/error.hpp"
#include "ria/parallel.hpp"

namespace ria {

DescriptorIndex build_index(std::vector<IndexedDescriptor> descriptors) {
  if (descriptors.empty()) throw Error(ErrorKind::invalid_input, "build_index: no descriptors");
  DescriptorIndex index;
  index.dim_ = descriptors.front().descriptor.dim();
  std::unordered_set<std::string> seen;
  for (const auto& entry : descriptors) {
    if (!seen.insert(entry.id).second) {
      throw Error(ErrorKind::invalid_input, "build_index: duplicate id '" + entry.id + "'");
    }
    if (entry.descriptor.dim() != index.dim_) {
      std::ostringstream msg;
      msg << "build_index: '" << entry.id << "' has dim " << entry.descriptor.dim()
          << ", expected " << index.dim_;
      throw Error(ErrorKind::dimension, msg.str());
    }
    double sum = 0.0;
    for (double v : entry.descriptor.values()) sum += v * v;
    if (!(std::abs(std::sqrt(sum) - 1.0) <= 1e-6)) {
      throw Error(ErrorKind::invalid_input, "build_index: '" + entry.id + "' is not unit norm");
    }
  }
  index.entries_ = std::move(descriptors);
  return index;
}

std::vector<SearchHit> search(const DescriptorIndex& index, const GlobalDescriptor& query,
                              std::size_t k) {
  if (k < 1) throw Error(ErrorKind::config, "search: k must be >= 1");
  if (index.size() == 0) throw Error(ErrorKind::invalid_input, "search: empty index");
  if (query.dim() != index.dim()) {
    std::ostringstream msg;
    msg << "search: query dim " << query.dim() << " does not match index dim " << index.dim();
    throw Error(ErrorKind::dimension, msg.str());
  }

  const auto& entries = index.entries();
  const auto q = query.values();
  std::vector<SearchHit> hits;
  hits.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto v = entries[i].descriptor.values();
    double dot = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) dot += q[j] * v[j];
    hits.push_back({entries[i].id, dot, i});
  }

  const std::size_t top = std::min(k, hits.size());
  auto better = [](const SearchHit& a, const SearchHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.position < b.position;
  };
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(top), hits.end(),
                    better);
  hits.resize(top);
  return hits;
}

void DatasetManifest::validate() const {
  std::unordered_set<std::string> db;
  for (const auto& id : database) {
    if (!db.insert(id).second) {
      throw Error(ErrorKind::inconsistent, "manifest: duplicate database id '" + id + "'");
    }
  }
  for (const auto& q : queries) {
    if (q.positives.empty()) {
      throw Error(ErrorKind::inconsistent, "manifest: query '" + q.id + "' has no positives");
    }
    for (const auto& p : q.positives) {
      if (!db.contains(p)) {
        throw Error(ErrorKind::inconsistent,
                    "manifest: positive '" + p + "' of query '" + q.id + "' is not in the database");
      }
    }
  }
}

DatasetManifest manifest_from_json(const std::string& text) {
  DatasetManifest manifest;
  try {
    const auto doc = nlohmann::json::parse(text);
    manifest.database = doc.at("database").get<std::vector<std::string>>();
    for (const auto& q : doc.at("queries")) {
      manifest.queries.push_back(
          {q.at("id").get<std::string>(), q.at("positives").get<std::vector<std::string>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("manifest json: ") + e.what());
  }
  manifest.validate();
  return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json doc;
  doc["database"] = manifest.database;
  doc["queries"] = nlohmann::json::array();
  for (const auto& q : manifest.queries) {
    doc["queries"].push_back({{"id", q.id}, {"positives", q.positives}});
  }
  return doc.dump(2) + "\n";
}

std::string RecallTable::to_csv() const {
  std::ostringstream out;
  out << "k,recall\n" << std::setprecision(6) << std::fixed;
  for (const auto& [k, r] : recall) out << k << ',' << r << '\n';
  return out.str();
}

RecallTable evaluate_recall(const DescriptorIndex& index,
                            const std::vector<IndexedDescriptor>& queries,
                            const DatasetManifest& manifest, const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw Error(ErrorKind::config, "evaluate_recall: no K values");
  if (manifest.queries.empty()) {
    throw Error(ErrorKind::invalid_input, "evaluate_recall: manifest has no queries");
  }
  for (std::size_t k : ks) {
    if (k < 1) throw Error(ErrorKind::config, "evaluate_recall: K must be >= 1");
  }

  std::unordered_map<std::string, const GlobalDescriptor*> by_id;
  for (const auto& q : queries) by_id.emplace(q.id, &q.descriptor);
  std::unordered_set<std::string> indexed;
  for (const auto& e : index.entries()) indexed.insert(e.id);

  for (const auto& q : manifest.queries) {
    if (!by_id.contains(q.id)) {
      throw Error(ErrorKind::inconsistent, "evaluate_recall: no descriptor for query '" + q.id + "'");
    }
    for (const auto& p : q.positives) {
      if (!indexed.contains(p)) {
        throw Error(ErrorKind::inconsistent,
                    "evaluate_recall: positive '" + p + "' is missing from the index");
      }
    }
  }

  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  // Rank of the first positive per query; SIZE_MAX when none in the top k_max.
  std::vector<std::size_t> first_hit(manifest.queries.size(), SIZE_MAX);
  parallel_for(manifest.queries.size(), [&](std::size_t qi) {
    const auto& q = manifest.queries[qi];
    const std::set<std::string> positives(q.positives.begin(), q.positives.end());
    const auto hits = search(index, *by_id.at(q.id), k_max);
    for (std::size_t r = 0; r < hits.size(); ++r) {
      if (positives.contains(hits[r].id)) {
        first_hit[qi] = r;
        break;
      }
    }
  });

  RecallTable table;
  for (std::size_t k : ks) {
    std::size_t found = 0;
    for (std::size_t r : first_hit) found += r < k ? 1 : 0;
    table.recall[k] = static_cast<double>(found) / static_cast<double>(first_hit.size());
  }
  return table;
}

}  // namespace ria
