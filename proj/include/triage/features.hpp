#pragma once

#include "triage/case_store.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace triage {

// The five feature groups. Event-dynamic case features and the crime
// one-hot live in case_level; crime_type holds the per-category aggregate
// trends.
enum class FeatureGroup : uint8_t {
  case_level = 0,
  milestones,
  lawyer,
  unit,
  crime_type,
};
inline constexpr int kFeatureGroupCount = 5;
std::string_view feature_group_name(FeatureGroup g);

// Column layout shared by every vector an extractor produces. The crime
// one-hot vocabulary is the top `max_crime_categories` categories by case
// count as of `vocab_as_of` (ties by name); everything else lands in the
// OTHER bucket, so the name set is fixed per schema regardless of as-of
// date. Missing-capable features carry a paired "<name>__missing" channel.
struct FeatureSchema {
  std::vector<std::string> names;
  std::vector<FeatureGroup> groups; // parallel to names
  std::vector<std::string> crime_vocab;
  Date vocab_as_of;

  size_t size() const { return names.size(); }
  // -1 when the name is absent.
  int index_of(std::string_view name) const;
  // FNV-1a over the joined names; guards model/schema compatibility.
  uint64_t hash() const;
};

FeatureSchema build_schema(const CaseStore &store, Date vocab_as_of,
                           int max_crime_categories = 40);

struct FeatureVector {
  size_t case_index = 0;
  Date as_of;
  std::vector<double> values; // parallel to schema.names
};

// Pure as-of feature computation over an immutable store. Only events and
// record fields dated on or before the query date contribute; shared
// per-date aggregates (lawyer, unit, crime statistics) are memoised
// internally.
class FeatureExtractor {
public:
  FeatureExtractor(const CaseStore &store, FeatureSchema schema);
  ~FeatureExtractor();

  const FeatureSchema &schema() const { return schema_; }
  const CaseStore &store() const { return *store_; }

  FeatureVector extract(size_t case_idx, Date as_of) const;

  // One vector per open case of `unit` at as_of, in case-id order.
  std::vector<FeatureVector> assemble(Unit unit, Date as_of) const;

  // Named (feature, value) view of one group, for inspection and tests.
  std::vector<std::pair<std::string, double>>
  group_features(FeatureGroup g, size_t case_idx, Date as_of) const;

private:
  struct Indexes;
  struct SharedStats;

  const CaseStore *store_;
  FeatureSchema schema_;
  std::unique_ptr<Indexes> idx_;
  mutable std::mutex cache_mutex_;
  mutable std::map<int32_t, std::shared_ptr<const SharedStats>> stats_cache_;

  std::shared_ptr<const SharedStats> stats_for(Date as_of) const;
};

// Convenience wrapper matching the one-shot query shape: schema derived at
// as_of, then extraction. run_plan builds the schema once per training date
// instead.
std::vector<FeatureVector> assemble(const CaseStore &store, Unit unit,
                                    Date as_of, int max_crime_categories = 40);

} // namespace triage
