#pragma once

#include "triage/dates.hpp"
#include "triage/errors.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace triage {

// ---------------------------------------------------------------------------
// Domain enums
// ---------------------------------------------------------------------------

enum class Unit : uint8_t { MAT = 0, UTMC, UIE, OEMASC, UID };
inline constexpr int kUnitCount = 5;
inline constexpr std::array<Unit, kUnitCount> kAllUnits = {
    Unit::MAT, Unit::UTMC, Unit::UIE, Unit::OEMASC, Unit::UID};

std::string_view unit_name(Unit u);
std::optional<Unit> parse_unit(std::string_view s);

enum class EventType : uint8_t {
  initialized = 0,
  progress_update,
  unit_transfer,
  search_warrant,
  suspect_update,
  party_update,
  closure,
  milestone_judicialization,
  milestone_preventive_detention,
  milestone_judicial_authorization,
  milestone_arrest_warrant,
  milestone_conciliation_referral,
  milestone_vinculacion_a_proceso,
  milestone_alternative_mechanism,
};
inline constexpr int kEventTypeCount = 14;
inline constexpr int kCoreEventTypeCount = 7;  // non-milestone types
inline constexpr int kMilestoneCount = 7;

inline bool is_milestone(EventType t) {
  return static_cast<int>(t) >= kCoreEventTypeCount;
}

std::string_view event_type_name(EventType t);
std::optional<EventType> parse_event_type(std::string_view s);

enum class ClosureKind : uint8_t {
  administrative_closure = 0,
  alternative_mechanism,
  transfer_out,
  judicial_resolution,
};

std::string_view closure_kind_name(ClosureKind k);
std::optional<ClosureKind> parse_closure_kind(std::string_view s);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct CaseRecord {
  std::string case_id;
  Date opened_at;
  // Date of the reported offense when the register captured it; feeds the
  // crime-to-report gap feature and is otherwise optional.
  std::optional<Date> offense_at;
  std::string crime_category;
  std::string municipality;
  Unit unit = Unit::MAT; // unit at case opening; transfers are events
  std::string lawyer_id;
  bool arrested_at_intake = false;
  std::optional<Date> closed_at;
  std::optional<ClosureKind> closure_kind;
};

struct ProceduralEvent {
  int32_t seq = 0; // per-case, assigned at ingestion in file order
  EventType type = EventType::initialized;
  Date occurred_at;
  std::string actor_lawyer;
  std::optional<Unit> from_unit; // unit_transfer only
  std::optional<Unit> to_unit;   // unit_transfer only
};

struct RejectedRow {
  std::string file;
  int line = 0;
  std::string reason;
};

// ---------------------------------------------------------------------------
// CaseStore
// ---------------------------------------------------------------------------

// Immutable after construction: built single-writer by the builder or
// ingestion, then read-only. Cases are held sorted by case_id; each case's
// events are sorted by (occurred_at, seq), so as-of queries are prefixes.
class CaseStore {
public:
  size_t case_count() const { return cases_.size(); }
  const CaseRecord &case_at(size_t idx) const { return cases_[idx]; }
  const std::vector<CaseRecord> &cases() const { return cases_; }

  std::optional<size_t> find_case(std::string_view case_id) const;

  std::span<const ProceduralEvent> events(size_t case_idx) const;

  // Events with occurred_at <= as_of in (date, seq) order.
  std::span<const ProceduralEvent> events_as_of(size_t case_idx,
                                                Date as_of) const;
  // Same, addressed by id; throws NotFoundError for unknown ids.
  std::vector<ProceduralEvent> events_as_of(std::string_view case_id,
                                            Date as_of) const;

  // Unit handling the case at end of day `as_of` (intake unit plus any
  // transfers dated on or before as_of).
  Unit unit_at(size_t case_idx, Date as_of) const;

  // Closed on or before as_of, via closed_at or a closure event.
  bool closed_on_or_before(size_t case_idx, Date as_of) const;

  bool open_in_unit(size_t case_idx, Unit unit, Date as_of) const;

  // Case indices (ascending, i.e. case_id order) open in `unit` at as_of.
  std::vector<size_t> open_cases(Unit unit, Date as_of) const;

  // Latest event date in the store; the de-facto data horizon used by the
  // right-censoring rule. Empty store -> earliest opened_at.
  Date extraction_date() const { return extraction_date_; }
  Date min_opened() const { return min_opened_; }

  // Copy with all knowledge after `cutoff` removed: cases opened later are
  // dropped, events after the cutoff are dropped, closures dated after the
  // cutoff are cleared, and the extraction date becomes `cutoff`.
  CaseStore truncated(Date cutoff) const;

private:
  friend class CaseStoreBuilder;

  std::vector<CaseRecord> cases_;
  std::vector<std::vector<ProceduralEvent>> events_; // parallel to cases_
  std::unordered_map<std::string, size_t> by_id_;
  Date extraction_date_{0};
  Date min_opened_{0};

  void reindex();
};

// Single-writer construction with invariant validation. add_event resolves
// the case by id and assigns the per-case sequence number in call order
// (file order during ingestion). Violations that implicate a whole case or
// the file raise DataError; row-scoped problems are reported as rejects by
// the ingestion layer before reaching the builder.
class CaseStoreBuilder {
public:
  void add_case(CaseRecord record);

  // Throws DataError for unknown case ids or events dated outside the
  // case's [opened_at, closed_at] span.
  void add_event(std::string_view case_id, EventType type, Date occurred_at,
                 std::string actor_lawyer,
                 std::optional<Unit> from_unit = std::nullopt,
                 std::optional<Unit> to_unit = std::nullopt);

  bool has_case(std::string_view case_id) const;

  // Validates cross-event invariants (initialization bookkeeping, transfer
  // chains) unless `strict` is false, then freezes the store. The extraction
  // date is the latest event date, extended to `extraction_floor` when the
  // caller knows the data horizon reaches further.
  CaseStore build(bool strict = true,
                  std::optional<Date> extraction_floor = std::nullopt);

private:
  std::vector<CaseRecord> cases_;
  std::vector<std::vector<ProceduralEvent>> events_;
  std::unordered_map<std::string, size_t> by_id_;
};

// ---------------------------------------------------------------------------
// Ingestion / export
// ---------------------------------------------------------------------------

struct IngestResult {
  CaseStore store;
  std::vector<RejectedRow> rejects;
};

enum class IngestFormat { csv, jsonl };

// Reads the documented cases/events schemas. Malformed rows and duplicate
// (case_id, seq) pairs become per-row rejects; events referencing unknown
// cases or dated before their case opened are hard DataErrors.
IngestResult ingest(const std::filesystem::path &cases_path,
                    const std::filesystem::path &events_path,
                    IngestFormat format = IngestFormat::csv);

// Canonical export: cases sorted by case_id, events by (case_id, seq).
// export_store(ingest(f)) is a fixed point for valid input.
void export_store(const CaseStore &store,
                  const std::filesystem::path &cases_path,
                  const std::filesystem::path &events_path);

// Store directory layout: <dir>/cases.csv + <dir>/events.csv.
CaseStore load_store_dir(const std::filesystem::path &dir);
void save_store_dir(const CaseStore &store, const std::filesystem::path &dir);

} // namespace triage
