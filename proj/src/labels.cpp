#include "triage/labels.hpp"

namespace triage {

bool finalized_within(const CaseStore &store, size_t case_idx, Unit unit,
                      Date as_of, int horizon_days) {
  const Date end = as_of + horizon_days;
  const CaseRecord &rec = store.case_at(case_idx);
  if (rec.closed_at && *rec.closed_at > as_of && *rec.closed_at <= end)
    return true;
  for (const auto &e : store.events(case_idx)) {
    if (e.occurred_at <= as_of)
      continue;
    if (e.occurred_at > end)
      break;
    if (e.type == EventType::closure)
      return true;
    if (e.type == EventType::unit_transfer && e.from_unit == unit)
      return true;
  }
  return false;
}

} // namespace triage
