#pragma once

#include "triage/case_store.hpp"

namespace triage {

// A case observed open in `unit` at `as_of` counts as finalized when,
// within (as_of, as_of + horizon_days], it is closed (closure event or
// recorded closed_at) or leaves `unit` through a transfer. Both routes mean
// the file left the unit's jurisdiction.
bool finalized_within(const CaseStore &store, size_t case_idx, Unit unit,
                      Date as_of, int horizon_days);

// True when the label window is fully observable given the store's data
// horizon; censored observations are excluded from training, never labeled.
inline bool label_observable(const CaseStore &store, Date as_of,
                             int horizon_days) {
  return as_of + horizon_days <= store.extraction_date();
}

} // namespace triage
