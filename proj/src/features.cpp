#include "triage/features.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_map>
#include <unordered_set>

namespace triage {

namespace {

// Case-dynamic windows (days) per the register's temporal aggregates.
constexpr int kCaseWindows[4] = {90, 183, 365, 730};
constexpr const char *kCaseWindowNames[4] = {"90d", "183d", "365d", "730d"};
// Lawyer / unit / crime windows: last month, 3 months, 6 months + history.
constexpr int kEntityWindows[3] = {30, 90, 183};
constexpr const char *kEntityWindowNames[4] = {"30d", "90d", "183d", "hist"};

constexpr const char *kGroupNames[kFeatureGroupCount] = {
    "case_level", "milestones", "lawyer", "unit", "crime_type"};

// Milestone feature names drop the "milestone:" prefix.
std::string milestone_short_name(EventType t) {
  std::string full(event_type_name(t));
  auto pos = full.find(':');
  return pos == std::string::npos ? full : full.substr(pos + 1);
}

int window_count(const std::vector<int32_t> &dates, Date as_of, int days) {
  auto hi = std::upper_bound(dates.begin(), dates.end(), as_of.days());
  auto lo = std::upper_bound(dates.begin(), dates.end(), as_of.days() - days);
  return static_cast<int>(hi - lo);
}

int history_count(const std::vector<int32_t> &dates, Date as_of) {
  return static_cast<int>(
      std::upper_bound(dates.begin(), dates.end(), as_of.days()) -
      dates.begin());
}

double safe_ratio(double closed, double opened) {
  double denom = opened + closed;
  return denom > 0 ? closed / denom : 0.0;
}

// Dense ranks over values, 1 = best (highest value); ties share the better
// rank. Returns ranks parallel to `values`.
std::vector<double> dense_ranks_desc(const std::vector<double> &values) {
  std::vector<size_t> order(values.size());
  for (size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return values[a] > values[b];
  });
  std::vector<double> ranks(values.size(), 0.0);
  double rank = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || values[order[k]] < values[order[k - 1]])
      rank += 1;
    ranks[order[k]] = rank;
  }
  return ranks;
}

} // namespace

std::string_view feature_group_name(FeatureGroup g) {
  return kGroupNames[static_cast<int>(g)];
}

int FeatureSchema::index_of(std::string_view name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name)
      return static_cast<int>(i);
  return -1;
}

uint64_t FeatureSchema::hash() const {
  uint64_t h = 1469598103934665603ull;
  for (const auto &n : names) {
    for (char c : n)
      h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
    h = (h ^ 0x1f) * 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Schema construction
// ---------------------------------------------------------------------------

FeatureSchema build_schema(const CaseStore &store, Date vocab_as_of,
                           int max_crime_categories) {
  FeatureSchema s;
  s.vocab_as_of = vocab_as_of;

  // Crime vocabulary: top categories by cases opened on or before the vocab
  // date, ties broken by name.
  std::unordered_map<std::string, int> counts;
  for (size_t i = 0; i < store.case_count(); ++i) {
    const auto &rec = store.case_at(i);
    if (rec.opened_at <= vocab_as_of)
      ++counts[rec.crime_category];
  }
  std::vector<std::pair<std::string, int>> sorted(counts.begin(),
                                                  counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second)
      return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto &[name, n] : sorted) {
    if (static_cast<int>(s.crime_vocab.size()) >= max_crime_categories)
      break;
    s.crime_vocab.push_back(name);
  }

  auto add = [&](FeatureGroup g, std::string name) {
    s.names.push_back(std::move(name));
    s.groups.push_back(g);
  };
  auto add_missable = [&](FeatureGroup g, const std::string &name) {
    add(g, name);
    add(g, name + "__missing");
  };

  // --- case_level ---------------------------------------------------------
  for (int t = 0; t < kCoreEventTypeCount; ++t) {
    std::string base(event_type_name(static_cast<EventType>(t)));
    add(FeatureGroup::case_level, base + "_total");
    for (const char *w : kCaseWindowNames)
      add(FeatureGroup::case_level, base + "_" + w);
    for (const char *w : kCaseWindowNames)
      add(FeatureGroup::case_level, base + "_rate_" + w);
  }
  add(FeatureGroup::case_level, "events_total");
  for (const char *w : kCaseWindowNames)
    add(FeatureGroup::case_level, std::string("events_") + w);
  for (const char *w : kCaseWindowNames)
    add(FeatureGroup::case_level, std::string("events_rate_") + w);
  add(FeatureGroup::case_level, "days_since_open");
  add(FeatureGroup::case_level, "days_since_last_event");
  add_missable(FeatureGroup::case_level, "days_crime_to_report");
  add_missable(FeatureGroup::case_level, "days_with_current_lawyer");
  add(FeatureGroup::case_level, "arrested_at_intake");
  for (const auto &cat : s.crime_vocab)
    add(FeatureGroup::case_level, "crime_is_" + cat);
  add(FeatureGroup::case_level, "crime_is_OTHER");

  // --- milestones ----------------------------------------------------------
  for (int t = kCoreEventTypeCount; t < kEventTypeCount; ++t) {
    std::string base = milestone_short_name(static_cast<EventType>(t));
    add(FeatureGroup::milestones, base + "_ever");
    add(FeatureGroup::milestones, base + "_total");
    for (const char *w : kCaseWindowNames)
      add(FeatureGroup::milestones, base + "_" + w);
  }

  // --- lawyer ---------------------------------------------------------------
  add_missable(FeatureGroup::lawyer, "lawyer_active_caseload");
  for (const char *k : {"opened", "closed", "transferred"})
    for (const char *w : kEntityWindowNames)
      add_missable(FeatureGroup::lawyer,
                   std::string("lawyer_") + k + "_" + w);
  for (const char *w : kEntityWindowNames)
    add_missable(FeatureGroup::lawyer,
                 std::string("lawyer_closure_ratio_") + w);
  for (const char *w : kEntityWindowNames)
    add_missable(FeatureGroup::lawyer, std::string("lawyer_rank_") + w);
  add(FeatureGroup::lawyer, "case_distinct_lawyers");

  // --- unit -----------------------------------------------------------------
  add(FeatureGroup::unit, "unit_open_now");
  for (const char *k : {"opened", "closed", "transferred_out"})
    for (const char *w : kEntityWindowNames)
      add(FeatureGroup::unit, std::string("unit_") + k + "_" + w);
  for (const char *w : kEntityWindowNames)
    add(FeatureGroup::unit, std::string("unit_closure_ratio_") + w);
  for (const char *w : kEntityWindowNames)
    add(FeatureGroup::unit, std::string("unit_rank_") + w);

  // --- crime_type -----------------------------------------------------------
  add(FeatureGroup::crime_type, "crime_open_now");
  for (const char *k : {"opened", "closed"})
    for (const char *w : kEntityWindowNames)
      add(FeatureGroup::crime_type, std::string("crime_") + k + "_" + w);
  add(FeatureGroup::crime_type, "crime_mean_events_per_case");
  for (const char *w : kEntityWindowNames)
    add(FeatureGroup::crime_type, std::string("crime_closure_ratio_") + w);
  for (const char *w : kEntityWindowNames)
    add(FeatureGroup::crime_type, std::string("crime_rank_") + w);

  return s;
}

// ---------------------------------------------------------------------------
// Prebuilt indexes
// ---------------------------------------------------------------------------

namespace {

struct Timeline {
  std::vector<int32_t> starts, ends;
  void sort() {
    std::sort(starts.begin(), starts.end());
    std::sort(ends.begin(), ends.end());
  }
  int count_at(Date d) const {
    auto s = std::upper_bound(starts.begin(), starts.end(), d.days());
    auto e = std::upper_bound(ends.begin(), ends.end(), d.days());
    return static_cast<int>((s - starts.begin()) - (e - ends.begin()));
  }
};

struct LawyerIdx {
  std::vector<int32_t> opened, closed, transferred, any;
  Timeline caseload;
};

struct UnitIdx {
  std::vector<int32_t> opened, closed, transferred_out;
  Timeline open;
};

struct CrimeIdx {
  std::vector<int32_t> opened, closed, events;
  Timeline open;
};

} // namespace

struct FeatureExtractor::Indexes {
  std::map<std::string, LawyerIdx> lawyers;
  std::array<UnitIdx, kUnitCount> units;
  std::map<std::string, CrimeIdx> crimes;
  std::unordered_map<std::string, int> vocab_pos;
};

struct FeatureExtractor::SharedStats {
  struct LawyerSnap {
    double opened[4], closed[4], transferred[4], ratio[4], rank[4];
  };
  struct UnitSnap {
    double open_now;
    double opened[4], closed[4], transferred[4], ratio[4], rank[4];
  };
  struct CrimeSnap {
    double open_now;
    double opened[4], closed[4], ratio[4], rank[4];
    double mean_events;
  };
  std::unordered_map<std::string, LawyerSnap> lawyers;
  std::array<UnitSnap, kUnitCount> units;
  std::unordered_map<std::string, CrimeSnap> crimes;
  double crime_worst_rank[4] = {0, 0, 0, 0};
};

FeatureExtractor::FeatureExtractor(const CaseStore &store,
                                   FeatureSchema schema)
    : store_(&store), schema_(std::move(schema)),
      idx_(std::make_unique<Indexes>()) {
  for (size_t v = 0; v < schema_.crime_vocab.size(); ++v)
    idx_->vocab_pos.emplace(schema_.crime_vocab[v], static_cast<int>(v));

  for (size_t i = 0; i < store.case_count(); ++i) {
    const CaseRecord &rec = store.case_at(i);
    auto &crime = idx_->crimes[rec.crime_category];
    crime.opened.push_back(rec.opened_at.days());
    crime.open.starts.push_back(rec.opened_at.days());
    auto &intake = idx_->units[static_cast<int>(rec.unit)];
    intake.opened.push_back(rec.opened_at.days());
    intake.open.starts.push_back(rec.opened_at.days());

    Unit current = rec.unit;
    std::optional<Date> close_date;
    std::string_view seg_actor = rec.lawyer_id; // assigned until first event
    Date seg_start = rec.opened_at;
    auto close_segment = [&](Date end) {
      if (!seg_actor.empty()) {
        auto &lw = idx_->lawyers[std::string(seg_actor)];
        lw.caseload.starts.push_back(seg_start.days());
        lw.caseload.ends.push_back(end.days());
      }
    };

    for (const auto &e : store.events(i)) {
      crime.events.push_back(e.occurred_at.days());
      if (!e.actor_lawyer.empty()) {
        auto &lw = idx_->lawyers[e.actor_lawyer];
        lw.any.push_back(e.occurred_at.days());
        if (e.type == EventType::initialized)
          lw.opened.push_back(e.occurred_at.days());
        else if (e.type == EventType::closure)
          lw.closed.push_back(e.occurred_at.days());
        else if (e.type == EventType::unit_transfer)
          lw.transferred.push_back(e.occurred_at.days());
      }
      if (e.actor_lawyer != seg_actor) {
        close_segment(e.occurred_at);
        seg_actor = e.actor_lawyer;
        seg_start = e.occurred_at;
      }
      if (e.type == EventType::unit_transfer) {
        auto &from = idx_->units[static_cast<int>(*e.from_unit)];
        from.transferred_out.push_back(e.occurred_at.days());
        from.open.ends.push_back(e.occurred_at.days());
        auto &to = idx_->units[static_cast<int>(*e.to_unit)];
        to.opened.push_back(e.occurred_at.days());
        to.open.starts.push_back(e.occurred_at.days());
        current = *e.to_unit;
      } else if (e.type == EventType::closure && !close_date) {
        close_date = e.occurred_at;
        idx_->units[static_cast<int>(current)].closed.push_back(
            e.occurred_at.days());
        idx_->units[static_cast<int>(current)].open.ends.push_back(
            e.occurred_at.days());
        crime.closed.push_back(e.occurred_at.days());
        crime.open.ends.push_back(e.occurred_at.days());
      }
    }
    if (!close_date && rec.closed_at) {
      close_date = rec.closed_at;
      idx_->units[static_cast<int>(current)].closed.push_back(
          rec.closed_at->days());
      idx_->units[static_cast<int>(current)].open.ends.push_back(
          rec.closed_at->days());
      crime.closed.push_back(rec.closed_at->days());
      crime.open.ends.push_back(rec.closed_at->days());
    }
    if (close_date)
      close_segment(*close_date);
    else if (!seg_actor.empty()) {
      auto &lw = idx_->lawyers[std::string(seg_actor)];
      lw.caseload.starts.push_back(seg_start.days());
      // open-ended: no matching end
    }
  }

  for (auto &[_, lw] : idx_->lawyers) {
    std::sort(lw.opened.begin(), lw.opened.end());
    std::sort(lw.closed.begin(), lw.closed.end());
    std::sort(lw.transferred.begin(), lw.transferred.end());
    std::sort(lw.any.begin(), lw.any.end());
    lw.caseload.sort();
  }
  for (auto &u : idx_->units) {
    std::sort(u.opened.begin(), u.opened.end());
    std::sort(u.closed.begin(), u.closed.end());
    std::sort(u.transferred_out.begin(), u.transferred_out.end());
    u.open.sort();
  }
  for (auto &[_, c] : idx_->crimes) {
    std::sort(c.opened.begin(), c.opened.end());
    std::sort(c.closed.begin(), c.closed.end());
    std::sort(c.events.begin(), c.events.end());
    c.open.sort();
  }
}

FeatureExtractor::~FeatureExtractor() = default;

std::shared_ptr<const FeatureExtractor::SharedStats>
FeatureExtractor::stats_for(Date as_of) const {
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = stats_cache_.find(as_of.days());
    if (it != stats_cache_.end())
      return it->second;
  }

  auto stats = std::make_shared<SharedStats>();
  auto entity_counts = [&](const std::vector<int32_t> &dates, double out[4]) {
    for (int w = 0; w < 3; ++w)
      out[w] = window_count(dates, as_of, kEntityWindows[w]);
    out[3] = history_count(dates, as_of);
  };

  // Lawyers: windowed counts, ratios, dense ranks among window-active peers.
  std::vector<const std::string *> lawyer_names;
  for (const auto &[name, lw] : idx_->lawyers) {
    SharedStats::LawyerSnap snap{};
    entity_counts(lw.opened, snap.opened);
    entity_counts(lw.closed, snap.closed);
    entity_counts(lw.transferred, snap.transferred);
    for (int w = 0; w < 4; ++w)
      snap.ratio[w] = safe_ratio(snap.closed[w], snap.opened[w]);
    stats->lawyers.emplace(name, snap);
    lawyer_names.push_back(&name);
  }
  for (int w = 0; w < 4; ++w) {
    std::vector<const std::string *> active;
    std::vector<double> ratios;
    for (const std::string *name : lawyer_names) {
      const auto &lw = idx_->lawyers.at(*name);
      int activity = w < 3 ? window_count(lw.any, as_of, kEntityWindows[w])
                           : history_count(lw.any, as_of);
      if (activity > 0) {
        active.push_back(name);
        ratios.push_back(stats->lawyers.at(*name).ratio[w]);
      }
    }
    auto ranks = dense_ranks_desc(ratios);
    double worst = 0;
    for (double r : ranks)
      worst = std::max(worst, r);
    for (auto &[name, snap] : stats->lawyers)
      snap.rank[w] = worst + 1; // inactive in window
    for (size_t k = 0; k < active.size(); ++k)
      stats->lawyers.at(*active[k]).rank[w] = ranks[k];
  }

  // Units: counts plus dense rank by in-window closures.
  for (int w = 0; w < 4; ++w) {
    std::vector<double> closed_counts(kUnitCount);
    for (int u = 0; u < kUnitCount; ++u) {
      auto &snap = stats->units[u];
      const auto &idx = idx_->units[u];
      if (w == 0) {
        snap.open_now = idx.open.count_at(as_of);
        entity_counts(idx.opened, snap.opened);
        entity_counts(idx.closed, snap.closed);
        entity_counts(idx.transferred_out, snap.transferred);
        for (int v = 0; v < 4; ++v)
          snap.ratio[v] = safe_ratio(snap.closed[v], snap.opened[v]);
      }
      closed_counts[u] = snap.closed[w];
    }
    auto ranks = dense_ranks_desc(closed_counts);
    for (int u = 0; u < kUnitCount; ++u)
      stats->units[u].rank[w] = ranks[u];
  }

  // Crime categories seen by as_of; unseen categories fall back to zeros
  // with rank worst+1 at extraction time.
  std::vector<const std::string *> seen;
  for (const auto &[name, c] : idx_->crimes) {
    if (history_count(c.opened, as_of) == 0)
      continue;
    SharedStats::CrimeSnap snap{};
    snap.open_now = c.open.count_at(as_of);
    entity_counts(c.opened, snap.opened);
    entity_counts(c.closed, snap.closed);
    for (int w = 0; w < 4; ++w)
      snap.ratio[w] = safe_ratio(snap.closed[w], snap.opened[w]);
    double n_cases = snap.opened[3];
    snap.mean_events =
        n_cases > 0 ? history_count(c.events, as_of) / n_cases : 0.0;
    stats->crimes.emplace(name, snap);
    seen.push_back(&name);
  }
  for (int w = 0; w < 4; ++w) {
    std::vector<double> closed_counts;
    closed_counts.reserve(seen.size());
    for (const std::string *name : seen)
      closed_counts.push_back(stats->crimes.at(*name).closed[w]);
    auto ranks = dense_ranks_desc(closed_counts);
    double worst = 0;
    for (size_t k = 0; k < seen.size(); ++k) {
      stats->crimes.at(*seen[k]).rank[w] = ranks[k];
      worst = std::max(worst, ranks[k]);
    }
    stats->crime_worst_rank[w] = worst;
  }

  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto [it, inserted] = stats_cache_.emplace(as_of.days(), std::move(stats));
  return it->second;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

FeatureVector FeatureExtractor::extract(size_t case_idx, Date as_of) const {
  const CaseRecord &rec = store_->case_at(case_idx);
  auto stats = stats_for(as_of);
  auto events = store_->events_as_of(case_idx, as_of);

  FeatureVector fv;
  fv.case_index = case_idx;
  fv.as_of = as_of;
  fv.values.reserve(schema_.size());
  auto put = [&](double v) { fv.values.push_back(v); };
  auto put_missable = [&](double v, bool missing) {
    fv.values.push_back(missing ? 0.0 : v);
    fv.values.push_back(missing ? 1.0 : 0.0);
  };

  // Per-type totals and window counts in one pass.
  int type_total[kEventTypeCount] = {};
  int type_win[kEventTypeCount][4] = {};
  int all_total = 0;
  int all_win[4] = {};
  for (const auto &e : events) {
    int t = static_cast<int>(e.type);
    ++type_total[t];
    ++all_total;
    for (int w = 0; w < 4; ++w) {
      if (e.occurred_at > as_of - kCaseWindows[w]) {
        ++type_win[t][w];
        ++all_win[w];
      }
    }
  }

  auto put_windowed = [&](int total, const int win[4]) {
    put(total);
    for (int w = 0; w < 4; ++w)
      put(win[w]);
    for (int w = 0; w < 4; ++w)
      put(static_cast<double>(win[w]) / kCaseWindows[w] * 30.0);
  };

  // --- case_level -----------------------------------------------------------
  for (int t = 0; t < kCoreEventTypeCount; ++t)
    put_windowed(type_total[t], type_win[t]);
  put_windowed(all_total, all_win);

  put(as_of - rec.opened_at); // days_since_open
  Date last_event = events.empty() ? rec.opened_at : events.back().occurred_at;
  put(as_of - last_event); // days_since_last_event
  put_missable(rec.offense_at ? rec.opened_at - *rec.offense_at : 0.0,
               !rec.offense_at.has_value());

  std::string_view current_actor =
      events.empty() ? std::string_view(rec.lawyer_id)
                     : std::string_view(events.back().actor_lawyer);
  // Trailing run of events by the current actor.
  Date lawyer_since = rec.opened_at;
  if (!events.empty()) {
    lawyer_since = events.back().occurred_at;
    for (size_t k = events.size(); k-- > 0;) {
      if (events[k].actor_lawyer != current_actor)
        break;
      lawyer_since = events[k].occurred_at;
    }
  }
  put_missable(as_of - lawyer_since, current_actor.empty());
  put(rec.arrested_at_intake ? 1.0 : 0.0);

  {
    auto it = idx_->vocab_pos.find(rec.crime_category);
    int hot = it == idx_->vocab_pos.end()
                  ? static_cast<int>(schema_.crime_vocab.size())
                  : it->second;
    for (size_t v = 0; v <= schema_.crime_vocab.size(); ++v)
      put(static_cast<int>(v) == hot ? 1.0 : 0.0);
  }

  // --- milestones ------------------------------------------------------------
  for (int t = kCoreEventTypeCount; t < kEventTypeCount; ++t) {
    put(type_total[t] > 0 ? 1.0 : 0.0);
    put(type_total[t]);
    for (int w = 0; w < 4; ++w)
      put(type_win[t][w]);
  }

  // --- lawyer ----------------------------------------------------------------
  {
    const SharedStats::LawyerSnap *snap = nullptr;
    if (!current_actor.empty()) {
      auto it = stats->lawyers.find(std::string(current_actor));
      if (it != stats->lawyers.end())
        snap = &it->second;
    }
    bool missing = snap == nullptr;
    double caseload = 0.0;
    if (!missing) {
      auto lit = idx_->lawyers.find(std::string(current_actor));
      caseload = lit->second.caseload.count_at(last_event);
    }
    put_missable(caseload, missing);
    for (int kind = 0; kind < 3; ++kind)
      for (int w = 0; w < 4; ++w) {
        double v = 0.0;
        if (!missing)
          v = kind == 0 ? snap->opened[w]
                        : (kind == 1 ? snap->closed[w] : snap->transferred[w]);
        put_missable(v, missing);
      }
    for (int w = 0; w < 4; ++w)
      put_missable(missing ? 0.0 : snap->ratio[w], missing);
    for (int w = 0; w < 4; ++w)
      put_missable(missing ? 0.0 : snap->rank[w], missing);

    std::vector<std::string_view> distinct;
    for (const auto &e : events) {
      if (e.actor_lawyer.empty())
        continue;
      std::string_view a(e.actor_lawyer);
      if (std::find(distinct.begin(), distinct.end(), a) == distinct.end())
        distinct.push_back(a);
    }
    put(static_cast<double>(distinct.size()));
  }

  // --- unit ------------------------------------------------------------------
  {
    Unit u = store_->unit_at(case_idx, as_of);
    const auto &snap = stats->units[static_cast<int>(u)];
    put(snap.open_now);
    for (int kind = 0; kind < 3; ++kind)
      for (int w = 0; w < 4; ++w)
        put(kind == 0 ? snap.opened[w]
                      : (kind == 1 ? snap.closed[w] : snap.transferred[w]));
    for (int w = 0; w < 4; ++w)
      put(snap.ratio[w]);
    for (int w = 0; w < 4; ++w)
      put(snap.rank[w]);
  }

  // --- crime_type --------------------------------------------------------------
  {
    auto it = stats->crimes.find(rec.crime_category);
    if (it == stats->crimes.end()) {
      put(0.0);                   // open_now
      for (int k = 0; k < 8; ++k) // opened/closed windows
        put(0.0);
      put(0.0); // mean events
      for (int w = 0; w < 4; ++w)
        put(0.0); // ratios
      for (int w = 0; w < 4; ++w)
        put(stats->crime_worst_rank[w] + 1);
    } else {
      const auto &snap = it->second;
      put(snap.open_now);
      for (int w = 0; w < 4; ++w)
        put(snap.opened[w]);
      for (int w = 0; w < 4; ++w)
        put(snap.closed[w]);
      put(snap.mean_events);
      for (int w = 0; w < 4; ++w)
        put(snap.ratio[w]);
      for (int w = 0; w < 4; ++w)
        put(snap.rank[w]);
    }
  }

  assert(fv.values.size() == schema_.size());
  return fv;
}

std::vector<FeatureVector> FeatureExtractor::assemble(Unit unit,
                                                      Date as_of) const {
  std::vector<FeatureVector> out;
  for (size_t idx : store_->open_cases(unit, as_of))
    out.push_back(extract(idx, as_of));
  return out;
}

std::vector<std::pair<std::string, double>>
FeatureExtractor::group_features(FeatureGroup g, size_t case_idx,
                                 Date as_of) const {
  FeatureVector fv = extract(case_idx, as_of);
  std::vector<std::pair<std::string, double>> out;
  for (size_t i = 0; i < schema_.size(); ++i)
    if (schema_.groups[i] == g)
      out.emplace_back(schema_.names[i], fv.values[i]);
  return out;
}

std::vector<FeatureVector> assemble(const CaseStore &store, Unit unit,
                                    Date as_of, int max_crime_categories) {
  FeatureExtractor ex(store, build_schema(store, as_of, max_crime_categories));
  return ex.assemble(unit, as_of);
}

} // namespace triage
