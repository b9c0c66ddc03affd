#include "triage/synth.hpp"

#include "triage/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace triage {

namespace {

constexpr double kDaysPerRateMonth = 365.0 / 12.0;
constexpr double kWeeklyEventRate = 0.22; // per activity-level unit

std::vector<std::pair<std::string, double>> default_crime_mix() {
  // Zipf-ish weights over twelve categories.
  std::vector<std::pair<std::string, double>> mix;
  double total = 0.0;
  for (int i = 0; i < 12; ++i)
    total += 1.0 / (i + 1);
  for (int i = 0; i < 12; ++i) {
    std::string name = "CAT_";
    name.push_back(static_cast<char>('A' + i));
    mix.emplace_back(name, (1.0 / (i + 1)) / total);
  }
  return mix;
}

// Stable per-category factor in {0.6, 1.1, 1.6}; makes the planted signal
// interact with crime category instead of being one global monotone curve.
double category_factor(const std::string &category) {
  uint64_t h = 1469598103934665603ull;
  for (char c : category)
    h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  return 0.6 + 0.5 * static_cast<double>(h % 3);
}

struct SimEvent {
  EventType type;
  Date day;
  std::string actor;
  std::optional<Unit> from, to;
};

struct SimCase {
  std::string case_id;
  std::string crime;
  std::string municipality;
  std::string intake_lawyer;
  std::string lawyer; // current
  Date opened;
  std::optional<Date> offense;
  bool arrested = false;
  Unit intake_unit = Unit::MAT;
  Unit current_unit = Unit::MAT;
  double activity_level = 1.0;
  std::vector<Date> event_dates; // ascending at week boundaries
  std::vector<SimEvent> events;
  std::optional<Date> closed;
  std::optional<ClosureKind> closure_kind;
  bool open = true;
};

// Bresenham-style rate accumulator: converts a per-day rate into integer
// weekly targets whose long-run total tracks the rate exactly.
struct RateAccumulator {
  double per_day = 0.0;
  double acc = 0.0;
  int take(int days) {
    acc += per_day * days;
    int n = static_cast<int>(acc);
    acc -= n;
    return n;
  }
};

int count_since(const std::vector<Date> &dates, Date cutoff_exclusive) {
  auto it = std::lower_bound(dates.begin(), dates.end(), cutoff_exclusive);
  return static_cast<int>(dates.end() - it);
}

} // namespace

void SynthConfig::validate() const {
  if (span_end <= span_start)
    throw ConfigError("synth: zero-width date span");
  if (monthly_arrivals <= 0 && n_cases <= 0)
    throw ConfigError("synth: need monthly_arrivals > 0 or n_cases > 0");
  if (activity_effect < 0)
    throw ConfigError("synth: activity_effect must be >= 0");
  if (lawyer_count <= 0 || unit_count <= 0 || unit_count > kUnitCount)
    throw ConfigError("synth: lawyer_count/unit_count out of range");
  if (mat_intake_share < 0 || mat_intake_share > 1)
    throw ConfigError("synth: mat_intake_share outside [0,1]");
  if (!crime_mix.empty()) {
    double sum = 0.0;
    for (const auto &[name, w] : crime_mix) {
      if (name.empty() || w < 0)
        throw ConfigError("synth: invalid crime_mix entry");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("synth: crime_mix must sum to 1");
  }
}

SynthConfig synth_config_from_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open synth config: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ConfigError("invalid JSON in synth config: " + path.string());

  SynthConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.n_cases = j.value("n_cases", cfg.n_cases);
  if (j.contains("date_span")) {
    auto &span = j.at("date_span");
    auto start = Date::parse(span.value("start", ""));
    auto end = Date::parse(span.value("end", ""));
    if (!start || !end)
      throw ConfigError("synth config: bad date_span");
    cfg.span_start = *start;
    cfg.span_end = *end;
  }
  cfg.monthly_arrivals = j.value("monthly_arrivals", cfg.monthly_arrivals);
  cfg.monthly_closures = j.value("monthly_closures", cfg.monthly_closures);
  cfg.monthly_alternative =
      j.value("monthly_alternative", cfg.monthly_alternative);
  cfg.monthly_transfers = j.value("monthly_transfers", cfg.monthly_transfers);
  cfg.activity_effect = j.value("activity_effect", cfg.activity_effect);
  cfg.lawyer_count = j.value("lawyer_count", cfg.lawyer_count);
  cfg.unit_count = j.value("unit_count", cfg.unit_count);
  cfg.mat_intake_share = j.value("mat_intake_share", cfg.mat_intake_share);
  if (j.contains("crime_mix")) {
    std::map<std::string, double> sorted =
        j.at("crime_mix").get<std::map<std::string, double>>();
    cfg.crime_mix.assign(sorted.begin(), sorted.end());
  }
  cfg.validate();
  return cfg;
}

CaseStore generate_store(const SynthConfig &config) {
  config.validate();
  Rng rng(config.seed);

  const int span_days = config.span_end - config.span_start;
  const auto mix =
      config.crime_mix.empty() ? default_crime_mix() : config.crime_mix;

  const double arrivals_per_day =
      config.monthly_arrivals > 0
          ? config.monthly_arrivals / kDaysPerRateMonth
          : static_cast<double>(config.n_cases) / span_days;
  const double monthly_arrivals_eff = arrivals_per_day * kDaysPerRateMonth;
  const double monthly_closures = config.monthly_closures >= 0
                                      ? config.monthly_closures
                                      : 0.45 * monthly_arrivals_eff;
  const double monthly_alternative = config.monthly_alternative >= 0
                                         ? config.monthly_alternative
                                         : 0.10 * monthly_arrivals_eff;
  const double monthly_transfers =
      config.unit_count < 2 ? 0.0
                            : (config.monthly_transfers >= 0
                                   ? config.monthly_transfers
                                   : 0.50 * monthly_closures);

  RateAccumulator arrivals{arrivals_per_day, 0.0};
  RateAccumulator closures{monthly_closures / kDaysPerRateMonth, 0.0};
  RateAccumulator alternatives{monthly_alternative / kDaysPerRateMonth, 0.0};
  RateAccumulator transfers{monthly_transfers / kDaysPerRateMonth, 0.0};

  std::vector<SimCase> sim;
  std::vector<size_t> open_cases;
  int case_counter = 0;

  auto pick_crime = [&]() -> const std::string & {
    double u = rng.next_double();
    double cum = 0.0;
    for (const auto &[name, w] : mix) {
      cum += w;
      if (u < cum)
        return name;
    }
    return mix.back().first;
  };
  auto pick_lawyer = [&]() {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "L%03d",
                  static_cast<int>(rng.below(config.lawyer_count)) + 1);
    return std::string(buf);
  };

  // Planted-signal score: recent activity scaled by a per-category factor
  // plus a kinked age term. activity_effect == 0 collapses every weight to
  // 1, making finalization uniform over the open pool.
  auto selection_weight = [&](const SimCase &c, Date week_start) {
    if (config.activity_effect == 0.0)
      return 1.0;
    double recent = count_since(c.event_dates, week_start - 90);
    double age_years = static_cast<double>(week_start - c.opened) / 365.0;
    double s = category_factor(c.crime) * std::log1p(recent) -
               0.9 * std::abs(age_years - 0.6);
    double z = config.activity_effect * s;
    return std::exp(std::clamp(z, -30.0, 30.0));
  };

  for (Date week_start = config.span_start; week_start <= config.span_end;
       week_start += 7) {
    const int days_this_week = std::min(7, config.span_end - week_start + 1);
    auto day_in_week = [&]() {
      return week_start + static_cast<int>(rng.below(days_this_week));
    };

    // --- arrivals -------------------------------------------------------
    int n_new = arrivals.take(days_this_week);
    for (int k = 0; k < n_new; ++k) {
      SimCase c;
      char idbuf[16];
      std::snprintf(idbuf, sizeof(idbuf), "C%06d", ++case_counter);
      c.case_id = idbuf;
      c.crime = pick_crime();
      char mbuf[8];
      std::snprintf(mbuf, sizeof(mbuf), "M%02d",
                    static_cast<int>(rng.below(12)) + 1);
      c.municipality = mbuf;
      c.intake_lawyer = pick_lawyer();
      c.lawyer = c.intake_lawyer;
      c.opened = day_in_week();
      if (!rng.bernoulli(0.1))
        c.offense = c.opened - static_cast<int>(1 + rng.below(14));
      c.arrested = rng.bernoulli(0.25);
      if (config.unit_count == 1 || rng.bernoulli(config.mat_intake_share))
        c.intake_unit = Unit::MAT;
      else
        c.intake_unit = static_cast<Unit>(
            1 + rng.below(static_cast<uint64_t>(config.unit_count - 1)));
      c.current_unit = c.intake_unit;
      c.activity_level = std::exp(0.8 * rng.normal());
      c.events.push_back(
          {EventType::initialized, c.opened, c.intake_lawyer, {}, {}});
      c.event_dates.push_back(c.opened);
      open_cases.push_back(sim.size());
      sim.push_back(std::move(c));
    }

    // --- finalization round ----------------------------------------------
    int target_close = closures.take(days_this_week);
    int target_alt = alternatives.take(days_this_week);
    int target_transfer = transfers.take(days_this_week);

    std::vector<char> settled(open_cases.size(), 0);
    if (!open_cases.empty() &&
        (target_close + target_alt + target_transfer) > 0) {
      const size_t n_open = open_cases.size();
      std::vector<double> share(n_open);
      double total_weight = 0.0;
      for (size_t i = 0; i < n_open; ++i) {
        share[i] = selection_weight(sim[open_cases[i]], week_start);
        total_weight += share[i];
      }
      for (double &s : share)
        s /= total_weight;
      // Per-case weekly hazard capped at 0.9; one redistribution pass keeps
      // the expected number of departures on target when weights spike.
      const double total_target =
          static_cast<double>(target_close + target_alt + target_transfer);
      std::vector<double> hazard(n_open);
      double overflow = 0.0, uncapped_share = 0.0;
      for (size_t i = 0; i < n_open; ++i) {
        double p = total_target * share[i];
        if (p > 0.9) {
          overflow += p - 0.9;
          hazard[i] = 0.9;
        } else {
          hazard[i] = p;
          uncapped_share += share[i];
        }
      }
      if (overflow > 0 && uncapped_share > 0)
        for (size_t i = 0; i < n_open; ++i)
          if (hazard[i] < 0.9)
            hazard[i] =
                std::min(0.9, hazard[i] + overflow * share[i] / uncapped_share);

      const double w_close = target_close / std::max(1.0, total_target);
      const double w_alt = target_alt / std::max(1.0, total_target);
      for (size_t i = 0; i < n_open; ++i) {
        SimCase &c = sim[open_cases[i]];
        double u = rng.next_double();
        if (u >= hazard[i])
          continue;
        double kind = rng.next_double();
        Date day = std::max(day_in_week(), c.opened);
        if (kind < w_close + w_alt) {
          bool alternative = kind >= w_close;
          if (alternative) {
            c.events.push_back({EventType::milestone_alternative_mechanism,
                                day, c.lawyer, {}, {}});
            c.event_dates.push_back(day);
          }
          c.events.push_back({EventType::closure, day, c.lawyer, {}, {}});
          c.event_dates.push_back(day);
          c.closed = day;
          c.closure_kind = alternative
                               ? ClosureKind::alternative_mechanism
                               : (rng.bernoulli(0.75)
                                      ? ClosureKind::administrative_closure
                                      : ClosureKind::judicial_resolution);
          c.open = false;
          settled[i] = 1;
        } else {
          Unit dest = c.current_unit;
          while (dest == c.current_unit)
            dest = static_cast<Unit>(
                rng.below(static_cast<uint64_t>(config.unit_count)));
          c.events.push_back(
              {EventType::unit_transfer, day, c.lawyer, c.current_unit, dest});
          std::string new_lawyer = pick_lawyer();
          c.events.push_back(
              {EventType::initialized, day, new_lawyer, {}, {}});
          c.event_dates.push_back(day);
          c.event_dates.push_back(day);
          c.current_unit = dest;
          c.lawyer = new_lawyer;
          settled[i] = 1; // stays open; no further activity this week
        }
      }
    }

    // --- routine activity for cases that stayed put -----------------------
    for (size_t i = 0; i < open_cases.size(); ++i) {
      if (settled[i])
        continue;
      SimCase &c = sim[open_cases[i]];
      int n_events = rng.poisson(kWeeklyEventRate * c.activity_level);
      for (int k = 0; k < n_events; ++k) {
        Date day = std::max(day_in_week(), c.opened);
        double u = rng.next_double();
        EventType type;
        if (u < 0.52)
          type = EventType::progress_update;
        else if (u < 0.64)
          type = EventType::suspect_update;
        else if (u < 0.76)
          type = EventType::party_update;
        else if (u < 0.82)
          type = EventType::search_warrant;
        else if (u < 0.85)
          type = EventType::milestone_judicialization;
        else if (u < 0.88)
          type = EventType::milestone_judicial_authorization;
        else if (u < 0.91)
          type = EventType::milestone_arrest_warrant;
        else if (u < 0.94)
          type = EventType::milestone_conciliation_referral;
        else if (u < 0.96)
          type = EventType::milestone_preventive_detention;
        else if (u < 0.98)
          type = EventType::milestone_vinculacion_a_proceso;
        else
          type = EventType::milestone_alternative_mechanism;
        std::string actor = rng.bernoulli(0.8) ? c.lawyer : pick_lawyer();
        c.events.push_back({type, day, std::move(actor), {}, {}});
        c.event_dates.push_back(day);
      }
    }

    std::vector<size_t> still_open;
    still_open.reserve(open_cases.size());
    for (size_t idx : open_cases) {
      if (sim[idx].open)
        still_open.push_back(idx);
      std::sort(sim[idx].event_dates.begin(), sim[idx].event_dates.end());
    }
    open_cases = std::move(still_open);
  }

  // --- freeze into a validated store --------------------------------------
  CaseStoreBuilder builder;
  for (const SimCase &c : sim) {
    CaseRecord rec;
    rec.case_id = c.case_id;
    rec.opened_at = c.opened;
    rec.offense_at = c.offense;
    rec.crime_category = c.crime;
    rec.municipality = c.municipality;
    rec.unit = c.intake_unit;
    rec.lawyer_id = c.intake_lawyer;
    rec.arrested_at_intake = c.arrested;
    rec.closed_at = c.closed;
    rec.closure_kind = c.closure_kind;
    builder.add_case(std::move(rec));
  }
  for (const SimCase &c : sim) {
    // Events were produced week by week; stable-sort by day keeps the
    // within-day order (transfer before its re-initialization).
    std::vector<SimEvent> evs = c.events;
    std::stable_sort(evs.begin(), evs.end(),
                     [](const SimEvent &a, const SimEvent &b) {
                       return a.day < b.day;
                     });
    for (const SimEvent &e : evs)
      builder.add_event(c.case_id, e.type, e.day, e.actor, e.from, e.to);
  }
  return builder.build();
}

void generate(const SynthConfig &config,
              const std::filesystem::path &out_dir) {
  CaseStore store = generate_store(config);
  save_store_dir(store, out_dir);
}

CaseStore plant_prescription_tail(const CaseStore &store, double fraction,
                                  int min_age_days, uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw ConfigError("plant_prescription_tail: fraction outside [0,1]");
  if (store.case_count() == 0)
    throw DataError("plant_prescription_tail: empty store");

  const Date horizon = store.extraction_date();
  std::vector<size_t> open;
  for (size_t i = 0; i < store.case_count(); ++i)
    if (!store.closed_on_or_before(i, horizon))
      open.push_back(i);

  Rng rng(Rng::derive(seed, 0x7a11));
  std::vector<size_t> selected = open;
  rng.shuffle(selected);
  selected.resize(static_cast<size_t>(
      std::llround(fraction * static_cast<double>(open.size()))));

  std::vector<int> shift(store.case_count(), 0);
  for (size_t idx : selected) {
    Date last_event = store.case_at(idx).opened_at;
    for (const auto &e : store.events(idx))
      last_event = std::max(last_event, e.occurred_at);
    int needed = last_event - (horizon - min_age_days);
    shift[idx] = std::max(0, needed) + 30 + static_cast<int>(rng.below(150));
  }

  CaseStoreBuilder builder;
  for (size_t i = 0; i < store.case_count(); ++i) {
    CaseRecord rec = store.case_at(i);
    if (int d = shift[i]; d > 0) {
      rec.opened_at = rec.opened_at - d;
      if (rec.offense_at)
        rec.offense_at = *rec.offense_at - d;
      if (rec.closed_at)
        rec.closed_at = *rec.closed_at - d;
    }
    builder.add_case(std::move(rec));
  }
  for (size_t i = 0; i < store.case_count(); ++i) {
    const auto &rec = store.case_at(i);
    for (const auto &e : store.events(i))
      builder.add_event(rec.case_id, e.type, e.occurred_at - shift[i],
                        e.actor_lawyer, e.from_unit, e.to_unit);
  }
  return builder.build(true, horizon);
}

} // namespace triage
