#pragma once

#include "triage/case_store.hpp"
#include "triage/harness.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace triage {

// Statutory prescription calculus. Periods are derived from penalty
// structures; flags are operational screening hints ("potentially
// prescribed"), never legal determinations — interruption and tolling are
// deliberately not modeled.

enum class PenaltyKind : uint8_t { fine_only, rights_only, prison };
std::string_view penalty_kind_name(PenaltyKind k);
std::optional<PenaltyKind> parse_penalty_kind(std::string_view s);

struct CrimeSubtype {
  std::string category;
  std::string subtype_id;
  PenaltyKind penalty_kind = PenaltyKind::fine_only;
  std::optional<double> prison_min_years, prison_max_years;
  bool imprescriptible = false;
};

// Prescription period in years; nullopt for imprescriptible subtypes.
// Fine-only offenses prescribe in 1 year, rights-restriction offenses in 2,
// prison offenses at the arithmetic mean of the term bounds with a 3-year
// statutory floor.
std::optional<double> subtype_period(const CrimeSubtype &s);

struct PrescriptionThresholds {
  std::string category;
  double t_min_years = 0.0, t_mean_years = 0.0, t_max_years = 0.0;
  int subtype_count = 0;
  bool all_imprescriptible = false;
};

// Min/mean/max of the finite subtype periods; imprescriptible subtypes are
// excluded. Throws DataError on an empty subtype list.
PrescriptionThresholds
category_thresholds(const std::vector<CrimeSubtype> &subtypes);

struct PenaltyTable {
  std::map<std::string, std::vector<CrimeSubtype>> subtypes;
  std::map<std::string, PrescriptionThresholds> thresholds;
  std::set<std::string> unlegislated; // declared without penalty data

  bool covers(const std::string &category) const {
    return thresholds.count(category) > 0;
  }
};

// CSV columns: category, subtype_id, penalty_kind, prison_min_years,
// prison_max_years, imprescriptible. penalty_kind "unlegislated" declares a
// category without penalty data.
PenaltyTable load_penalty_table(const std::filesystem::path &path);

// Store categories with neither thresholds nor an unlegislated declaration.
std::vector<std::string> missing_categories(const CaseStore &store,
                                            const PenaltyTable &table);

enum class PrescriptionRule : uint8_t { t_min, t_mean, t_max };
std::string_view rule_name(PrescriptionRule r);
std::optional<PrescriptionRule> parse_rule(std::string_view s);

struct FlaggedCase {
  size_t case_index = 0;
  double score = 0.0;
  int rank = 0; // 1-based position in the full ranking
  int age_days = 0;
  double threshold_years = 0.0;
};

struct PrescriptionScreen {
  Date as_of;
  PrescriptionRule rule = PrescriptionRule::t_mean;
  int k_bottom = 0;
  int tail_size = 0; // cases actually examined (may be < k_bottom)
  std::vector<FlaggedCase> flagged;   // ascending score
  std::vector<std::string> warnings;  // categories without thresholds
};

// Screens the k_bottom lowest-scored cases of the ranking: a case is
// flagged when its age since opening reaches the category threshold
// (years * 365 days, inclusive). Imprescriptible categories are never
// flagged; categories without thresholds produce a warning.
PrescriptionScreen flag_prescribed(const CaseStore &store,
                                   const RankedList &ranked,
                                   const PenaltyTable &table,
                                   PrescriptionRule rule, int k_bottom,
                                   Date as_of);

} // namespace triage
