// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef HCOUNT_DATA_MODEL_HPP
#define HCOUNT_DATA_MODEL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcount {

/// Input data failed validation. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One metro's observed panel. Index 0 of every series is the baseline year;
/// indices 1..T are the modeled years.
struct MetroSeries {
  std::string metro_id;
  int first_year = 0;  // calendar year of the baseline
  std::vector<std::int64_t> count;       // C
  std::vector<std::int64_t> population;  // N
  std::vector<double> zri;
  std::int64_t count_sheltered = 0;  // baseline only
  std::int64_t count_unsheltered = 0;

  int modeled_years() const { return static_cast<int>(count.size()) - 1; }
  int calendar_year(int t) const { return first_year + t; }

  /// Throws ValidationError describing the first broken invariant.
  void validate() const;
};

struct Panel {
  std::vector<MetroSeries> metros;

  int n_metros() const { return static_cast<int>(metros.size()); }
  int T() const { return metros.empty() ? 0 : metros.front().modeled_years(); }
  int first_year() const { return metros.empty() ? 0 : metros.front().first_year; }
  int index_of(const std::string& metro_id) const;

  void validate() const;

  /// metros x T matrices over the modeled years (baseline dropped).
  Eigen::MatrixXd counts() const;
  Eigen::MatrixXd populations() const;
  /// metros x T matrix of year-over-year relative ZRI change.
  Eigen::MatrixXd delta_zri() const;
};

struct GeoMapping {
  std::map<std::string, std::string> continuum_to_metro;
  std::map<std::string, std::string> county_to_metro;
};

/// Continuum-level homeless counts keyed by (unit_id, year).
struct ContinuumCount {
  std::string unit_id;
  int year = 0;
  std::int64_t count = 0;
};

struct CountyRecord {
  std::string unit_id;
  int year = 0;
  std::int64_t population = 0;
  double zri = 0.0;
};

/// Rows of a geo CSV file, plus the unit -> metro mapping they imply.
struct GeoData {
  std::vector<ContinuumCount> continuums;
  std::vector<CountyRecord> counties;
  GeoMapping mapping;
};

/// Aggregated per-metro, per-year totals produced from unit-level records.
struct MetroYear {
  std::int64_t count = 0;
  std::int64_t population = 0;
  double zri = 0.0;
};
using AggregatedPanel = std::map<std::string, std::map<int, MetroYear>>;

/// Sums continuum counts and county populations into metros and forms a
/// population-weighted ZRI, with weights recomputed every year.
AggregatedPanel aggregate_geography(const std::vector<ContinuumCount>& continuum_counts,
                                    const std::vector<CountyRecord>& county_records,
                                    const GeoMapping& mapping);

/// (ZRI_t - ZRI_{t-1}) / ZRI_{t-1} for t = 1..T.
Eigen::VectorXd delta_zri(const MetroSeries& series);

Panel load_panel(const std::string& panel_path,
                 const std::optional<std::string>& geo_path = std::nullopt);
Panel parse_panel_csv(const std::string& text);
void save_panel(const Panel& panel, const std::string& path);
std::string panel_to_csv(const Panel& panel);

GeoData load_geo(const std::string& geo_path);
GeoData parse_geo_csv(const std::string& text);
/// kind,unit_id,metro_id rows (e.g. the bundled metro table).
GeoMapping load_mapping(const std::string& path);

}  // namespace hcount

#endif  // HCOUNT_DATA_MODEL_HPP
