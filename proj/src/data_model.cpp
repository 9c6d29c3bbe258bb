// Apache License, Version 2.0, refer to LICENSE.txt

#include "hcount/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"

namespace hcount {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

void MetroSeries::validate() const {
  const auto n = count.size();
  if (n < 2)
    throw ValidationError("metro " + metro_id + ": need a baseline year and at least one modeled year");
  if (population.size() != n || zri.size() != n)
    throw ValidationError("metro " + metro_id + ": series lengths differ");
  for (std::size_t t = 0; t < n; ++t) {
    const int year = first_year + static_cast<int>(t);
    if (count[t] < 0 || population[t] < 0)
      throw ValidationError("metro " + metro_id + " year " + std::to_string(year) + ": negative count or population");
    if (count[t] > population[t])
      throw ValidationError("metro " + metro_id + " year " + std::to_string(year) + ": count exceeds population");
    if (!(zri[t] > 0.0) || !std::isfinite(zri[t]))
      throw ValidationError("metro " + metro_id + " year " + std::to_string(year) + ": ZRI must be positive");
  }
  if (count_sheltered < 0 || count_unsheltered < 0 || count_sheltered + count_unsheltered != count[0])
    throw ValidationError("metro " + metro_id + ": sheltered + unsheltered must equal the baseline count");
}

int Panel::index_of(const std::string& metro_id) const {
  for (int i = 0; i < n_metros(); ++i)
    if (metros[i].metro_id == metro_id) return i;
  return -1;
}

void Panel::validate() const {
  if (metros.empty()) throw ValidationError("panel has no metros");
  std::set<std::string> seen;
  for (const auto& m : metros) {
    m.validate();
    if (!seen.insert(m.metro_id).second) throw ValidationError("duplicate metro " + m.metro_id);
    if (m.first_year != metros.front().first_year || m.count.size() != metros.front().count.size())
      throw ValidationError("metro " + m.metro_id + ": year range differs from metro " + metros.front().metro_id);
  }
}

Eigen::MatrixXd Panel::counts() const {
  Eigen::MatrixXd out(n_metros(), T());
  for (int i = 0; i < n_metros(); ++i)
    for (int t = 1; t <= T(); ++t) out(i, t - 1) = static_cast<double>(metros[i].count[t]);
  return out;
}

Eigen::MatrixXd Panel::populations() const {
  Eigen::MatrixXd out(n_metros(), T());
  for (int i = 0; i < n_metros(); ++i)
    for (int t = 1; t <= T(); ++t) out(i, t - 1) = static_cast<double>(metros[i].population[t]);
  return out;
}

Eigen::MatrixXd Panel::delta_zri() const {
  Eigen::MatrixXd out(n_metros(), T());
  for (int i = 0; i < n_metros(); ++i) out.row(i) = hcount::delta_zri(metros[i]).transpose();
  return out;
}

Eigen::VectorXd delta_zri(const MetroSeries& series) {
  const int T = series.modeled_years();
  Eigen::VectorXd out(std::max(T, 0));
  for (int t = 1; t <= T; ++t) {
    const double prev = series.zri[t - 1];
    if (!(prev > 0.0))
      throw ValidationError("metro " + series.metro_id + " year " +
                            std::to_string(series.calendar_year(t - 1)) + ": nonpositive ZRI");
    out(t - 1) = (series.zri[t] - prev) / prev;
  }
  return out;
}

AggregatedPanel aggregate_geography(const std::vector<ContinuumCount>& continuum_counts,
                                    const std::vector<CountyRecord>& county_records,
                                    const GeoMapping& mapping) {
  struct Acc {
    std::int64_t count = 0;
    std::int64_t population = 0;
    double weighted_zri = 0.0;
    bool has_continuum = false;
    bool has_county = false;
  };
  std::map<std::string, std::map<int, Acc>> acc;

  for (const auto& c : continuum_counts) {
    const auto it = mapping.continuum_to_metro.find(c.unit_id);
    if (it == mapping.continuum_to_metro.end())
      throw ValidationError("unmapped continuum id: " + c.unit_id);
    auto& a = acc[it->second][c.year];
    a.count += c.count;
    a.has_continuum = true;
  }
  for (const auto& c : county_records) {
    const auto it = mapping.county_to_metro.find(c.unit_id);
    if (it == mapping.county_to_metro.end())
      throw ValidationError("unmapped county id: " + c.unit_id);
    auto& a = acc[it->second][c.year];
    a.population += c.population;
    a.weighted_zri += static_cast<double>(c.population) * c.zri;
    a.has_county = true;
  }

  AggregatedPanel out;
  for (const auto& [metro, years] : acc) {
    for (const auto& [year, a] : years) {
      if (!a.has_continuum)
        throw ValidationError("metro " + metro + ": missing continuum counts for year " + std::to_string(year));
      if (!a.has_county)
        throw ValidationError("metro " + metro + ": missing county records for year " + std::to_string(year));
      if (a.population <= 0)
        throw ValidationError("metro " + metro + ": zero county population in year " + std::to_string(year));
      out[metro][year] = {a.count, a.population, a.weighted_zri / static_cast<double>(a.population)};
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Panel CSV

namespace {

const std::vector<std::string> kPanelHeader = {"metro_id", "year", "count_total", "count_sheltered",
                                               "count_unsheltered", "population", "zri"};

struct PanelRow {
  int line;
  int year;
  std::optional<std::int64_t> count, sheltered, unsheltered, population;
  std::optional<double> zri;
};

template <typename F>
auto optional_field(const std::string& s, F&& parse) -> std::optional<decltype(parse(s))> {
  if (s.empty()) return std::nullopt;
  return parse(s);
}

Panel build_panel(const std::map<std::string, std::vector<PanelRow>>& by_metro,
                  const std::vector<std::string>& order, const AggregatedPanel* geo) {
  Panel panel;
  for (const auto& id : order) {
    auto rows = by_metro.at(id);
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.year < b.year; });
    MetroSeries s;
    s.metro_id = id;
    s.first_year = rows.front().year;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = rows[k];
      if (k > 0 && r.year == rows[k - 1].year)
        throw ValidationError("row " + std::to_string(r.line) + ": duplicate year " + std::to_string(r.year) +
                              " for metro " + id);
      if (r.year != s.first_year + static_cast<int>(k))
        throw ValidationError("row " + std::to_string(r.line) + ": gap in years for metro " + id + " before " +
                              std::to_string(r.year));
      auto count = r.count;
      auto pop = r.population;
      auto zri = r.zri;
      if (geo) {
        const auto mit = geo->find(id);
        const MetroYear* agg = nullptr;
        if (mit != geo->end()) {
          const auto yit = mit->second.find(r.year);
          if (yit != mit->second.end()) agg = &yit->second;
        }
        if (!agg)
          throw ValidationError("row " + std::to_string(r.line) + ": geo file has no data for metro " + id +
                                " year " + std::to_string(r.year));
        auto reconcile = [&](auto& field, auto value, const char* name) {
          if (!field) {
            field = value;
          } else if (std::abs(static_cast<double>(*field) - static_cast<double>(value)) >
                     1e-9 * std::max(1.0, std::abs(static_cast<double>(value)))) {
            throw ValidationError("row " + std::to_string(r.line) + ": " + name +
                                  " disagrees with geo aggregation");
          }
        };
        reconcile(count, agg->count, "count_total");
        reconcile(pop, agg->population, "population");
        reconcile(zri, agg->zri, "zri");
      }
      if (!count || !pop || !zri)
        throw ValidationError("row " + std::to_string(r.line) + ": count_total, population and zri are required");
      if (*count > *pop)
        throw ValidationError("row " + std::to_string(r.line) + ": count_total exceeds population");
      if (*count < 0 || *pop < 0)
        throw ValidationError("row " + std::to_string(r.line) + ": negative count or population");
      if (!(*zri > 0.0))
        throw ValidationError("row " + std::to_string(r.line) + ": zri must be positive");
      if (k == 0) {
        if (!r.sheltered || !r.unsheltered)
          throw ValidationError("row " + std::to_string(r.line) +
                                ": baseline year requires count_sheltered and count_unsheltered");
        if (*r.sheltered + *r.unsheltered != *count)
          throw ValidationError("row " + std::to_string(r.line) +
                                ": count_sheltered + count_unsheltered must equal count_total");
        s.count_sheltered = *r.sheltered;
        s.count_unsheltered = *r.unsheltered;
      }
      s.count.push_back(*count);
      s.population.push_back(*pop);
      s.zri.push_back(*zri);
    }
    panel.metros.push_back(std::move(s));
  }
  panel.validate();
  return panel;
}

Panel parse_panel_impl(const std::string& text, const AggregatedPanel* geo) {
  std::vector<std::string> header;
  const auto rows = csv::parse(text, header);
  csv::expect_header(header, kPanelHeader, "panel CSV");
  std::map<std::string, std::vector<PanelRow>> by_metro;
  std::vector<std::string> order;
  for (const auto& row : rows) {
    const auto& f = row.fields;
    if (f.size() != kPanelHeader.size())
      throw ValidationError("row " + std::to_string(row.line) + ": expected " +
                            std::to_string(kPanelHeader.size()) + " fields");
    const int line = row.line;
    auto as_int = [line](const char* name) {
      return [line, name](const std::string& s) { return csv::to_int(s, line, name); };
    };
    PanelRow pr{line,
                static_cast<int>(csv::to_int(f[1], line, "year")),
                optional_field(f[2], as_int("count_total")),
                optional_field(f[3], as_int("count_sheltered")),
                optional_field(f[4], as_int("count_unsheltered")),
                optional_field(f[5], as_int("population")),
                optional_field(f[6], [line](const std::string& s) { return csv::to_double(s, line, "zri"); })};
    if (f[0].empty()) throw ValidationError("row " + std::to_string(line) + ": empty metro_id");
    if (!by_metro.count(f[0])) order.push_back(f[0]);
    by_metro[f[0]].push_back(pr);
  }
  if (order.empty()) throw ValidationError("panel CSV has no data rows");
  return build_panel(by_metro, order, geo);
}

}  // namespace

Panel parse_panel_csv(const std::string& text) { return parse_panel_impl(text, nullptr); }

Panel load_panel(const std::string& panel_path, const std::optional<std::string>& geo_path) {
  const std::string text = csv::read_file(panel_path);
  if (!geo_path) return parse_panel_impl(text, nullptr);
  const GeoData geo = load_geo(*geo_path);
  const AggregatedPanel agg = aggregate_geography(geo.continuums, geo.counties, geo.mapping);
  return parse_panel_impl(text, &agg);
}

std::string panel_to_csv(const Panel& panel) {
  std::ostringstream out;
  for (std::size_t k = 0; k < kPanelHeader.size(); ++k) out << (k ? "," : "") << kPanelHeader[k];
  out << '\n';
  for (const auto& m : panel.metros) {
    for (std::size_t t = 0; t < m.count.size(); ++t) {
      out << m.metro_id << ',' << m.calendar_year(static_cast<int>(t)) << ',' << m.count[t] << ',';
      if (t == 0) out << m.count_sheltered << ',' << m.count_unsheltered;
      else out << ',';
      out << ',' << m.population[t] << ',' << shortest(m.zri[t]) << '\n';
    }
  }
  return out.str();
}

void save_panel(const Panel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << panel_to_csv(panel);
}

// ---------------------------------------------------------------------------
// Geo CSV

namespace {

const std::vector<std::string> kGeoHeader = {"kind", "unit_id", "metro_id", "year", "population", "zri", "count"};

void assign_unit(std::map<std::string, std::string>& m, const std::string& unit, const std::string& metro,
                 int line) {
  const auto [it, inserted] = m.emplace(unit, metro);
  if (!inserted && it->second != metro)
    throw ValidationError("row " + std::to_string(line) + ": unit " + unit + " maps to both " + it->second +
                          " and " + metro);
}

}  // namespace

GeoData parse_geo_csv(const std::string& text) {
  std::vector<std::string> header;
  const auto rows = csv::parse(text, header);
  csv::expect_header(header, kGeoHeader, "geo CSV");
  GeoData geo;
  for (const auto& row : rows) {
    const auto& f = row.fields;
    const int line = row.line;
    if (f.size() != kGeoHeader.size())
      throw ValidationError("row " + std::to_string(line) + ": expected " + std::to_string(kGeoHeader.size()) +
                            " fields");
    const int year = static_cast<int>(csv::to_int(f[3], line, "year"));
    if (f[0] == "continuum") {
      if (f[6].empty()) throw ValidationError("row " + std::to_string(line) + ": continuum row needs count");
      assign_unit(geo.mapping.continuum_to_metro, f[1], f[2], line);
      geo.continuums.push_back({f[1], year, csv::to_int(f[6], line, "count")});
    } else if (f[0] == "county") {
      if (f[4].empty() || f[5].empty())
        throw ValidationError("row " + std::to_string(line) + ": county row needs population and zri");
      assign_unit(geo.mapping.county_to_metro, f[1], f[2], line);
      geo.counties.push_back({f[1], year, csv::to_int(f[4], line, "population"), csv::to_double(f[5], line, "zri")});
    } else {
      throw ValidationError("row " + std::to_string(line) + ": kind must be continuum or county, got '" + f[0] + "'");
    }
  }
  return geo;
}

GeoData load_geo(const std::string& geo_path) { return parse_geo_csv(csv::read_file(geo_path)); }

GeoMapping load_mapping(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = csv::parse(csv::read_file(path), header);
  csv::expect_header(header, {"kind", "unit_id", "metro_id"}, "mapping CSV");
  GeoMapping m;
  for (const auto& row : rows) {
    const auto& f = row.fields;
    if (f.size() != 3) throw ValidationError("row " + std::to_string(row.line) + ": expected 3 fields");
    if (f[0] == "continuum") assign_unit(m.continuum_to_metro, f[1], f[2], row.line);
    else if (f[0] == "county") assign_unit(m.county_to_metro, f[1], f[2], row.line);
    else throw ValidationError("row " + std::to_string(row.line) + ": unknown kind '" + f[0] + "'");
  }
  return m;
}

}  // namespace hcount
