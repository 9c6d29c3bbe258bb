// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "hcount/data_model.hpp"

using namespace hcount;

namespace {

const char* kHeader = "metro_id,year,count_total,count_sheltered,count_unsheltered,population,zri\n";

// Two metros, 2010 baseline plus six modeled years.
std::string two_metro_csv() {
  std::string s = kHeader;
  for (int y = 2010; y <= 2016; ++y) {
    const bool base = y == 2010;
    s += "alpha," + std::to_string(y) + "," + std::to_string(1000 + y - 2010) + "," + (base ? "600,400" : ",") +
         "," + std::to_string(1000000 + 1000 * (y - 2010)) + "," + std::to_string(1500 + 10 * (y - 2010)) + "\n";
    s += "beta," + std::to_string(y) + ",500," + (base ? "500,0" : ",") + ",250000,1200.5\n";
  }
  return s;
}

template <class F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("well-formed panel parses with the baseline separated") {
  const Panel p = parse_panel_csv(two_metro_csv());
  CHECK(p.n_metros() == 2);
  CHECK(p.T() == 6);
  CHECK(p.first_year() == 2010);
  CHECK(p.metros[0].metro_id == "alpha");
  CHECK(p.metros[0].count_sheltered == 600);
  CHECK(p.metros[0].count_unsheltered == 400);
  CHECK(p.counts().rows() == 2);
  CHECK(p.counts().cols() == 6);
  CHECK(p.counts()(0, 0) == 1001.0);  // 2011, baseline dropped
  CHECK(p.index_of("beta") == 1);
  CHECK(p.index_of("gamma") == -1);
}

TEST_CASE("rows may arrive in any order") {
  std::string s = kHeader;
  s += "m,2012,3,,,100,1000\nm,2010,1,1,0,100,1000\nm,2011,2,,,100,1000\n";
  const Panel p = parse_panel_csv(s);
  CHECK(p.metros[0].count == std::vector<std::int64_t>{1, 2, 3});
}

TEST_CASE("count above population is rejected naming the row") {
  std::string s = kHeader;
  s += "m,2010,5,5,0,100,1000\nm,2011,101,,,100,1000\n";
  const auto msg = error_of([&] { parse_panel_csv(s); });
  CHECK(msg.find("row 3") != std::string::npos);
  CHECK(msg.find("exceeds population") != std::string::npos);
}

TEST_CASE("gap and duplicate years are rejected") {
  std::string gap = kHeader;
  gap += "m,2010,5,5,0,100,1000\nm,2012,5,,,100,1000\n";
  CHECK(error_of([&] { parse_panel_csv(gap); }).find("gap in years") != std::string::npos);
  std::string dup = kHeader;
  dup += "m,2010,5,5,0,100,1000\nm,2011,5,,,100,1000\nm,2011,6,,,100,1000\n";
  CHECK(error_of([&] { parse_panel_csv(dup); }).find("duplicate year") != std::string::npos);
}

TEST_CASE("baseline split must add up and ZRI must be positive") {
  std::string split = kHeader;
  split += "m,2010,5,3,1,100,1000\nm,2011,5,,,100,1000\n";
  CHECK(error_of([&] { parse_panel_csv(split); }).find("must equal count_total") != std::string::npos);
  std::string missing = kHeader;
  missing += "m,2010,5,,,100,1000\nm,2011,5,,,100,1000\n";
  CHECK(error_of([&] { parse_panel_csv(missing); }).find("baseline year requires") != std::string::npos);
  std::string zri = kHeader;
  zri += "m,2010,5,5,0,100,1000\nm,2011,5,,,100,0\n";
  CHECK(error_of([&] { parse_panel_csv(zri); }).find("zri must be positive") != std::string::npos);
}

TEST_CASE("metros must share the same years") {
  std::string s = kHeader;
  s += "a,2010,5,5,0,100,1000\na,2011,5,,,100,1000\nb,2011,5,5,0,100,1000\nb,2012,5,,,100,1000\n";
  CHECK(error_of([&] { parse_panel_csv(s); }).find("year range differs") != std::string::npos);
}

TEST_CASE("schema mismatches are rejected") {
  CHECK(error_of([] { parse_panel_csv("metro,year\nm,2010\n"); }).find("header") != std::string::npos);
  std::string s = kHeader;
  s += "m,2010,5,5,0,100\n";
  CHECK(error_of([&] { parse_panel_csv(s); }).find("row 2") != std::string::npos);
  std::string bad = kHeader;
  bad += "m,2010,five,5,0,100,1000\n";
  CHECK(error_of([&] { parse_panel_csv(bad); }).find("not an integer") != std::string::npos);
}

TEST_CASE("save then load is the identity") {
  const Panel p = parse_panel_csv(two_metro_csv());
  const Panel q = parse_panel_csv(panel_to_csv(p));
  REQUIRE(q.n_metros() == p.n_metros());
  for (int i = 0; i < p.n_metros(); ++i) {
    CHECK(q.metros[i].metro_id == p.metros[i].metro_id);
    CHECK(q.metros[i].count == p.metros[i].count);
    CHECK(q.metros[i].population == p.metros[i].population);
    CHECK(q.metros[i].zri == p.metros[i].zri);
    CHECK(q.metros[i].count_sheltered == p.metros[i].count_sheltered);
  }
  CHECK(panel_to_csv(q) == panel_to_csv(p));

  const auto path = (std::filesystem::temp_directory_path() / "hcount_panel_roundtrip.csv").string();
  save_panel(p, path);
  CHECK(panel_to_csv(load_panel(path)) == panel_to_csv(p));
  std::filesystem::remove(path);
}

TEST_CASE("delta_zri examples") {
  MetroSeries s;
  s.metro_id = "m";
  s.first_year = 2010;
  s.count = {1, 1, 1};
  s.population = {10, 10, 10};
  s.zri = {1534.0, 1634.0, 1634.0};
  const Eigen::VectorXd d = delta_zri(s);
  REQUIRE(d.size() == 2);
  CHECK(d(0) == doctest::Approx(100.0 / 1534.0).epsilon(1e-15));
  CHECK(d(0) == doctest::Approx(0.0652).epsilon(1e-3));
  CHECK(d(1) == 0.0);

  s.zri = {1000.0, 900.0, 900.0};
  CHECK(delta_zri(s)(0) == doctest::Approx(-0.10).epsilon(1e-15));

  // scale invariance of relative change
  s.zri = {1234.5, 1300.25, 1299.0};
  const Eigen::VectorXd a = delta_zri(s);
  for (auto& z : s.zri) z *= 3.7;
  CHECK((delta_zri(s) - a).cwiseAbs().maxCoeff() < 1e-14);

  s.zri = {0.0, 900.0, 900.0};
  CHECK_THROWS_AS(delta_zri(s), ValidationError);
}

TEST_CASE("aggregation: single unit passes through") {
  GeoMapping map;
  map.continuum_to_metro["X-1"] = "m";
  map.county_to_metro["S:One"] = "m";
  const auto agg = aggregate_geography({{"X-1", 2010, 77}}, {{"S:One", 2010, 5000, 1420.0}}, map);
  const auto& my = agg.at("m").at(2010);
  CHECK(my.count == 77);
  CHECK(my.population == 5000);
  CHECK(my.zri == 1420.0);
}

TEST_CASE("aggregation: population-weighted ZRI with equal populations") {
  GeoMapping map;
  map.continuum_to_metro["X-1"] = "m";
  map.county_to_metro["S:A"] = "m";
  map.county_to_metro["S:B"] = "m";
  const auto agg =
      aggregate_geography({{"X-1", 2010, 10}}, {{"S:A", 2010, 300, 1000.0}, {"S:B", 2010, 300, 2000.0}}, map);
  CHECK(agg.at("m").at(2010).zri == doctest::Approx(1500.0));
  CHECK(agg.at("m").at(2010).population == 600);
}

TEST_CASE("aggregation is additive over disjoint unit sets") {
  GeoMapping map;
  for (const char* c : {"C1", "C2", "C3"}) map.continuum_to_metro[c] = "m";
  for (const char* c : {"K1", "K2", "K3"}) map.county_to_metro[c] = "m";
  const std::vector<ContinuumCount> ca{{"C1", 2010, 11}, {"C2", 2010, 22}};
  const std::vector<ContinuumCount> cb{{"C3", 2010, 33}};
  const std::vector<CountyRecord> ka{{"K1", 2010, 100, 900.0}, {"K2", 2010, 250, 1300.0}};
  const std::vector<CountyRecord> kb{{"K3", 2010, 400, 2100.0}};
  std::vector<ContinuumCount> call = ca;
  call.insert(call.end(), cb.begin(), cb.end());
  std::vector<CountyRecord> kall = ka;
  kall.insert(kall.end(), kb.begin(), kb.end());
  const auto whole = aggregate_geography(call, kall, map).at("m").at(2010);
  const auto a = aggregate_geography(ca, ka, map).at("m").at(2010);
  const auto b = aggregate_geography(cb, kb, map).at("m").at(2010);
  CHECK(whole.count == a.count + b.count);
  CHECK(whole.population == a.population + b.population);
  const double pooled = (a.zri * a.population + b.zri * b.population) / static_cast<double>(a.population + b.population);
  CHECK(whole.zri == doctest::Approx(pooled).epsilon(1e-14));
}

TEST_CASE("aggregation rejects unmapped ids and missing years") {
  GeoMapping map;
  map.continuum_to_metro["X-1"] = "m";
  map.county_to_metro["S:A"] = "m";
  CHECK(error_of([&] { aggregate_geography({{"X-9", 2010, 1}}, {{"S:A", 2010, 10, 1.0}}, map); })
            .find("X-9") != std::string::npos);
  CHECK(error_of([&] { aggregate_geography({{"X-1", 2010, 1}}, {{"S:Z", 2010, 10, 1.0}}, map); })
            .find("S:Z") != std::string::npos);
  CHECK(error_of([&] {
          aggregate_geography({{"X-1", 2010, 1}, {"X-1", 2011, 1}}, {{"S:A", 2010, 10, 1.0}}, map);
        }).find("missing county records for year 2011") != std::string::npos);
}

TEST_CASE("bundled mapping: Denver spans seven counties") {
  const GeoMapping map = load_mapping(std::string(HCOUNT_SOURCE_DIR) + "/data/metro_mapping.csv");
  std::vector<CountyRecord> counties;
  std::int64_t expected = 0;
  std::int64_t pop = 100000;
  int members = 0;
  for (const auto& [county, metro] : map.county_to_metro) {
    if (metro != "denver") continue;
    counties.push_back({county, 2010, pop, 1200.0});
    expected += pop;
    pop += 12345;
    ++members;
  }
  CHECK(members == 7);
  std::vector<ContinuumCount> cocs;
  for (const auto& [coc, metro] : map.continuum_to_metro)
    if (metro == "denver") cocs.push_back({coc, 2010, 6000});
  REQUIRE_FALSE(cocs.empty());
  const auto agg = aggregate_geography(cocs, counties, map);
  CHECK(agg.at("denver").at(2010).population == expected);
  CHECK(map.county_to_metro.size() >= 25);
}

TEST_CASE("geo file fills blank panel fields and checks the rest") {
  const std::string geo =
      "kind,unit_id,metro_id,year,population,zri,count\n"
      "continuum,X-1,m,2010,,,40\ncontinuum,X-2,m,2010,,,60\n"
      "continuum,X-1,m,2011,,,50\ncontinuum,X-2,m,2011,,,70\n"
      "county,S:A,m,2010,1000,1000,\ncounty,S:B,m,2010,3000,2000,\n"
      "county,S:A,m,2011,1000,1100,\ncounty,S:B,m,2011,3000,2100,\n";
  const auto dir = std::filesystem::temp_directory_path();
  const auto geo_path = (dir / "hcount_geo.csv").string();
  const auto panel_path = (dir / "hcount_geo_panel.csv").string();
  {
    std::ofstream(geo_path) << geo;
    std::ofstream(panel_path) << kHeader << "m,2010,,70,30,,\nm,2011,120,,,4000,\n";
  }
  const Panel p = load_panel(panel_path, geo_path);
  CHECK(p.metros[0].count == std::vector<std::int64_t>{100, 120});
  CHECK(p.metros[0].population == std::vector<std::int64_t>{4000, 4000});
  CHECK(p.metros[0].zri[0] == doctest::Approx(1750.0));
  CHECK(p.metros[0].zri[1] == doctest::Approx(1850.0));

  std::ofstream(panel_path) << kHeader << "m,2010,99,70,29,,\nm,2011,120,,,4000,\n";
  CHECK(error_of([&] { load_panel(panel_path, geo_path); }).find("disagrees") != std::string::npos);
  std::filesystem::remove(geo_path);
  std::filesystem::remove(panel_path);
}
