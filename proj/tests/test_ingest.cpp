#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>

#include "mcod/ingest.hpp"
#include "mcod/records.hpp"

using namespace mcod;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  std::string path = std::string("/tmp/mcod_test_") + name;
  std::ofstream out(path);
  out << content;
  return path;
}

ObservationRecord base_obs() {
  ObservationRecord obs;
  obs.observation_id = "obs1";
  obs.country = "X";
  obs.year_start = obs.year_end = 2010;
  obs.missing.fill(false);
  return obs;
}

}  // namespace

TEST_CASE("cause map loads and validates") {
  auto path = write_temp("map.csv",
                         "icd10,main,sub\n"
                         "O72.1,HEM,HEM_post\n"
                         "A34,SEP,SEP_unknown_timing\n"
                         "O00,ABO,\n");
  CauseMap map = load_cause_map(path);
  REQUIRE(map.size() == 3);
  const auto* e = map.find("O72.1");
  REQUIRE(e != nullptr);
  CHECK(e->main == MainCause::HEM);
  CHECK(*e->sub == SubCause::HEM_post);
  const auto* a34 = map.find("A34");
  REQUIRE(a34 != nullptr);
  CHECK(*a34->sub == SubCause::SEP_unknown_timing);
  CHECK(is_sentinel(*a34->sub));
  CHECK_FALSE(map.find("O00")->sub.has_value());
}

TEST_CASE("cause map rejects duplicates and bad labels") {
  auto dup = write_temp("map_dup.csv",
                        "icd10,main,sub\nO72.1,HEM,HEM_post\nO72.1,HEM,\n");
  CHECK_THROWS_MATCHES(load_cause_map(dup), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == "DuplicateCode";
                       }));
  auto bad = write_temp("map_bad.csv", "icd10,main,sub\nO72.1,NOPE,\n");
  CHECK_THROWS_MATCHES(load_cause_map(bad), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == "UnknownCategoryLabel";
                       }));
  // sub belonging to a different main cause
  auto wrong = write_temp("map_wrong.csv", "icd10,main,sub\nO72.1,HEM,SEP_post\n");
  CHECK_THROWS_AS(load_cause_map(wrong), Error);
}

TEST_CASE("shipped cause map covers the documented table") {
  CauseMap map = load_cause_map("data/causemap.csv");
  CHECK(map.size() == 394);
  CHECK(map.find("O98.7") == nullptr);  // excluded HIV code is not mapped
  CHECK(map.find("Rupture NOS")->sub == SubCause::HEM_intra);
  CHECK(map.find("Hemorrhage NOS")->sub == SubCause::HEM_unknown_timing);
  CHECK(map.find("A34")->sub == SubCause::SEP_unknown_timing);
  CHECK(map.find("O15")->main == MainCause::HYP);
  CHECK(map.find("O75.3")->sub == SubCause::SEP_intra);
  CHECK(map.find("C58")->sub == SubCause::DIR_oth);
}

TEST_CASE("classify_counts buckets and excludes") {
  auto path = write_temp("map2.csv",
                         "icd10,main,sub\n"
                         "O00,ABO,\n"
                         "O15,HYP,\n"
                         "A34,SEP,SEP_unknown_timing\n");
  CauseMap map = load_cause_map(path);

  SECTION("documented example") {
    auto cc = classify_counts({{"O00", 3}, {"O15", 2}}, map);
    CHECK(cc.main[static_cast<int>(MainCause::ABO)] == 3);
    CHECK(cc.main[static_cast<int>(MainCause::HYP)] == 2);
    CHECK(cc.excluded.empty());
  }
  SECTION("O98.7 is excluded as the HIV code") {
    auto cc = classify_counts({{"O98.7", 5}}, map);
    double main_total = 0;
    for (double m : cc.main) main_total += m;
    CHECK(main_total == 0);
    REQUIRE(cc.excluded.size() == 1);
    CHECK(cc.excluded[0].reason == "HIV code");
    CHECK(cc.excluded[0].count == 5);
  }
  SECTION("empty input") {
    auto cc = classify_counts({}, map);
    for (double m : cc.main) CHECK(m == 0);
    CHECK(cc.excluded.empty());
  }
  SECTION("sentinel-mapped deaths count toward main only") {
    auto cc = classify_counts({{"A34", 4}}, map);
    CHECK(cc.main[static_cast<int>(MainCause::SEP)] == 4);
    for (double s : cc.sub) CHECK(s == 0);
  }
  SECTION("conservation under random inputs") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> count(0, 20);
    const char* codes[4] = {"O00", "O15", "O98.7", "ZZZ"};
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::pair<std::string, double>> raw;
      double total = 0;
      for (int i = 0; i < 8; ++i) {
        double c = count(rng);
        raw.push_back({codes[rng() % 4], c});
        total += c;
      }
      auto cc = classify_counts(raw, map);
      double acc = 0;
      for (double m : cc.main) acc += m;
      for (const auto& ex : cc.excluded) acc += ex.count;
      CHECK_THAT(acc, Catch::Matchers::WithinRel(total, 1e-12));
    }
  }
}

TEST_CASE("zero-vs-missing resolution") {
  const int abo = static_cast<int>(MainCause::ABO);
  EnvelopeEstimate env;
  env.country = "X";
  env.year = 2010;
  env.d_ring = 5;
  env.d_ring_hiv = 0;
  env.wpp_female_deaths = 100;

  ObservationRecord obs = base_obs();
  obs.counts[abo] = 0;
  ObservationRecord prior = base_obs();
  prior.observation_id = "obs0";
  prior.year_start = prior.year_end = 2009;
  prior.counts[abo] = 2;

  SECTION("true zero kept: type 1, history, small envelope") {
    auto r = resolve_zero_vs_missing(obs, {prior}, env, 1);
    CHECK_FALSE(r.missing[abo]);
    CHECK(r.counts[abo] == 0);
  }
  SECTION("type 4 always marks missing") {
    auto r = resolve_zero_vs_missing(obs, {prior}, env, 4);
    CHECK(r.missing[abo]);
  }
  SECTION("large envelope marks missing") {
    env.d_ring = 50;
    auto r = resolve_zero_vs_missing(obs, {prior}, env, 1);
    CHECK(r.missing[abo]);
  }
  SECTION("threshold is HIV-inclusive") {
    env.d_ring = 5;
    env.d_ring_hiv = 3;  // total 8 >= 7
    auto r = resolve_zero_vs_missing(obs, {prior}, env, 1);
    CHECK(r.missing[abo]);
  }
  SECTION("no history marks missing") {
    auto r = resolve_zero_vs_missing(obs, {}, env, 2);
    CHECK(r.missing[abo]);
  }
  SECTION("idempotence") {
    auto once = resolve_zero_vs_missing(obs, {prior}, env, 4);
    auto twice = resolve_zero_vs_missing(once, {prior}, env, 4);
    CHECK(once.missing == twice.missing);
    CHECK(once.counts == twice.counts);
  }
  SECTION("nonzero counts untouched") {
    obs.counts[abo] = 3;
    auto r = resolve_zero_vs_missing(obs, {}, env, 4);
    CHECK_FALSE(r.missing[abo]);
    CHECK(r.counts[abo] == 3);
  }
}

TEST_CASE("HIV contamination adjustment") {
  const int ind = static_cast<int>(MainCause::IND);
  EnvelopeEstimate env;
  env.d_ring = 90;
  env.d_ring_hiv = 10;
  env.wpp_female_deaths = 1000;

  ObservationRecord obs = base_obs();
  obs.counts[ind] = 10;
  obs.counts[static_cast<int>(MainCause::HEM)] = 40;  // d_i = 50

  SECTION("flag false is a no-op") {
    auto r = adjust_hiv_contamination(obs, env);
    CHECK(r.counts[ind] == 10);
  }
  SECTION("documented worked example: IND = 10 - 10*(50/100) = 5") {
    obs.reports_group7_or_o98 = true;
    auto r = adjust_hiv_contamination(obs, env);
    CHECK_THAT(r.counts[ind], Catch::Matchers::WithinAbs(5.0, 1e-12));
  }
  SECTION("floored at zero") {
    obs.reports_group7_or_o98 = true;
    obs.counts[ind] = 2;
    obs.counts[static_cast<int>(MainCause::HEM)] = 98;  // subtract 10*(100/100)
    auto r = adjust_hiv_contamination(obs, env);
    CHECK(r.counts[ind] == 0);
  }
  SECTION("never alters non-IND categories") {
    obs.reports_group7_or_o98 = true;
    auto r = adjust_hiv_contamination(obs, env);
    for (int j = 0; j < kNumMainCauses; ++j)
      if (j != ind) CHECK(r.counts[j] == obs.counts[j]);
  }
}

TEST_CASE("multi-year scaling") {
  ObservationRecord obs = base_obs();
  obs.year_end = 2012;  // span 3
  obs.counts[0] = 30;
  obs.counts[2] = 30;  // d_i = 60 > 15

  SECTION("documented example: 60 deaths over 3 years scale to 20") {
    auto r = scale_multiyear(obs);
    CHECK_THAT(r.total(), Catch::Matchers::WithinAbs(20.0, 1e-12));
    CHECK(r.multiyear_scaled);
  }
  SECTION("boundary: d_i = 5n is not scaled") {
    obs.counts[0] = 7;
    obs.counts[2] = 8;  // d_i = 15 = 5*3
    auto r = scale_multiyear(obs);
    CHECK(r.total() == 15);
    CHECK_FALSE(r.multiyear_scaled);
  }
  SECTION("single year is never scaled") {
    obs.year_end = 2010;
    auto r = scale_multiyear(obs);
    CHECK(r.total() == 60);
  }
  SECTION("idempotence") {
    auto once = scale_multiyear(obs);
    auto twice = scale_multiyear(once);
    CHECK(once.counts == twice.counts);
  }
  SECTION("proportions preserved exactly") {
    auto r = scale_multiyear(obs);
    CHECK(r.counts[0] / r.counts[2] == obs.counts[0] / obs.counts[2]);
  }
  SECTION("sub counts and reported HIV deaths scale too") {
    obs.sub_counts[0] = 9;
    obs.sub_missing[0] = false;
    obs.hiv_deaths_reported = 6;
    auto r = scale_multiyear(obs);
    CHECK_THAT(r.sub_counts[0], Catch::Matchers::WithinAbs(3.0, 1e-12));
    CHECK_THAT(*r.hiv_deaths_reported, Catch::Matchers::WithinAbs(2.0, 1e-12));
  }
}

TEST_CASE("observations csv round trip") {
  ObservationRecord obs = base_obs();
  obs.counts[0] = 3.5;
  obs.missing[4] = true;
  obs.sub_counts[1] = 2;
  obs.sub_missing[1] = false;
  obs.ill_defined_prop = 0.05;
  obs.hiv_deaths_reported = 1.25;
  obs.type_override = 2;

  const std::string path = "/tmp/mcod_test_roundtrip.csv";
  write_observations_csv(path, {obs}, "test");
  auto back = read_observations_csv(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].observation_id == obs.observation_id);
  CHECK(back[0].counts == obs.counts);
  CHECK(back[0].missing == obs.missing);
  CHECK(back[0].sub_counts == obs.sub_counts);
  CHECK(back[0].sub_missing == obs.sub_missing);
  CHECK(back[0].ill_defined_prop == obs.ill_defined_prop);
  CHECK(*back[0].hiv_deaths_reported == 1.25);
  CHECK(*back[0].type_override == 2);
}

TEST_CASE("schema violations are rejected") {
  auto missing_col = write_temp("badobs.csv", "observation_id,country\nx,y\n");
  CHECK_THROWS_MATCHES(read_observations_csv(missing_col), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == "BadSchema";
                       }));
  auto env_missing = write_temp("badenv.csv", "country,year\nX,2010\n");
  CHECK_THROWS_AS(read_envelopes_csv(env_missing), Error);
}
