#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "mzmwit/io.hpp"

using namespace mzmwit;

TEST(Json, ComplexForms) {
  EXPECT_EQ(complex_from_json(json(1.5)), Complex(1.5, 0.0));
  EXPECT_EQ(complex_from_json(json::array({0.25, -2.0})), Complex(0.25, -2.0));
  EXPECT_THROW(complex_from_json(json("x")), ValidationError);
  EXPECT_THROW(complex_from_json(json::array({1.0})), ValidationError);
}

TEST(Json, Fmt17RoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng);
    EXPECT_EQ(std::stod(fmt17(x)), x);
  }
}

TEST(Witness, ExplicitAndCanonicalForms) {
  const WitnessParams a = witness_from_json(json::parse(R"({"a":{"14":-1,"36":-1,"52":-1}})"));
  const WitnessParams b = witness_from_json(json::parse(R"({"m":1.0,"theta_deg":180.0,"a52":-1.0})"));
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == WitnessParams::canonical_odd());
  EXPECT_TRUE(witness_from_json(witness_to_json(a)) == a);
}

TEST(Witness, BadDocuments) {
  EXPECT_THROW(witness_from_json(json::parse(R"({"a":{"13":1}})")), ValidationError);
  EXPECT_THROW(witness_from_json(json::parse(R"({"a":{"1x":1}})")), ValidationError);
  EXPECT_THROW(witness_from_json(json::parse(R"({"a":{"14":"one"}})")), ValidationError);
  EXPECT_THROW(witness_from_json(json::parse(R"({"m":1})")), ValidationError);
  EXPECT_THROW(witness_from_json(json::parse(R"({})")), ValidationError);
}

TEST(Witness, Presets) {
  EXPECT_TRUE(resolve_witness("canonical-odd") == WitnessParams::canonical_odd());
  EXPECT_TRUE(resolve_witness("canonical-even") == WitnessParams::canonical_even());
  EXPECT_THROW(resolve_witness("/nonexistent/witness.json"), ValidationError);
}

TEST(Couplings, RoundTrip) {
  const TunnelCouplings c = couplings_from_json(json::parse(R"({"t":{"1":[1,0],"2":[0,2],"6":0.5}})"));
  EXPECT_EQ(c.at(2), Complex(0, 2));
  EXPECT_EQ(c.at(6), Complex(0.5, 0));
  EXPECT_EQ(c.at(4), Complex(0));
  EXPECT_EQ(couplings_from_json(couplings_to_json(c)).t, c.t);
  EXPECT_THROW(couplings_from_json(json::parse(R"({"t":{"7":1}})")), ValidationError);
  EXPECT_THROW(couplings_from_json(json::parse(R"({"t":{"a":1}})")), ValidationError);
  EXPECT_THROW(couplings_from_json(json::parse(R"({"x":{}})")), ValidationError);
}

TEST(States, MzmRoundTrip) {
  const json j = json::parse(R"({"pairing":[[1,5],[3,6],[2,4]],"parity":"odd","coeffs":[0.6,0,0.8,0]})");
  const PreparedState s = state_from_json(j);
  ASSERT_TRUE(std::holds_alternative<MzmState>(s));
  const auto& m = std::get<MzmState>(s);
  EXPECT_EQ(m.parity, Parity::Odd);
  EXPECT_EQ(m.coeffs[2], Complex(0.8));
  EXPECT_EQ(state_to_json(s), j);
}

TEST(States, MzmComplexCoefficients) {
  const json j = json::parse(R"({"pairing":[[1,5],[3,6],[2,4]],"parity":"even","coeffs":[[0,0.6],0,0.8,0]})");
  const auto m = mzm_from_json(j);
  EXPECT_FALSE(m.is_real());
  EXPECT_EQ(mzm_to_json(m), j);
}

TEST(States, MzmInvalid) {
  EXPECT_THROW(mzm_from_json(json::parse(R"({"pairing":[[1,5],[3,6],[2,4]],"parity":"odd","coeffs":[1,1,0,0]})")),
               ValidationError);
  EXPECT_THROW(mzm_from_json(json::parse(R"({"pairing":[[1,5],[3,6],[2,4]],"parity":"odd","coeffs":[1,0]})")),
               ValidationError);
  EXPECT_THROW(mzm_from_json(json::parse(R"({"pairing":[[1,5],[3,6],[2,4]],"parity":"up","coeffs":[1,0,0,0]})")),
               ValidationError);
  EXPECT_THROW(mzm_from_json(json::parse(R"({"pairing":[[1,5,3]],"parity":"odd","coeffs":[1]})")),
               ValidationError);
}

TEST(States, AbsRoundTrip) {
  const json j = json::parse(
      R"({"sites":[{"u":1,"v":0,"occ":0},{"u":0.6,"v":0.8,"occ":0.5,"coh":[0.1,0.2]},{},{},{},{"occ":1}]})");
  const PreparedState s = state_from_json(j);
  ASSERT_TRUE(std::holds_alternative<AbsState>(s));
  const auto& a = std::get<AbsState>(s);
  EXPECT_EQ(a.sites.size(), 6u);
  EXPECT_EQ(a.sites[1].coherence, Complex(0.1, 0.2));
  EXPECT_EQ(a.sites[5].occupation, 1.0);
  const auto back = abs_from_json(abs_to_json(a));
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(back.sites[k].u, a.sites[k].u);
    EXPECT_EQ(back.sites[k].coherence, a.sites[k].coherence);
  }
  EXPECT_THROW(abs_from_json(json::parse(R"({"sites":[{"u":2}]})")), ValidationError);
}

TEST(States, HybridRoundTrip) {
  const json j = json::parse(R"({"mzm":{"pairing":[[1,4],[2,3]],"parity":"odd","coeffs":[1,0]},
                                 "abs":{"sites":[{},{}]},"n_sites":6})");
  const PreparedState s = state_from_json(j);
  ASSERT_TRUE(std::holds_alternative<HybridState>(s));
  const auto& h = std::get<HybridState>(s);
  EXPECT_EQ(h.abs_sites.size(), 2u);
  EXPECT_EQ(hybrid_from_json(hybrid_to_json(h)).mzm.coeffs, h.mzm.coeffs);
  EXPECT_THROW(state_from_json(json::parse(R"({"foo":1})")), ValidationError);
  EXPECT_THROW(state_from_json(json::array()), ValidationError);
}

TEST(Model, RoundTripAndDefaults) {
  const IslandQdModel d = model_from_json(json::object());
  EXPECT_EQ(d.eps_C, 10.0);
  EXPECT_EQ(d.n_g, 0.3);
  const IslandQdModel m = model_from_json(json::parse(R"({"E_C":2,"h":-0.5,"t1":[0.01,0],"t2":[0,0.02]})"));
  EXPECT_EQ(m.E_C, 2.0);
  EXPECT_EQ(m.t2, Complex(0, 0.02));
  const IslandQdModel back = model_from_json(model_to_json(m));
  EXPECT_EQ(back.h, m.h);
  EXPECT_EQ(back.t1, m.t1);
  EXPECT_THROW(model_from_json(json::parse(R"({"E_C":"big"})")), ValidationError);
}

TEST(Files, ReadErrors) {
  const std::string path = testing::TempDir() + "mzmwit_bad.json";
  {
    std::ofstream out(path);
    out << "{not json";
  }
  EXPECT_THROW(read_json_file(path), ValidationError);
  std::remove(path.c_str());
  EXPECT_THROW(read_json_file(path), ValidationError);
}

TEST(Reports, Shapes) {
  const double h = M_SQRT1_2;
  const WitnessReport r =
      mzm_witness_value(build_mzm_state(Pairing::reference(), {h, 0, h, 0}, Parity::Odd), WitnessParams::canonical_odd());
  const json j = report_to_json(r);
  EXPECT_EQ(j.at("verdict"), "negative");
  EXPECT_EQ(j.at("per_pair").size(), 9u);
  DetectionRecord rec;
  rec.detected = true;
  rec.rounds_used = 1;
  rec.witness_values = {r.value};
  rec.last_report = r;
  EXPECT_EQ(record_to_json(rec).at("verdict"), "mzm-detected");
  RateResult rr;
  rr.rate = 0.25;
  EXPECT_EQ(rate_to_json(rr).at("rate"), 0.25);
}

TEST(Csv, WriterFormatsRows) {
  CsvWriter w({"p", "rate"});
  w.row({0.1, 1.0 / 3.0});
  EXPECT_EQ(w.str(), "p,rate\n0.10000000000000001,0.33333333333333331\n");
  EXPECT_THROW(w.row({1.0}), ValidationError);
}

TEST(Manifest, Fields) {
  RunManifest m;
  m.command = "rate";
  m.seed = 42;
  const json j = m.to_json();
  EXPECT_EQ(j.at("version"), kToolVersion);
  EXPECT_EQ(j.at("seed"), 42u);
  EXPECT_TRUE(j.contains("duration_s"));
}
