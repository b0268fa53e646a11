#pragma once

// JSON documents for states, witnesses, couplings and models; CSV output.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mzmwit/protocol.hpp"
#include "mzmwit/states.hpp"
#include "mzmwit/tunneling.hpp"
#include "mzmwit/witness.hpp"

namespace mzmwit {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// ------------------------------------------------------------------ helpers

/// A complex value is either a number or [re, im].
inline Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ValidationError("expected a number or [re, im], got " + j.dump());
}

inline json complex_to_json(Complex c) { return json::array({c.real(), c.imag()}); }

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

/// 17 significant digits: doubles round-trip exactly.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class F>
auto json_guard(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

// ------------------------------------------------------------------ witness

inline WitnessParams witness_from_json(const json& j) {
  return json_guard("witness", [&] {
    if (j.contains("a")) {
      WitnessParams w;
      for (const auto& [key, val] : j.at("a").items()) {
        if (key.size() != 2 || !std::isdigit(key[0]) || !std::isdigit(key[1])) {
          throw ValidationError("witness: bad pair key \"" + key + "\"");
        }
        w.set(key[0] - '0', key[1] - '0', val.get<double>());
      }
      return w;
    }
    if (j.contains("m")) {
      return WitnessParams::canonical(j.at("m").get<double>(), j.at("theta_deg").get<double>(),
                                      j.at("a52").get<double>());
    }
    throw ValidationError("witness: expected {\"a\": {...}} or {\"m\", \"theta_deg\", \"a52\"}");
  });
}

inline json witness_to_json(const WitnessParams& w) {
  json a = json::object();
  for (const auto& [i, j] : WitnessParams::kCrossingPairs) a[pair_key(i, j)] = w.get(i, j);
  return json{{"a", a}};
}

/// Preset name (canonical-odd, canonical-even) or a JSON file path.
inline WitnessParams resolve_witness(const std::string& spec) {
  if (spec == "canonical-odd") return WitnessParams::canonical_odd();
  if (spec == "canonical-even") return WitnessParams::canonical_even();
  return witness_from_json(read_json_file(spec));
}

// ---------------------------------------------------------------- couplings

inline TunnelCouplings couplings_from_json(const json& j) {
  return json_guard("couplings", [&] {
    TunnelCouplings c;
    for (const auto& [key, val] : j.at("t").items()) {
      int site = 0;
      try {
        site = std::stoi(key);
      } catch (const std::exception&) {
        throw ValidationError("couplings: bad site key \"" + key + "\"");
      }
      if (site < 1 || site > 6) throw ValidationError("couplings: site " + key + " outside 1..6");
      c.t[site] = complex_from_json(val);
    }
    return c;
  });
}

inline json couplings_to_json(const TunnelCouplings& c) {
  json t = json::object();
  for (const auto& [site, val] : c.t) t[std::to_string(site)] = complex_to_json(val);
  return json{{"t", t}};
}

// ------------------------------------------------------------------- states

inline AbsSiteParams site_from_json(const json& j) {
  AbsSiteParams s;
  s.u = j.value("u", 1.0);
  s.v = j.value("v", 0.0);
  s.occupation = j.value("occ", 0.0);
  if (j.contains("coh")) s.coherence = complex_from_json(j.at("coh"));
  s.validate();
  return s;
}

inline json site_to_json(const AbsSiteParams& s) {
  return json{{"u", s.u}, {"v", s.v}, {"occ", s.occupation}, {"coh", complex_to_json(s.coherence)}};
}

inline MzmState mzm_from_json(const json& j) {
  return json_guard("MZM state", [&] {
    std::vector<Pairing::Pair> pairs;
    for (const auto& p : j.at("pairing")) {
      if (!p.is_array() || p.size() != 2) throw ValidationError("MZM state: each pair needs two sites");
      pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
    MzmState s{Pairing(std::move(pairs)), parse_parity(j.at("parity").get<std::string>()), {}};
    for (const auto& c : j.at("coeffs")) s.coeffs.push_back(complex_from_json(c));
    validate_coeffs(s.coeffs);
    if (s.coeffs.size() != sector_labels(s.pairing.n_pairs(), s.parity).size()) {
      throw ValidationError("MZM state: wrong number of coefficients for the pairing");
    }
    return s;
  });
}

inline json mzm_to_json(const MzmState& s) {
  json pairs = json::array();
  for (const auto& [a, b] : s.pairing.pairs()) pairs.push_back({a, b});
  json coeffs = json::array();
  for (Complex c : s.coeffs) coeffs.push_back(c.imag() == 0.0 ? json(c.real()) : complex_to_json(c));
  return json{{"pairing", pairs}, {"parity", to_string(s.parity)}, {"coeffs", coeffs}};
}

inline AbsState abs_from_json(const json& j) {
  return json_guard("ABS state", [&] {
    AbsState s;
    for (const auto& site : j.at("sites")) s.sites.push_back(site_from_json(site));
    return s;
  });
}

inline json abs_to_json(const AbsState& s) {
  json sites = json::array();
  for (const auto& site : s.sites) sites.push_back(site_to_json(site));
  return json{{"sites", sites}};
}

/// {"mzm": {...MZM state...}, "abs": {"sites": [...]}, "n_sites": 6}
inline HybridState hybrid_from_json(const json& j) {
  return json_guard("hybrid state", [&] {
    HybridState h;
    h.mzm = mzm_from_json(j.at("mzm"));
    h.abs_sites = abs_from_json(j.at("abs")).sites;
    h.n_sites = j.value("n_sites", 6);
    h.validate();
    return h;
  });
}

inline json hybrid_to_json(const HybridState& h) {
  return json{{"mzm", mzm_to_json(h.mzm)}, {"abs", abs_to_json(AbsState{h.abs_sites, 1})}, {"n_sites", h.n_sites}};
}

/// Dispatches on the document shape.
inline PreparedState state_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("state: expected a JSON object");
  if (j.contains("mzm") && j.contains("abs")) return hybrid_from_json(j);
  if (j.contains("pairing")) return mzm_from_json(j);
  if (j.contains("sites")) return abs_from_json(j);
  throw ValidationError("state: unrecognized document (need pairing, sites, or mzm+abs)");
}

inline json state_to_json(const PreparedState& s) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, MzmState>) return mzm_to_json(v);
        else if constexpr (std::is_same_v<T, AbsState>) return abs_to_json(v);
        else return hybrid_to_json(v);
      },
      s);
}

// -------------------------------------------------------------------- model

inline IslandQdModel model_from_json(const json& j) {
  return json_guard("model", [&] {
    IslandQdModel m;
    m.E_C = j.value("E_C", m.E_C);
    m.N_g = j.value("N_g", m.N_g);
    m.eps_C = j.value("eps_C", m.eps_C);
    m.n_g = j.value("n_g", m.n_g);
    m.h = j.value("h", m.h);
    if (j.contains("t1")) m.t1 = complex_from_json(j.at("t1"));
    if (j.contains("t2")) m.t2 = complex_from_json(j.at("t2"));
    if (j.contains("site1")) m.site1 = site_from_json(j.at("site1"));
    if (j.contains("site2")) m.site2 = site_from_json(j.at("site2"));
    return m;
  });
}

inline json model_to_json(const IslandQdModel& m) {
  return json{{"E_C", m.E_C}, {"N_g", m.N_g}, {"eps_C", m.eps_C}, {"n_g", m.n_g}, {"h", m.h},
              {"t1", complex_to_json(m.t1)}, {"t2", complex_to_json(m.t2)},
              {"site1", site_to_json(m.site1)}, {"site2", site_to_json(m.site2)}};
}

// ------------------------------------------------------------------ reports

inline json report_to_json(const WitnessReport& r) {
  json pairs = json::array();
  for (const auto& d : r.per_pair) pairs.push_back({{"pair", pair_key(d.i, d.j)}, {"a", d.a}, {"d", d.d}});
  return json{{"value", r.value}, {"verdict", r.verdict()}, {"marginal", r.marginal()}, {"per_pair", pairs}};
}

inline json record_to_json(const DetectionRecord& rec) {
  return json{{"verdict", rec.verdict()},
              {"rounds_used", rec.rounds_used},
              {"witness_values", rec.witness_values},
              {"last", report_to_json(rec.last_report)}};
}

inline json rate_to_json(const RateResult& r) {
  return json{{"rate", r.rate},       {"stderr", r.stderr_},        {"samples", r.samples},
              {"seed", r.seed},       {"detections", r.detections}, {"marginal", r.marginal}};
}

// --------------------------------------------------------------------- CSV

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

  CsvWriter& row(const std::vector<double>& values) {
    if (values.size() != columns_) throw ValidationError("CsvWriter: column count mismatch");
    std::vector<std::string> s;
    for (double v : values) s.push_back(fmt17(v));
    return row_strings(s);
  }

  CsvWriter& row_strings(const std::vector<std::string>& values) {
    for (std::size_t k = 0; k < values.size(); ++k) out_ << (k ? "," : "") << values[k];
    out_ << '\n';
    return *this;
  }

  std::string str() const { return out_.str(); }

 private:
  std::size_t columns_;
  std::ostringstream out_;
};

// ---------------------------------------------------------------- manifest

struct RunManifest {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  std::string version = kToolVersion;
  std::vector<std::string> outputs;
  double duration_s = 0.0;
  unsigned threads = 1;

  json to_json() const {
    return json{{"command", command}, {"config", config},         {"seed", seed},      {"version", version},
                {"outputs", outputs}, {"duration_s", duration_s}, {"threads", threads}};
  }
};

}  // namespace mzmwit
