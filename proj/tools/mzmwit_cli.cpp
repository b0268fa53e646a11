// mzmwit command-line front end.
//
// Exit codes: 0 success, 1 domain verdict (bound violated, model out of
// regime), 2 usage or validation error.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mzmwit/mzmwit.hpp"

using namespace mzmwit;

namespace {

struct Globals {
  std::uint64_t seed = 42;
  unsigned threads = 1;
  std::string out;
  std::string format;  // empty: command default
};

/// Thrown by a command that finished normally but must exit with status 1.
struct Verdict {
  std::string message;
};

struct Output {
  std::string body;
  json config = json::object();
  json extra = json::object();  // manifest-only data
  std::vector<std::pair<std::string, std::string>> sidecars;  // suffix, content
};

std::string resolve_format(const Globals& g, const std::string& fallback) {
  const std::string f = g.format.empty() ? fallback : g.format;
  if (f != "csv" && f != "json") throw ValidationError("--format must be csv or json");
  return f;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f << content;
}

void emit(const std::string& command, const Globals& g, const Output& o, double seconds) {
  if (g.out.empty()) {
    std::cout << o.body;
    for (const auto& [suffix, content] : o.sidecars) std::cerr << content;
    return;
  }
  write_file(g.out, o.body);
  RunManifest m;
  m.command = command;
  m.config = o.config;
  m.seed = g.seed;
  m.outputs.push_back(g.out);
  for (const auto& [suffix, content] : o.sidecars) {
    write_file(g.out + suffix, content);
    m.outputs.push_back(g.out + suffix);
  }
  m.duration_s = seconds;
  m.threads = resolve_threads(g.threads);
  json mj = m.to_json();
  if (!o.extra.empty()) mj["results"] = o.extra;
  write_file(g.out + ".manifest.json", dump(mj));
}

TunnelCouplings load_couplings(const std::string& path) {
  if (path.empty() || path == "unit") return TunnelCouplings::uniform();
  return couplings_from_json(read_json_file(path));
}

DensityMatrix prepared_density(const PreparedState& s) {
  return std::visit(
      [](const auto& v) -> DensityMatrix {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, MzmState>) return build_mzm_state(v);
        else if constexpr (std::is_same_v<T, AbsState>) return build_abs_state(v);
        else return build_hybrid_state(v);
      },
      s);
}

std::vector<double> parse_p_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("--grid: expected start:stop:step, got \"" + spec + "\"");
    }
  }
  if (parts.size() != 3) throw ValidationError("--grid: expected start:stop:step, got \"" + spec + "\"");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0.0)) throw ValidationError("--grid: step must be positive");
  if (!(start >= 0.0 && stop <= 1.0 && start <= stop)) throw ValidationError("--grid: need 0 <= start <= stop <= 1");
  const auto n = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid;
  for (std::int64_t k = 0; k < n; ++k) grid.push_back(std::round((start + k * step) * 1e12) / 1e12);
  return grid;
}

std::vector<double> parse_list(const std::string& spec, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(what + ": bad number \"" + item + "\"");
    }
  }
  if (out.empty()) throw ValidationError(what + ": empty list");
  return out;
}

std::vector<int> parse_modes(const std::string& spec) {
  std::vector<int> out;
  for (double x : parse_list(spec, "--split")) {
    if (x != std::floor(x)) throw ValidationError("--split: mode indices must be integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

// ---------------------------------------------------------------- commands

struct RateArgs {
  std::string parity = "odd";
  std::string witness = "canonical-odd";
  std::int64_t samples = 100000;
  double p = 0.0;
  bool complex = false;
  int grid = 1024;
};

Output cmd_rate(const RateArgs& a, const Globals& g) {
  const Parity par = parse_parity(a.parity);
  const WitnessParams w = resolve_witness(a.witness);
  const RateResult r = monte_carlo_rate(w, par, a.p, a.samples, g.seed, {resolve_threads(g.threads), a.complex});
  std::optional<AnalyticResult> an;
  if (a.p == 0.0 && !a.complex) an = analytic_negative_fraction(w, par, a.grid, a.samples, g.seed);

  Output o;
  o.config = {{"parity", a.parity}, {"witness", witness_to_json(w)}, {"samples", a.samples},
              {"p", a.p},           {"complex", a.complex},        {"grid", a.grid}};
  if (resolve_format(g, "json") == "json") {
    json j = rate_to_json(r);
    j["parity"] = a.parity;
    j["p"] = a.p;
    j["analytic"] = an ? json(an->value) : json(nullptr);
    j["analytic_method"] = an ? json(an->method) : json(nullptr);
    o.body = dump(j);
  } else {
    CsvWriter csv({"p", "rate", "stderr", "samples", "seed", "analytic"});
    csv.row_strings({fmt17(a.p), fmt17(r.rate), fmt17(r.stderr_), std::to_string(r.samples), std::to_string(r.seed),
                     an ? fmt17(an->value) : "nan"});
    o.body = csv.str();
  }
  return o;
}

struct SweepArgs {
  std::string parity = "odd";
  std::string witness = "canonical-odd";
  std::string grid = "0:0.6:0.1";
  std::int64_t samples = 10000;
  bool complex = false;
};

Output cmd_sweep(const SweepArgs& a, const Globals& g) {
  const Parity par = parse_parity(a.parity);
  const WitnessParams w = resolve_witness(a.witness);
  const std::vector<double> grid = parse_p_grid(a.grid);
  const SweepReport rep = poisoning_sweep(w, par, grid, a.samples, g.seed, {resolve_threads(g.threads), a.complex});

  Output o;
  o.config = {{"parity", a.parity}, {"witness", witness_to_json(w)}, {"grid", a.grid},
              {"samples", a.samples}, {"complex", a.complex}};
  json mono = {{"monotone_non_increasing_3sigma", rep.monotone}, {"violations", json::array()}};
  for (std::size_t i : rep.violations) mono["violations"].push_back({rep.rows[i].p, rep.rows[i + 1].p});
  if (resolve_format(g, "csv") == "csv") {
    CsvWriter csv({"p", "rate", "stderr", "samples", "seed"});
    for (const auto& row : rep.rows) {
      csv.row_strings({fmt17(row.p), fmt17(row.result.rate), fmt17(row.result.stderr_),
                       std::to_string(row.result.samples), std::to_string(row.result.seed)});
    }
    o.body = csv.str();
    o.sidecars.emplace_back(".monotonicity.json", dump(mono));
  } else {
    json rows = json::array();
    for (const auto& row : rep.rows) {
      json r = rate_to_json(row.result);
      r["p"] = row.p;
      rows.push_back(r);
    }
    o.body = dump({{"rows", rows}, {"monotonicity", mono}});
  }
  return o;
}

struct CandidateArgs {
  std::string witness = "canonical-odd";
  std::string couplings = "unit";
};

Output cmd_candidate(const CandidateArgs& a, const Globals& g, bool& violated) {
  const WitnessParams w = resolve_witness(a.witness);
  const TunnelCouplings c = load_couplings(a.couplings);
  const BoundResult f = candidate_bound_fermion(w, c);
  const BoundResult ab = candidate_bound_abs(w, c);
  violated = !ab.holds;

  Output o;
  o.config = {{"witness", witness_to_json(w)}, {"couplings", couplings_to_json(c)}};
  auto verdict = [](const BoundResult& b) { return b.holds ? "holds" : "violated"; };
  if (resolve_format(g, "json") == "json") {
    auto one = [&](const BoundResult& b) {
      return json{{"margin", b.margin}, {"signed_margin", b.signed_margin}, {"verdict", verdict(b)}};
    };
    o.body = dump({{"fermion", one(f)}, {"abs", one(ab)}});
  } else {
    CsvWriter csv({"bound", "margin", "signed_margin", "verdict"});
    csv.row_strings({"fermion", fmt17(f.margin), fmt17(f.signed_margin), verdict(f)});
    csv.row_strings({"abs", fmt17(ab.margin), fmt17(ab.signed_margin), verdict(ab)});
    o.body = csv.str();
  }
  return o;
}

struct PerturbArgs {
  std::string model;
  std::string grid = "0.04,0.02,0.01";
  std::string scenario = "mzm";
};

Output cmd_perturb(const PerturbArgs& a, const Globals& g) {
  json mj = a.model.empty() ? json::object() : read_json_file(a.model);
  IslandQdModel base = model_from_json(mj);
  const Scenario sc = parse_scenario(a.scenario);
  if (sc == Scenario::AbsPair) throw ValidationError("--scenario: use mzm or fermion for splitting studies");
  // Without explicit couplings the direction is (t1, t2) = (1, i).
  if (!mj.contains("t1") && !mj.contains("t2")) {
    base.t1 = 1.0;
    base.t2 = Complex(0.0, 1.0);
  }
  for (const auto& warning : base.validate()) std::cerr << "warning: " << warning << "\n";
  const double scale = std::max(std::abs(base.t1), std::abs(base.t2));
  const std::vector<double> ts = parse_list(a.grid, "--grid");

  std::vector<double> xs, res;
  CsvWriter csv({"t", "exact", "perturbative", "residual"});
  json rows = json::array();
  for (double t : ts) {
    if (!(t > 0.0)) throw ValidationError("--grid: |t| values must be positive");
    IslandQdModel m = base;
    if (scale > 0.0) {
      m.t1 = base.t1 * (t / scale);
      m.t2 = base.t2 * (t / scale);
    }
    const ParitySplitting ps =
        sc == Scenario::MzmPair ? mzm_parity_splitting(m) : fermion_occupation_splitting(m);
    const double tt = scale > 0.0 ? t : 0.0;
    csv.row({tt, ps.exact, ps.perturbative, ps.residual()});
    rows.push_back({{"t", tt}, {"exact", ps.exact}, {"perturbative", ps.perturbative}, {"residual", ps.residual()}});
    xs.push_back(t);
    res.push_back(ps.residual());
  }
  double slope = std::numeric_limits<double>::quiet_NaN();
  const bool positive = std::all_of(res.begin(), res.end(), [](double r) { return r > 0.0; });
  if (xs.size() >= 2 && positive) slope = loglog_slope(xs, res);

  Output o;
  o.config = {{"model", model_to_json(base)}, {"grid", ts}, {"scenario", to_string(sc)}};
  o.extra = {{"residual_slope", number_or_null(slope)}};
  if (resolve_format(g, "csv") == "csv") {
    o.body = csv.str();
    std::ostringstream s;
    s << "residual_slope=" << (std::isfinite(slope) ? fmt17(slope) : "nan") << "\n";
    o.sidecars.emplace_back(".slope.txt", s.str());
  } else {
    o.body = dump({{"rows", rows}, {"residual_slope", number_or_null(slope)}});
  }
  return o;
}

struct ShotArgs {
  std::string state;
  std::string witness = "canonical-odd";
  std::string couplings = "unit";
  double p = 0.0;
  int rounds = 1;
  int shots = 0;
};

Output cmd_single_shot(const ShotArgs& a, const Globals& g) {
  ProtocolConfig cfg;
  cfg.witness = resolve_witness(a.witness);
  cfg.couplings = load_couplings(a.couplings);
  cfg.noise.p = a.p;
  cfg.max_rounds = a.rounds;
  cfg.shots = a.shots;
  cfg.seed = g.seed;
  json state_json;
  if (a.state == "random-odd" || a.state == "random-even") {
    cfg.source = RandomMzmSource{a.state == "random-odd" ? Parity::Odd : Parity::Even, false};
    state_json = a.state;
  } else {
    const PreparedState s = state_from_json(read_json_file(a.state));
    state_json = state_to_json(s);
    std::visit([&](const auto& v) { cfg.source = v; }, s);
  }
  const DetectionRecord rec = run_repeat_protocol(cfg);

  Output o;
  o.config = {{"state", state_json},        {"witness", witness_to_json(cfg.witness)},
              {"couplings", couplings_to_json(cfg.couplings)}, {"p", a.p},
              {"rounds", a.rounds},         {"shots", a.shots}};
  if (resolve_format(g, "json") == "json") {
    json j = record_to_json(rec);
    j["max_rounds"] = a.rounds;
    j["seed"] = g.seed;
    o.body = dump(j);
  } else {
    CsvWriter csv({"round", "value", "detection"});
    for (std::size_t k = 0; k < rec.witness_values.size(); ++k) {
      csv.row_strings({std::to_string(k + 1), fmt17(rec.witness_values[k]),
                       is_detection(rec.witness_values[k]) ? "1" : "0"});
    }
    o.body = csv.str();
  }
  return o;
}

struct BlockArgs {
  std::string op = "abs-witness";
  std::string witness = "canonical-odd";
  std::string couplings = "unit";
  std::string state;
  std::string split;
  int modes = 4;
  int restarts = 64;
};

Output cmd_block(const BlockArgs& a, const Globals& g) {
  Output o;
  json j;
  std::optional<Operator> w;
  std::vector<int> side_a;
  if (a.op == "identity") {
    if (a.modes < 2 || a.modes > kMaxModes) throw ValidationError("--modes must lie in 2..12");
    w = Operator::identity(FockSpace(a.modes));
    o.config = {{"operator", a.op}, {"modes", a.modes}};
  } else if (a.op == "abs-witness") {
    const WitnessParams wp = resolve_witness(a.witness);
    const TunnelCouplings c = load_couplings(a.couplings);
    std::vector<AbsSiteParams> sites(6);
    if (!a.state.empty()) {
      const PreparedState s = state_from_json(read_json_file(a.state));
      const auto* abs = std::get_if<AbsState>(&s);
      if (abs == nullptr || abs->n_sites() != 6) throw DimensionError("--state: abs-witness needs a six-site ABS state");
      sites = abs->sites;
    }
    w = abs_witness_operator(wp, c, sites);
    side_a = ModeCut::odd_even(6).side_a;
    o.config = {{"operator", a.op}, {"witness", witness_to_json(wp)}, {"couplings", couplings_to_json(c)}};
  } else if (a.op == "ccnr") {
    if (a.state.empty()) throw ValidationError("--operator ccnr needs --state");
    const PreparedState s = state_from_json(read_json_file(a.state));
    const DensityMatrix rho = prepared_density(s);
    const int n = rho.space().n_modes();
    std::vector<int> half;
    for (int k = 0; k < n / 2; ++k) half.push_back(k);
    const std::vector<int> cut = a.split.empty() ? half : parse_modes(a.split);
    const CcnrResult cr = ccnr_witness(rho, cut);
    j["ccnr_value"] = cr.value;
    w = cr.witness;
    side_a = cut;
    o.config = {{"operator", a.op}, {"state", state_to_json(s)}};
  } else {
    throw ValidationError("--operator must be abs-witness, identity or ccnr");
  }
  if (!a.split.empty()) side_a = parse_modes(a.split);
  if (side_a.empty()) {
    for (int k = 0; k < w->space().n_modes() / 2; ++k) side_a.push_back(k);
  }
  const BlockPositivityResult r = block_positivity_min(*w, side_a, a.restarts, g.seed, resolve_threads(g.threads));
  o.config["split"] = side_a;
  o.config["restarts"] = a.restarts;
  j["min"] = r.min;
  j["block_positive"] = r.min >= -1e-8;
  j["weakly_optimal"] = weakly_optimal(r);
  j["restarts"] = r.restarts;
  j["best_restart"] = r.best_restart;
  j["split"] = side_a;
  if (resolve_format(g, "json") == "json") {
    o.body = dump(j);
  } else {
    CsvWriter csv({"min", "block_positive", "weakly_optimal", "restarts", "best_restart"});
    csv.row_strings({fmt17(r.min), j["block_positive"].get<bool>() ? "1" : "0", weakly_optimal(r) ? "1" : "0",
                     std::to_string(r.restarts), std::to_string(r.best_restart)});
    o.body = csv.str();
  }
  return o;
}

template <class F>
int run_command(const std::string& name, const Globals& g, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool verdict = false;
  Output o = body(verdict);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit(name, g, o, secs);
  return verdict ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Majorana zero mode entanglement-witness simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Root seed (default 42)");
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores (default 1)");
  app.add_option("--out", g.out, "Write the result here; a manifest goes to <out>.manifest.json");
  app.add_option("--format", g.format, "csv or json (default per command)");
  app.set_version_flag("--version", kToolVersion);

  RateArgs ra;
  auto* rate = app.add_subcommand("rate", "Detection rate by Monte Carlo and quadrature");
  rate->add_option("--parity", ra.parity, "odd or even");
  rate->add_option("--witness", ra.witness, "canonical-odd, canonical-even or a witness JSON file");
  rate->add_option("--samples", ra.samples, "Monte Carlo samples (>= 100)");
  rate->add_option("--p", ra.p, "Poisoning strength in [0, 1]");
  rate->add_flag("--complex", ra.complex, "Sample complex coefficients");
  rate->add_option("--grid", ra.grid, "Quadrature grid per angle");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep-poisoning", "Detection rate against poisoning strength");
  sweep->add_option("--parity", sa.parity, "odd or even");
  sweep->add_option("--witness", sa.witness, "Witness preset or JSON file");
  sweep->add_option("--grid", sa.grid, "start:stop:step");
  sweep->add_option("--samples", sa.samples, "Samples per grid point");
  sweep->add_flag("--complex", sa.complex, "Sample complex coefficients");

  CandidateArgs ca;
  auto* cand = app.add_subcommand("candidate-check", "Fermion and ABS candidate bounds");
  cand->add_option("--witness", ca.witness, "Witness preset or JSON file");
  cand->add_option("--couplings", ca.couplings, "Couplings JSON file or 'unit'");

  PerturbArgs pa;
  auto* pert = app.add_subcommand("perturbation-verify", "Second-order energies against exact diagonalization");
  pert->add_option("--model", pa.model, "Model JSON file (default model if omitted)");
  pert->add_option("--grid", pa.grid, "Comma-separated |t| values");
  pert->add_option("--scenario", pa.scenario, "mzm or fermion");

  ShotArgs sh;
  auto* shot = app.add_subcommand("single-shot", "Run the detection protocol on a state");
  shot->add_option("--state", sh.state, "State JSON file, random-odd or random-even")->required();
  shot->add_option("--witness", sh.witness, "Witness preset or JSON file");
  shot->add_option("--couplings", sh.couplings, "Couplings JSON file or 'unit'");
  shot->add_option("--p", sh.p, "Poisoning strength");
  shot->add_option("--rounds", sh.rounds, "Maximum rounds");
  shot->add_option("--shots", sh.shots, "Copies per measured observable, 0 = exact");

  BlockArgs ba;
  auto* block = app.add_subcommand("block-positivity", "Minimum of a witness over product states");
  block->add_option("--operator", ba.op, "abs-witness, identity or ccnr");
  block->add_option("--witness", ba.witness, "Witness preset or JSON file (abs-witness)");
  block->add_option("--couplings", ba.couplings, "Couplings JSON file or 'unit' (abs-witness)");
  block->add_option("--state", ba.state, "State JSON file (ccnr; site parameters for abs-witness)");
  block->add_option("--split", ba.split, "Comma-separated modes of side A");
  block->add_option("--modes", ba.modes, "Mode count (identity)");
  block->add_option("--restarts", ba.restarts, "Optimization restarts");

  for (auto* s : {rate, sweep, cand, pert, shot, block}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*rate) return run_command("rate", g, [&](bool&) { return cmd_rate(ra, g); });
    if (*sweep) return run_command("sweep-poisoning", g, [&](bool&) { return cmd_sweep(sa, g); });
    if (*cand) return run_command("candidate-check", g, [&](bool& v) { return cmd_candidate(ca, g, v); });
    if (*pert) return run_command("perturbation-verify", g, [&](bool&) { return cmd_perturb(pa, g); });
    if (*shot) return run_command("single-shot", g, [&](bool&) { return cmd_single_shot(sh, g); });
    if (*block) return run_command("block-positivity", g, [&](bool&) { return cmd_block(ba, g); });
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const MeasurementError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
