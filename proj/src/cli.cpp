#include "kbv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "kbv/apps.hpp"
#include "kbv/bounds.hpp"
#include "kbv/error.hpp"
#include "kbv/exact.hpp"
#include "kbv/laws.hpp"
#include "kbv/primes.hpp"

#ifndef KBV_VERSION
#define KBV_VERSION "0.0.0"
#endif

namespace kbv::cli {

using nlohmann::json;

std::string_view version() noexcept { return KBV_VERSION; }

namespace {

const std::set<std::string> kCommands{"tv-exact", "certify-ht", "bound",   "partition",
                                      "bonferroni", "erdos-kac", "poisson", "sweep"};

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key) || j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<T>();
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void put_rational(json& j, const std::string& key, const Rational& q) {
  j[key] = to_fraction_string(q);
  j[key + "_decimal"] = to_decimal_string(q);
}

// Evaluates a bound that may be undefined for the given parameters.
std::optional<double> optional_bound(const std::function<double()>& f) {
  try {
    return f();
  } catch (const PreconditionError&) {
    return std::nullopt;
  }
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
};

struct Outcome {
  json result = json::object();
  Table table;
  std::vector<std::string> violations;
};

ExactLimits exact_limits(const ExperimentConfig& c) { return {c.max_gamma, c.max_n, std::max(1U, c.jobs)}; }
LawLimits law_limits(const ExperimentConfig& c) { return {c.max_n}; }

std::uint64_t require_n(const ExperimentConfig& c) {
  if (!c.n) throw ParameterError("cli", "--n is required for " + c.command);
  if (*c.n == 0) throw ParameterError("cli", "n must be >= 1");
  return *c.n;
}

LawKind law_kind(const std::string& name) {
  if (name == "uniform") return LawKind::uniform;
  if (name == "pareto") return LawKind::pareto;
  if (name == "density") return LawKind::density;
  if (name == "custom") return LawKind::custom;
  throw ParameterError("cli", "unknown law '" + name + "' (uniform, pareto, density, custom)");
}

LawSpec make_law(const ExperimentConfig& c, std::uint64_t n) {
  switch (law_kind(c.law)) {
    case LawKind::uniform:
      return make_uniform_law(n);
    case LawKind::pareto:
      return make_pareto_law(n, c.s, law_limits(c));
    case LawKind::density:
      return make_density_law(n, c.density, law_limits(c));
    case LawKind::custom:
      if (c.law_csv.empty()) throw ParameterError("cli", "custom laws need --law-csv");
      return load_custom_law_csv(c.law_csv, n, law_limits(c));
  }
  throw ParameterError("cli", "unknown law");
}

GammaSet make_gamma(const ExperimentConfig& c, std::uint64_t n) {
  if (!c.gamma_primes.empty()) {
    std::vector<std::uint64_t> primes = c.gamma_primes;
    std::sort(primes.begin(), primes.end());
    primes.erase(std::unique(primes.begin(), primes.end()), primes.end());
    return GammaSet(n, std::move(primes), GammaSet::Range::any);
  }
  if (c.gamma_lo || c.gamma_hi) {
    return gamma_window(n, c.gamma_lo.value_or(2.0), c.gamma_hi.value_or(static_cast<double>(n)));
  }
  if (c.gamma_beta) return gamma_small_primes(n, *c.gamma_beta);
  if (c.gamma_size) return gamma_first_primes(n, *c.gamma_size);
  throw ParameterError("cli", "Gamma is required: --gamma-primes, --gamma-lo/--gamma-hi, --gamma-beta or --gamma-size");
}

BoundParams bound_params(const ExperimentConfig& c, const GammaSet& gamma) {
  BoundParams p;
  p.t = c.t;
  p.kappa = c.kappa;
  p.epsilon = c.epsilon;
  p.delta = c.delta.value_or(default_delta(c.t));
  p.n = gamma.n();
  p.gamma = &gamma;
  p.validate();
  return p;
}

std::string gamma_label(const GammaSet& g) {
  std::string s;
  for (std::uint64_t p : g.primes()) s += (s.empty() ? "" : " ") + std::to_string(p);
  return s;
}

// ---------------------------------------------------------------------------

Outcome cmd_tv_exact(const ExperimentConfig& c) {
  const std::uint64_t n = require_n(c);
  const LawSpec law = make_law(c, n);
  const GammaSet gamma = make_gamma(c, n);
  Outcome o;
  o.result["law"] = law.to_json();
  o.result["gamma"] = gamma.to_json();
  o.table.columns = {"n", "law", "gamma", "tv", "tv_decimal"};
  if (c.mode == "float") {
    const double tv = float_tv(law, gamma, exact_limits(c));
    o.result["tv"] = tv;
    o.table.rows.push_back({n, law.descriptor(), gamma_label(gamma), tv, tv});
  } else {
    const Rational tv = exact_tv(law, gamma, exact_limits(c));
    put_rational(o.result, "tv", tv);
    o.table.rows.push_back({n, law.descriptor(), gamma_label(gamma), to_fraction_string(tv), to_decimal_string(tv)});
  }
  return o;
}

Outcome cmd_certify_ht(const ExperimentConfig& c) {
  std::vector<std::uint64_t> grid = c.n_grid;
  if (grid.empty()) grid.push_back(require_n(c));
  Outcome o;
  o.table.columns = {"n", "law", "t", "kappa", "holds", "required_kappa", "max_dev", "argmax_dev", "max_ratio",
                     "argmax_ratio", "interval_error"};
  json certs = json::array();
  for (std::uint64_t n : grid) {
    const LawSpec law = make_law(c, n);
    const HtCertificate cert = certify_ht(law, c.t, c.kappa);
    json entry = cert.to_json();
    entry["n"] = n;
    entry["law"] = law.descriptor();
    certs.push_back(entry);
    o.table.rows.push_back({n, law.descriptor(), cert.t, cert.kappa, cert.holds, cert.required_kappa,
                            to_decimal_string(cert.max_dev), cert.argmax_dev, to_decimal_string(cert.max_ratio),
                            cert.argmax_ratio, cert.interval_error});
  }
  o.result["certificates"] = certs;
  return o;
}

json bound_block(const BoundParams& p, const GammaSet& gamma, double C) {
  json j;
  const Theorem1Bound main = theorem1_bound(p);
  j["theorem"] = main.to_json();
  const double rho = p.rho();
  j["rho"] = rho;
  j["tau"] = to_decimal_string(gamma.tau());
  j["delta"] = p.delta;
  j["alpha"] = alpha_threshold(p.delta, rho);
  j["beta"] = beta_threshold(p.delta, p.epsilon, rho);
  j["lemma_many"] = opt_json(optional_bound([&] { return lemma_many_bound(p.delta, p.epsilon, p.kappa, rho); }));
  j["lemma_high"] = opt_json(optional_bound([&] { return lemma_high_bound(p.delta, p.epsilon, p.kappa, rho).value; }));
  std::optional<LemmaBonfBound> bonf;
  try {
    bonf = lemma_bonf_bound(p);
  } catch (const PreconditionError&) {
  }
  j["lemma_bonferroni"] = bonf ? json(bonf->value) : json(nullptr);
  const auto gamma_n = largest_odd_at_most(alpha_threshold(p.delta, rho));
  j["gamma_n"] = opt_json(gamma_n);
  if (gamma_n) {
    j["truncation_remainder"] = truncation_remainder_bound(*gamma_n, p).to_json();
  } else {
    j["truncation_remainder"] = nullptr;
  }
  j["rough"] = rough_bound(p.n, gamma.size(), C);
  j["C"] = C;
  return j;
}

Outcome cmd_bound(const ExperimentConfig& c) {
  const std::uint64_t n = require_n(c);
  const GammaSet gamma = make_gamma(c, n);
  const BoundParams p = bound_params(c, gamma);
  Outcome o;
  o.result = bound_block(p, gamma, c.C);
  o.result["gamma"] = gamma.to_json();
  const json& th = o.result["theorem"];
  o.table.columns = {"n", "gamma_size", "rho", "theorem", "branch", "vacuous", "cardinality_ok", "small_gamma_warning",
                     "lemma_many", "lemma_high", "lemma_bonferroni", "rough"};
  o.table.rows.push_back({n, gamma.size(), o.result["rho"], th["value"], th["branch"], th["vacuous"],
                          th["cardinality_ok"], th["small_gamma_warning"], o.result["lemma_many"],
                          o.result["lemma_high"], o.result["lemma_bonferroni"], o.result["rough"]});
  return o;
}

Outcome cmd_partition(const ExperimentConfig& c) {
  const std::uint64_t n = require_n(c);
  const LawSpec law = make_law(c, n);
  const GammaSet gamma = make_gamma(c, n);
  const ExactLimits limits = exact_limits(c);
  Outcome o;

  std::optional<BoundParams> params;
  if (gamma.rho()) params = bound_params(c, gamma);
  const double delta = c.delta.value_or(default_delta(c.t));
  double alpha = 0;
  double beta = 0;
  if (c.alpha) {
    alpha = *c.alpha;
  } else if (params) {
    alpha = alpha_threshold(delta, params->rho());
  } else {
    throw ParameterError("cli", "rho is undefined for |Gamma| < 2; pass --alpha and --beta-m");
  }
  if (c.beta_m) {
    beta = *c.beta_m;
  } else if (params) {
    beta = beta_threshold(delta, c.epsilon, params->rho());
  } else {
    throw ParameterError("cli", "rho is undefined for |Gamma| < 2; pass --alpha and --beta-m");
  }
  if (alpha < 0 || beta < 0) throw ParameterError("cli", "alpha and beta must be >= 0");

  const JointLaw joint = joint_v_law(law, gamma, limits);
  const Rational tv = exact_tv(joint);
  const PartitionSums parts = partitioned_tv(joint, alpha, beta);
  o.result["law"] = law.to_json();
  o.result["gamma"] = gamma.to_json();
  put_rational(o.result, "tv", tv);
  o.result["alpha"] = alpha;
  o.result["beta"] = beta;
  put_rational(o.result, "s_many", parts.s_many);
  put_rational(o.result, "s_high", parts.s_high);
  put_rational(o.result, "s_small", parts.s_small);

  json verdicts;
  const bool additive = parts.total() == 2 * tv;
  verdicts["additivity"] = additive;
  if (!additive) o.violations.push_back("partition: S_many + S_high + S_small != 2 d_TV");

  json bounds = nullptr;
  if (params) {
    bounds = bound_block(*params, gamma, c.C);
    if (!bounds["lemma_many"].is_null()) {
      const bool ok = le_rounded_down(parts.s_many, bounds["lemma_many"].get<double>());
      verdicts["many_le_bound"] = ok;
      if (!ok) o.violations.push_back("bounds: S_many exceeds the many-divisor bound");
    }
    if (!bounds["lemma_high"].is_null()) {
      const bool ok = le_rounded_down(parts.s_high, bounds["lemma_high"].get<double>());
      verdicts["high_le_bound"] = ok;
      if (!ok) o.violations.push_back("bounds: S_high exceeds the high-multiplicity bound");
    }
    // Soft checks: these hold only for n sufficiently large.
    const double main = bounds["theorem"]["value"].get<double>();
    verdicts["theorem_le_min1"] = le_rounded_down(tv, std::min(1.0, main));
    verdicts["theorem_vacuous"] = main > 1.0;
    if (!bounds["truncation_remainder"].is_null()) {
      verdicts["small_le_remainder_displayed"] =
          le_rounded_down(parts.s_small, bounds["truncation_remainder"]["as_displayed"].get<double>());
      verdicts["small_le_remainder_derived"] =
          le_rounded_down(parts.s_small, bounds["truncation_remainder"]["as_derived"].get<double>());
    }
  }
  o.result["bounds"] = bounds;
  o.result["verdicts"] = verdicts;
  o.table.columns = {"n", "law", "gamma", "alpha", "beta", "tv", "s_many", "s_high", "s_small", "lemma_many",
                     "lemma_high", "theorem", "additivity"};
  const auto field = [&](const char* key) { return bounds.is_null() ? json(nullptr) : bounds[key]; };
  o.table.rows.push_back({n, law.descriptor(), gamma_label(gamma), alpha, beta, to_decimal_string(tv),
                          to_decimal_string(parts.s_many), to_decimal_string(parts.s_high),
                          to_decimal_string(parts.s_small), field("lemma_many"), field("lemma_high"),
                          bounds.is_null() ? json(nullptr) : bounds["theorem"]["value"], additive});
  return o;
}

Outcome cmd_bonferroni(const ExperimentConfig& c) {
  const std::uint64_t n = require_n(c);
  const LawSpec law = make_law(c, n);
  const GammaSet gamma = make_gamma(c, n);
  if (gamma.empty()) throw ParameterError("cli", "bonferroni needs a nonempty Gamma");
  const ExactLimits limits = exact_limits(c);
  const JointLaw joint = joint_v_law(law, gamma, limits);
  const BonferroniEvaluator eval(law, gamma, limits);
  const auto ms = enumerate_multiplicities(gamma, c.max_total);

  struct Tally {
    std::uint64_t checks = 0;
    std::uint64_t violations = 0;
  };
  std::vector<unsigned> truncations;
  for (unsigned g = 1; g <= gamma.size(); g += 2) truncations.push_back(g);
  std::vector<Tally> tallies(truncations.size());
  json failures = json::array();

  for (const auto& m : ms) {
    const Rational prob = joint.mass(m);
    const Rational geo = geometric_mass(gamma, m);
    const auto levels = eval.level_sums(m);
    const auto geo_levels = eval.geometric_level_sums(m);
    Rational lower = 0;
    Rational geo_lower = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < truncations.size(); ++i) {
      for (; j <= truncations[i]; ++j) {
        lower += levels[j];
        geo_lower += geo_levels[j];
      }
      Rational upper = lower;
      Rational geo_upper = geo_lower;
      if (j < levels.size()) {
        upper += levels[j];
        geo_upper += geo_levels[j];
      }
      const bool ok = lower <= prob && prob <= upper && geo_lower <= geo && geo <= geo_upper;
      tallies[i].checks += 1;
      if (!ok) {
        tallies[i].violations += 1;
        failures.push_back({{"m", m.to_string()}, {"truncation", truncations[i]}});
      }
    }
  }

  Outcome o;
  o.result["law"] = law.to_json();
  o.result["gamma"] = gamma.to_json();
  o.result["max_total"] = c.max_total;
  o.result["vectors"] = ms.size();
  json per = json::array();
  o.table.columns = {"n", "law", "gamma", "truncation", "checks", "violations"};
  for (std::size_t i = 0; i < truncations.size(); ++i) {
    per.push_back({{"truncation", truncations[i]}, {"checks", tallies[i].checks}, {"violations", tallies[i].violations}});
    o.table.rows.push_back(
        {n, law.descriptor(), gamma_label(gamma), truncations[i], tallies[i].checks, tallies[i].violations});
  }
  o.result["truncations"] = per;
  o.result["failures"] = failures;
  if (!failures.empty()) o.violations.push_back("exact: Bonferroni sandwich violated " + std::to_string(failures.size()) + " times");
  return o;
}

Outcome cmd_erdos_kac(const ExperimentConfig& c) {
  std::vector<std::uint64_t> grid = c.n_grid;
  if (grid.empty()) grid.push_back(require_n(c));
  LawFamily family;
  family.kind = law_kind(c.law);
  family.s = c.s;
  family.density = c.density;
  family.t = c.t;
  family.kappa = c.kappa;
  const auto rows = erdos_kac_experiment(family, grid, exact_limits(c));

  Outcome o;
  o.result["family"] = family.name();
  o.table.columns = {"n", "log_log_n", "w1", "reference_rate", "ratio", "pre_asymptotic", "required_kappa"};
  json out_rows = json::array();
  for (const auto& r : rows) {
    out_rows.push_back({{"n", r.n},
                        {"log_log_n", r.log_log_n},
                        {"w1", r.w1},
                        {"reference_rate", opt_json(r.reference_rate)},
                        {"ratio", opt_json(r.ratio)},
                        {"pre_asymptotic", r.pre_asymptotic},
                        {"certificate", r.certificate.to_json()}});
    o.table.rows.push_back({r.n, r.log_log_n, r.w1, opt_json(r.reference_rate), opt_json(r.ratio), r.pre_asymptotic,
                            r.certificate.required_kappa});
  }
  o.result["rows"] = out_rows;
  unsigned decreasing = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) decreasing += rows[i].w1 < rows[i - 1].w1 ? 1 : 0;
  o.result["decreasing_steps"] = decreasing;
  o.result["steps"] = rows.empty() ? 0 : rows.size() - 1;
  std::optional<double> lo;
  std::optional<double> hi;
  for (const auto& r : rows) {
    if (!r.ratio) continue;
    lo = std::min(lo.value_or(*r.ratio), *r.ratio);
    hi = std::max(hi.value_or(*r.ratio), *r.ratio);
  }
  o.result["ratio_band"] = lo && *lo > 0 ? json(*hi / *lo) : json(nullptr);
  return o;
}

Outcome cmd_poisson(const ExperimentConfig& c) {
  if (!c.a_n) throw ParameterError("cli", "--a-n is required for poisson");
  const IndicatorProcessSpec spec = make_indicator_process(*c.a_n, c.n);
  const ExactLimits limits = exact_limits(c);
  std::vector<double> positions = c.positions;
  if (positions.empty()) positions = {0.25, 0.5, 0.75, 1.0};

  Outcome o;
  o.result["process"] = spec.to_json();
  json marginals = json::array();
  o.table.columns = {"a_n", "t", "atoms", "truncated", "tv", "lecam", "two_over_an", "tv_le_lecam",
                     "lecam_le_two_over_an"};
  for (double t : positions) {
    const PoissonMarginal m = poisson_marginal_tv(spec, t, limits);
    marginals.push_back(m.to_json());
    o.table.rows.push_back({*c.a_n, t, m.atoms, m.truncated, m.tv, to_decimal_string(m.lecam), m.two_over_an,
                            m.tv_le_lecam, m.lecam_le_two_over_an});
    if (!m.tv_le_lecam) o.violations.push_back("apps: Poisson marginal TV exceeds the Le Cam sum at t = " + json(t).dump());
    if (!m.lecam_le_two_over_an) o.violations.push_back("apps: Le Cam sum exceeds 2/a_n at t = " + json(t).dump());
  }
  o.result["marginals"] = marginals;

  const LawSpec law = make_law(c, spec.gamma.n());
  const PoissonProcessReport process = poisson_process_bound(spec, law, limits);
  json pj = process.to_json();
  pj["law"] = law.descriptor();
  const bool consistent = process.rhs >= process.two_over_an && process.rhs >= to_double(process.valuation_tv);
  pj["rhs_dominates_summands"] = consistent;
  if (!consistent) o.violations.push_back("apps: process bound smaller than one of its summands");
  o.result["process_bound"] = pj;
  return o;
}

Outcome cmd_sweep(const ExperimentConfig& c) {
  const std::uint64_t n = require_n(c);
  const GammaSet gamma = make_gamma(c, n);
  std::vector<double> deltas = c.deltas;
  std::vector<double> epsilons = c.epsilons;
  if (deltas.empty()) deltas = {0.1, 0.2, 0.25, 0.3};
  if (epsilons.empty()) epsilons = {0.5, 1.0, 2.0};

  Outcome o;
  o.result["gamma"] = gamma.to_json();
  o.table.columns = {"delta", "epsilon", "theorem", "branch", "lemma_many", "lemma_high", "lemma_bonferroni",
                     "alpha", "beta", "gamma_n"};
  json rows = json::array();
  for (double d : deltas) {
    for (double e : epsilons) {
      ExperimentConfig point = c;
      point.delta = d;
      point.epsilon = e;
      const BoundParams p = bound_params(point, gamma);
      json b = bound_block(p, gamma, c.C);
      json row{{"delta", d},
               {"epsilon", e},
               {"theorem", b["theorem"]["value"]},
               {"branch", b["theorem"]["branch"]},
               {"lemma_many", b["lemma_many"]},
               {"lemma_high", b["lemma_high"]},
               {"lemma_bonferroni", b["lemma_bonferroni"]},
               {"alpha", b["alpha"]},
               {"beta", b["beta"]},
               {"gamma_n", b["gamma_n"]}};
      rows.push_back(row);
      std::vector<json> cells;
      for (const auto& col : o.table.columns) cells.push_back(row[col]);
      o.table.rows.push_back(std::move(cells));
    }
  }
  o.result["rows"] = rows;
  return o;
}

Outcome dispatch(const ExperimentConfig& c) {
  if (c.mode != "exact" && c.mode != "float") throw ParameterError("cli", "mode must be exact or float");
  if (c.output != "json" && c.output != "csv") throw ParameterError("cli", "output must be json or csv");
  if (c.mode == "float" && c.command != "tv-exact") {
    throw ParameterError("cli", "float mode is only available for tv-exact");
  }
  if (c.command == "tv-exact") return cmd_tv_exact(c);
  if (c.command == "certify-ht") return cmd_certify_ht(c);
  if (c.command == "bound") return cmd_bound(c);
  if (c.command == "partition") return cmd_partition(c);
  if (c.command == "bonferroni") return cmd_bonferroni(c);
  if (c.command == "erdos-kac") return cmd_erdos_kac(c);
  if (c.command == "poisson") return cmd_poisson(c);
  if (c.command == "sweep") return cmd_sweep(c);
  throw ParameterError("cli", "unknown command '" + c.command + "'");
}

std::string csv_cell(const json& v) {
  std::string s;
  if (v.is_null()) return s;
  if (v.is_string()) {
    s = v.get<std::string>();
  } else {
    s = v.dump();
  }
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

std::string render(const ExperimentConfig& c, const Outcome& o) {
  const std::string status = o.violations.empty() ? "ok" : "violation";
  if (c.output == "csv") {
    std::ostringstream os;
    os << "# kbv-report v1\n";
    os << "# version: " << version() << "\n";
    os << "# command: " << c.command << "\n";
    os << "# mode: " << c.mode << "\n";
    os << "# status: " << status << "\n";
    os << "# config: " << c.to_json().dump() << "\n";
    for (const auto& v : o.violations) os << "# violation: " << v << "\n";
    for (std::size_t i = 0; i < o.table.columns.size(); ++i) os << (i ? "," : "") << o.table.columns[i];
    os << "\n";
    for (const auto& row : o.table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
      os << "\n";
    }
    return os.str();
  }
  json j;
  j["kbv_version"] = version();
  j["command"] = c.command;
  j["mode"] = c.mode;
  j["config"] = c.to_json();
  j["result"] = o.result;
  j["status"] = status;
  j["violations"] = o.violations;
  return j.dump(2) + "\n";
}

}  // namespace

json ExperimentConfig::to_json() const {
  json j;
  j["command"] = command;
  j["law"] = law;
  j["s"] = s;
  j["density"] = density;
  j["law_csv"] = law_csv;
  j["n"] = opt_json(n);
  j["n_grid"] = n_grid;
  j["gamma_primes"] = gamma_primes;
  j["gamma_lo"] = opt_json(gamma_lo);
  j["gamma_hi"] = opt_json(gamma_hi);
  j["gamma_beta"] = opt_json(gamma_beta);
  j["gamma_size"] = opt_json(gamma_size);
  j["t"] = t;
  j["kappa"] = kappa;
  j["epsilon"] = epsilon;
  j["delta"] = opt_json(delta);
  j["C"] = C;
  j["alpha"] = opt_json(alpha);
  j["beta_m"] = opt_json(beta_m);
  j["max_total"] = max_total;
  j["a_n"] = opt_json(a_n);
  j["positions"] = positions;
  j["deltas"] = deltas;
  j["epsilons"] = epsilons;
  j["mode"] = mode;
  j["output"] = output;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["max_gamma"] = max_gamma;
  j["max_n"] = max_n;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ParameterError("cli", "config must be a JSON object");
  const ExperimentConfig defaults;
  const json known = defaults.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ParameterError("cli", "unknown config key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    read(j, "command", c.command);
    read(j, "law", c.law);
    read(j, "s", c.s);
    read(j, "density", c.density);
    read(j, "law_csv", c.law_csv);
    read_opt(j, "n", c.n);
    read(j, "n_grid", c.n_grid);
    read(j, "gamma_primes", c.gamma_primes);
    read_opt(j, "gamma_lo", c.gamma_lo);
    read_opt(j, "gamma_hi", c.gamma_hi);
    read_opt(j, "gamma_beta", c.gamma_beta);
    read_opt(j, "gamma_size", c.gamma_size);
    read(j, "t", c.t);
    read(j, "kappa", c.kappa);
    read(j, "epsilon", c.epsilon);
    read_opt(j, "delta", c.delta);
    read(j, "C", c.C);
    read_opt(j, "alpha", c.alpha);
    read_opt(j, "beta_m", c.beta_m);
    read(j, "max_total", c.max_total);
    read_opt(j, "a_n", c.a_n);
    read(j, "positions", c.positions);
    read(j, "deltas", c.deltas);
    read(j, "epsilons", c.epsilons);
    read(j, "mode", c.mode);
    read(j, "output", c.output);
    read(j, "seed", c.seed);
    read(j, "jobs", c.jobs);
    read(j, "max_gamma", c.max_gamma);
    read(j, "max_n", c.max_n);
  } catch (const json::exception& e) {
    throw ParameterError("cli", std::string("malformed config: ") + e.what());
  }
  if (!kCommands.contains(c.command)) throw ParameterError("cli", "unknown command '" + c.command + "'");
  return c;
}

std::string ExperimentConfig::serialize() const { return to_json().dump(2) + "\n"; }

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParameterError("cli", std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

RunResult run(const ExperimentConfig& config, std::ostream& err) {
  RunResult r;
  try {
    const Outcome o = dispatch(config);
    r.report = render(config, o);
    r.status = o.violations.empty() ? kExitOk : kExitViolation;
    for (const auto& v : o.violations) err << "violation: " << v << "\n";
  } catch (const CertificationError& e) {
    err << "error: " << e.what() << "\n" << e.certificate().to_json().dump(2) << "\n";
    r.status = kExitUsage;
  } catch (const InvariantViolation& e) {
    err << "violation: " << e.what() << "\n";
    r.status = kExitViolation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    r.status = kExitUsage;
  }
  return r;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact total variation laboratory for prime multiplicities of random integers", "kbv"};
  app.set_version_flag("--version", std::string(version()));

  std::vector<std::function<void(ExperimentConfig&)>> apply;
  // Flags override the config only when given.
  auto bind = [&]<typename T>(const std::string& name, T ExperimentConfig::*member, const std::string& help) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = app.add_option(name, *holder, help);
    if constexpr (!std::is_same_v<T, std::string> && requires(T v) { v.push_back({}); }) opt->delimiter(',');
    apply.push_back([opt, holder, member](ExperimentConfig& c) {
      if (opt->count() > 0) c.*member = *holder;
    });
    return opt;
  };
  auto bind_opt = [&]<typename T>(const std::string& name, std::optional<T> ExperimentConfig::*member,
                                  const std::string& help) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = app.add_option(name, *holder, help);
    apply.push_back([opt, holder, member](ExperimentConfig& c) {
      if (opt->count() > 0) c.*member = *holder;
    });
    return opt;
  };

  std::string command;
  app.add_option("command", command, "tv-exact | certify-ht | bound | partition | bonferroni | erdos-kac | poisson | sweep")
      ->check(CLI::IsMember(kCommands));
  std::string config_path;
  app.add_option("--config", config_path, "JSON config (as embedded in reports); flags override it")
      ->check(CLI::ExistingFile);
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "print the resolved config and exit");

  bind("--law", &ExperimentConfig::law, "uniform | pareto | density | custom")
      ->check(CLI::IsMember({"uniform", "pareto", "density", "custom"}));
  bind("--s", &ExperimentConfig::s, "Pareto exponent in [0, 1)");
  bind("--density", &ExperimentConfig::density, "density family: linear | pow:E | affine:A,B");
  bind("--law-csv", &ExperimentConfig::law_csv, "custom law CSV (k,num,den)");
  bind_opt("--n", &ExperimentConfig::n, "sample range [n]");
  bind("--n-grid", &ExperimentConfig::n_grid, "comma-separated n values");
  bind("--gamma-primes", &ExperimentConfig::gamma_primes, "explicit comma-separated primes (wins over the others)");
  bind_opt("--gamma-lo", &ExperimentConfig::gamma_lo, "window lower end");
  bind_opt("--gamma-hi", &ExperimentConfig::gamma_hi, "window upper end");
  bind_opt("--gamma-beta", &ExperimentConfig::gamma_beta, "primes <= n^{1/beta}");
  bind_opt("--gamma-size", &ExperimentConfig::gamma_size, "first K primes");
  bind("--t", &ExperimentConfig::t, "rate exponent t > 0");
  bind("--kappa", &ExperimentConfig::kappa, "kappa >= 1");
  bind("--epsilon", &ExperimentConfig::epsilon, "epsilon > 0");
  bind_opt("--delta", &ExperimentConfig::delta, "delta > 0 (default t/4)");
  bind("--C", &ExperimentConfig::C, "constant of the rough bound");
  bind_opt("--alpha", &ExperimentConfig::alpha, "partition: distinct-prime threshold");
  bind_opt("--beta-m", &ExperimentConfig::beta_m, "partition: total-multiplicity threshold");
  bind("--max-total", &ExperimentConfig::max_total, "bonferroni: largest |m| enumerated");
  bind_opt("--a-n", &ExperimentConfig::a_n, "poisson: window start a_n >= 2");
  bind("--positions", &ExperimentConfig::positions, "poisson: comma-separated t in [0, 1]");
  bind("--deltas", &ExperimentConfig::deltas, "sweep: comma-separated delta values");
  bind("--epsilons", &ExperimentConfig::epsilons, "sweep: comma-separated epsilon values");
  bind("--mode", &ExperimentConfig::mode, "exact | float")->check(CLI::IsMember({"exact", "float"}));
  bind("--output", &ExperimentConfig::output, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  bind("--seed", &ExperimentConfig::seed, "reserved");
  bind("--jobs", &ExperimentConfig::jobs, "worker threads for enumeration");
  bind("--max-gamma", &ExperimentConfig::max_gamma, "exact-mode |Gamma| limit");
  bind("--max-n", &ExperimentConfig::max_n, "exact-mode n limit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  ExperimentConfig config;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      config = ExperimentConfig::parse(buf.str());
    }
    if (!command.empty()) config.command = command;
    if (command.empty() && config_path.empty()) {
      err << "error: cli: a command is required\n" << app.help();
      return kExitUsage;
    }
    for (const auto& f : apply) f(config);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (dump_config) {
    out << config.serialize();
    return kExitOk;
  }

  const RunResult result = run(config, err);
  if (result.report.empty()) return result.status;
  out << result.report;
  if (const char* dir = std::getenv("KBV_REPORT_DIR"); dir != nullptr && *dir != '\0') {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto path = std::filesystem::path(dir) / (config.command + "." + config.output);
    std::ofstream file(path, std::ios::binary);
    if (!file) {
      err << "error: cli: cannot write report to " << path.string() << "\n";
      return kExitUsage;
    }
    file << result.report;
  }
  return result.status;
}

}  // namespace kbv::cli
