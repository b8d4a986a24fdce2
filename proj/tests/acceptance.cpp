// Acceptance runner: one PASS/FAIL line per criterion, details indented below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kbv/apps.hpp"
#include "kbv/bounds.hpp"
#include "kbv/cli.hpp"
#include "kbv/exact.hpp"
#include "kbv/laws.hpp"
#include "kbv/primes.hpp"

using namespace kbv;

namespace {

struct Check {
  bool ok = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back("violation: " + what);
    }
  }
  void note(const std::string& line) { notes.push_back(line); }
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned jobs() { return std::max(1U, std::thread::hardware_concurrency()); }

ExactLimits limits() { return ExactLimits{16, 10'000'000, jobs()}; }

const std::vector<std::uint64_t> kGrid{100, 1000, 10000};
const std::vector<std::size_t> kSizes{3, 5, 8};

Check goldens() {
  Check c;
  const Rational a = exact_tv(make_uniform_law(4), GammaSet(4, {2}));
  const Rational b = exact_tv(make_uniform_law(1), GammaSet(1, {2}, GammaSet::Range::any));
  c.require(a == Rational(1, 8), "n=4 gives " + to_fraction_string(a));
  c.require(b == Rational(1, 2), "n=1 gives " + to_fraction_string(b));
  return c;
}

Check bonferroni_sandwich() {
  Check c;
  std::uint64_t checks = 0;
  for (const bool pareto : {false, true}) {
    for (std::uint64_t n : kGrid) {
      const LawSpec law = pareto ? make_pareto_law(n, 0.5) : make_uniform_law(n);
      for (std::size_t k : kSizes) {
        const GammaSet gamma = gamma_first_primes(n, k);
        const JointLaw joint = joint_v_law(law, gamma, limits());
        const BonferroniEvaluator eval(law, gamma, limits());
        for (const auto& m : enumerate_multiplicities(gamma, 6)) {
          const Rational exact = joint.mass(m);
          const Rational geo = geometric_mass(gamma, m);
          for (unsigned g = 1; g <= gamma.size(); g += 2) {
            const BonferroniBounds b = eval.bounds(m, g);
            ++checks;
            const bool ok = b.lower <= exact && exact <= b.upper && b.geo_lower <= geo && geo <= b.geo_upper;
            c.require(ok, law.descriptor() + fmt(" n=%llu k=%zu g=%u m=", static_cast<unsigned long long>(n), k, g) +
                              m.to_string());
          }
        }
      }
    }
  }
  c.note(fmt("%llu sandwich checks", static_cast<unsigned long long>(checks)));
  return c;
}

// Criteria 3 and 4 share the partition grid.
void partition_grid(Check& lemmas, Check& additivity) {
  std::size_t points = 0;
  for (std::uint64_t n : kGrid) {
    const LawSpec law = make_uniform_law(n);
    lemmas.require(certify_ht(law, 1.0, 1.0).holds, fmt("uniform n=%llu not certified", (unsigned long long)n));
    for (std::size_t k : kSizes) {
      const GammaSet gamma = gamma_first_primes(n, k);
      const JointLaw joint = joint_v_law(law, gamma, limits());
      const Rational tv = exact_tv(joint);
      for (double delta : {0.2, 0.3}) {
        BoundParams p;
        p.t = 1;
        p.kappa = 1;
        p.epsilon = 1;
        p.delta = delta;
        p.n = n;
        p.gamma = &gamma;
        const double rho = p.rho();
        const PartitionSums parts =
            partitioned_tv(joint, alpha_threshold(delta, rho), beta_threshold(delta, p.epsilon, rho));
        const double many = lemma_many_bound(delta, p.epsilon, p.kappa, rho);
        const double high = lemma_high_bound(delta, p.epsilon, p.kappa, rho).value;
        const std::string where = fmt("n=%llu k=%zu delta=%.1f", (unsigned long long)n, k, delta);
        lemmas.require(le_rounded_down(parts.s_many, many), where + " S_many");
        lemmas.require(le_rounded_down(parts.s_high, high), where + " S_high");
        additivity.require(parts.total() == 2 * tv, where);
        lemmas.note(where + fmt(": S_many=%.3e <= %.3e, S_high=%.3e <= %.3e", to_double(parts.s_many), many,
                                to_double(parts.s_high), high));
        ++points;
      }
    }
  }
  additivity.note(fmt("%zu grid points", points));
}

std::vector<std::uint64_t> log_grid(std::uint64_t lo, std::uint64_t hi, int per_decade) {
  std::vector<std::uint64_t> out;
  for (int i = 0;; ++i) {
    const double x = static_cast<double>(lo) * std::pow(10.0, static_cast<double>(i) / per_decade);
    const auto n = static_cast<std::uint64_t>(std::llround(x));
    if (n > hi) break;
    out.push_back(n);
  }
  return out;
}

Check ht_certificates() {
  Check c;
  for (std::uint64_t n : log_grid(10, 100000, 4)) {
    const HtCertificate cert = certify_ht(make_uniform_law(n), 1.0, 1.0);
    c.require(cert.holds, fmt("uniform n=%llu", (unsigned long long)n));
  }
  for (double s : {0.0, 0.25, 0.5}) {
    const auto grid = log_grid(10, 100000, 2);
    std::vector<bool> holds;
    for (std::uint64_t n : grid) holds.push_back(certify_ht(make_pareto_law(n, s), 1.0 - s, 3.0).holds);
    // n0: first grid point from which every larger tested n certifies.
    std::optional<std::uint64_t> n0;
    for (std::size_t i = grid.size(); i-- > 0 && holds[i];) n0 = grid[i];
    if (n0) {
      c.note(fmt("pareto s=%.2f: n0=%llu", s, (unsigned long long)*n0));
    } else {
      c.note(fmt("pareto s=%.2f: kappa=3 fails at n=%llu", s, (unsigned long long)grid.back()));
    }
    if (s < 0.5 && (!n0 || *n0 > 10000)) {
      bool ever = false;
      for (std::uint64_t n : log_grid(100000, 1000000, 2)) {
        ever = ever || certify_ht(make_pareto_law(n, s), 1.0 - s, 3.0).holds;
      }
      c.require(ever, fmt("pareto s=%.2f never certifies up to 1e6", s));
    }
  }
  return c;
}

Check chernoff_grid() {
  Check c;
  std::size_t checks = 0;
  for (const Rational& lambda : {Rational(1, 4), Rational(1, 2), Rational(1), Rational(2)}) {
    const double lam = to_double(lambda);
    const auto base = static_cast<std::uint64_t>(std::ceil(lam));
    for (std::uint64_t x = base + 1; x <= base + 10; ++x) {
      ++checks;
      const double bound = chernoff_poisson_tail(lam, static_cast<double>(x));
      const double tail = exact_poisson_series_tail(lambda, x);
      c.require(bound >= tail, fmt("lambda=%.2f x=%llu", lam, (unsigned long long)x));
    }
  }
  c.note(fmt("%zu grid points", checks));
  return c;
}

Check main_bound_table() {
  Check c;
  c.note("n | Gamma | rho | bound | branch | exact TV | verdict");
  for (std::uint64_t n : {10'000ULL, 100'000ULL, 1'000'000ULL, 10'000'000ULL}) {
    const double ll = std::log(std::log(static_cast<double>(n)));
    const GammaSet gamma = gamma_small_primes(n, ll * ll);
    BoundParams p;
    p.n = n;
    p.gamma = &gamma;
    p.delta = default_delta(p.t);
    const Theorem1Bound b = theorem1_bound(p);
    const Rational tv = exact_tv(make_uniform_law(n), gamma, limits());
    bool ok = le_rounded_down(tv, std::min(1.0, b.value));
    if (b.value <= 1.0) ok = ok && le_rounded_down(tv, b.value);
    c.require(ok, fmt("n=%llu", (unsigned long long)n));
    std::string primes;
    for (auto q : gamma.primes()) primes += (primes.empty() ? "" : ",") + std::to_string(q);
    c.note(fmt("%llu | {%s} | %.4f | %.4f | %s | %s | %s", (unsigned long long)n, primes.c_str(), p.rho(), b.value,
               b.branch.c_str(), to_decimal_string(tv, 8).c_str(), b.vacuous() ? "vacuous" : "informative"));
  }
  return c;
}

Check witness() {
  Check c;
  for (std::uint64_t p : {2ULL, 3ULL}) {
    for (std::uint64_t n : {100ULL, 1000ULL, 10000ULL}) {
      const Rational floor_value = make_rational(1, p * n);
      for (const GammaSet& gamma : {GammaSet(n, {p}), gamma_first_primes(n, 3)}) {
        const Rational tv = exact_tv(make_uniform_law(n), gamma);
        c.require(tv >= floor_value, fmt("p=%llu n=%llu |Gamma|=%zu", (unsigned long long)p, (unsigned long long)n,
                                         gamma.size()));
      }
    }
  }
  return c;
}

Check erdos_kac() {
  Check c;
  const auto rows =
      erdos_kac_experiment(LawFamily{}, {10'000, 100'000, 1'000'000, 10'000'000}, ExactLimits{16, 10'000'000, jobs()});
  int decreasing = 0;
  double lo = INFINITY;
  double hi = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    c.require(std::isfinite(r.w1), fmt("W1 not finite at n=%llu", (unsigned long long)r.n));
    if (i > 0 && r.w1 < rows[i - 1].w1) ++decreasing;
    if (r.ratio) {
      lo = std::min(lo, *r.ratio);
      hi = std::max(hi, *r.ratio);
    }
    c.note(fmt("n=%llu W1=%.6f ratio=%.4f", (unsigned long long)r.n, r.w1, r.ratio.value_or(NAN)));
  }
  c.require(decreasing >= 2, fmt("only %d decreasing steps", decreasing));
  c.require(lo > 0 && hi / lo <= 50.0, fmt("ratio band %.3f", hi / lo));
  c.note(fmt("decreasing steps %d/3, ratio band %.4f", decreasing, hi / lo));
  return c;
}

Check poisson() {
  Check c;
  for (double a : {10.0, 50.0, 100.0}) {
    const IndicatorProcessSpec spec = make_indicator_process(a);
    const PoissonMarginal m = poisson_marginal_tv(spec, 1.0);
    c.require(m.tv_le_lecam && m.lecam_le_two_over_an, fmt("a_n=%.0f", a));
    c.note(fmt("a_n=%.0f atoms=%zu%s tv=%.6e lecam=%.6e 2/a_n=%.4f", a, m.atoms, m.truncated ? " (truncated)" : "",
               m.tv, to_double(m.lecam), m.two_over_an));
  }
  return c;
}

Check determinism() {
  Check c;
  std::vector<cli::ExperimentConfig> configs;
  auto add = [&](const std::string& command, auto&& tweak) {
    cli::ExperimentConfig cfg;
    cfg.command = command;
    cfg.jobs = jobs();
    tweak(cfg);
    configs.push_back(cfg);
  };
  add("tv-exact", [](auto& cfg) { cfg.n = 100000; cfg.gamma_size = 6; cfg.law = "pareto"; cfg.s = 0.5; });
  add("certify-ht", [](auto& cfg) { cfg.n_grid = {100, 1000}; });
  add("bound", [](auto& cfg) { cfg.n = 1000000; cfg.gamma_size = 10; });
  add("partition", [](auto& cfg) { cfg.n = 100000; cfg.gamma_size = 5; cfg.output = "csv"; });
  add("bonferroni", [](auto& cfg) { cfg.n = 1000; cfg.gamma_size = 4; });
  add("erdos-kac", [](auto& cfg) { cfg.n_grid = {1000, 100000}; });
  add("poisson", [](auto& cfg) { cfg.a_n = 50.0; });
  add("sweep", [](auto& cfg) { cfg.n = 100000; cfg.gamma_size = 6; cfg.deltas = {0.2, 0.3}; });
  for (const auto& cfg : configs) {
    std::ostringstream err;
    const auto first = cli::run(cfg, err);
    const auto second = cli::run(cfg, err);
    c.require(first.status == cli::kExitOk, cfg.command + " status " + std::to_string(first.status) + " " + err.str());
    c.require(first.report == second.report && !first.report.empty(), cfg.command + " reports differ");
  }
  c.note(fmt("%zu commands run twice", configs.size()));
  return c;
}

bool report(int id, const std::string& name, const std::function<Check()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Check c;
  try {
    c = body();
  } catch (const std::exception& e) {
    c.ok = false;
    c.notes.push_back(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (c.ok ? "PASS" : "FAIL") << " [" << id << "] " << name << " (" << fmt("%.2f", secs) << " s)\n";
  for (const auto& line : c.notes) std::cout << "    " << line << "\n";
  std::cout.flush();
  return c.ok;
}

}  // namespace

int main() {
  bool ok = true;
  ok &= report(1, "golden exact TV values", goldens);
  ok &= report(2, "Bonferroni sandwich", bonferroni_sandwich);
  Check lemmas;
  Check additivity;
  ok &= report(3, "many-divisor and high-multiplicity lemmas", [&] {
    partition_grid(lemmas, additivity);
    return lemmas;
  });
  ok &= report(4, "partition additivity", [&] { return additivity; });
  ok &= report(5, "(H_t) certificates", ht_certificates);
  ok &= report(6, "Chernoff tail grid", chernoff_grid);
  ok &= report(7, "main bound table", main_bound_table);
  ok &= report(8, "lower-bound witness 1/(pn)", witness);
  ok &= report(9, "Erdos-Kac trend", erdos_kac);
  ok &= report(10, "Poisson approximation", poisson);
  ok &= report(11, "determinism", determinism);
  return ok ? 0 : 1;
}
