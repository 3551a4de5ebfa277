// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "cactus/cactus.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cactus;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// 1 -------------------------------------------------------------------------
Outcome threshold_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 59;
    std::uniform_int_distribution<int> val(0, 2 + static_cast<int>(gen() % 30));
    std::vector<std::optional<double>> v(n);
    LabelVector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (gen() % 8 != 0) v[i] = val(gen) * 0.25 - 3.0;
      y[i] = static_cast<int>(gen() % 2);
    }
    v[0] = -10.0;
    y[0] = 0;
    v[1] = 10.0;
    y[1] = 1;
    const auto got = roc_threshold(v, y, "x");
    const auto want = oracle::exhaustive_threshold(v, y);
    if (got.threshold != want.threshold || got.separation != want.j) ++mismatches;
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << mismatches << " mismatches in 200 instances, " << secs << " s";
  return {mismatches == 0 && secs < 5.0, os.str()};
}

// 2 -------------------------------------------------------------------------
Outcome classifier_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  const std::size_t n = 8;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("f" + std::to_string(i));
  std::size_t mismatches = 0, checked = 0;
  for (int draw = 0; draw < 20; ++draw) {
    std::vector<double> p0(n), p1(n);
    for (std::size_t i = 0; i < n; ++i) {
      p0[i] = u(gen);
      p1[i] = u(gen);
    }
    const double prior1 = u(gen);
    const auto prof = ClassProfiles::from_probabilities(names, {p0, p1}, {1.0 - prior1, prior1});
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<RecordCell> rec;
      std::vector<int> codes;
      for (std::size_t i = 0; i < n; ++i) {
        const bool up = mask & (1u << i);
        rec.push_back({names[i], up ? AbstractCell::Up : AbstractCell::Down});
        codes.push_back(up ? 2 : 1);
      }
      ++checked;
      if (classify(prof, rec).label != oracle::naive_bayes_label(p0, p1, 1.0 - prior1, prior1, codes)) ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << mismatches << " mismatches in " << checked << " records, " << secs << " s";
  return {mismatches == 0 && secs < 5.0, os.str()};
}

// 3 -------------------------------------------------------------------------
Outcome metric_identities() {
  std::size_t matrices = 0, failures = 0;
  const auto close = [](const Metric& m, bool defined, double want) {
    if (m.has_value() != defined) return false;
    return !defined || std::abs(*m - want) <= 1e-12;
  };
  for (std::size_t total = 1; total <= 40; ++total)
    for (std::size_t tp = 0; tp <= total; ++tp)
      for (std::size_t fp = 0; tp + fp <= total; ++fp)
        for (std::size_t tn = 0; tp + fp + tn <= total; ++tn) {
          const std::size_t fn = total - tp - fp - tn;
          const auto m = metrics({tp, fp, tn, fn});
          ++matrices;
          const double P = double(tp + fn), N = double(tn + fp);
          const double rec = P > 0 ? tp / P : 0.0;
          const double spec = N > 0 ? tn / N : 0.0;
          const double prec = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
          bool ok = close(m.recall, P > 0, rec) && close(m.precision, tp + fp > 0, prec) &&
                    close(m.balanced_accuracy, P > 0 && N > 0, 0.5 * (rec + spec)) &&
                    close(m.accuracy, true, double(tp + tn) / double(total));
          // F1 = 2PR/(P+R) is undefined when its own denominator vanishes.
          const bool f1_defined = P > 0 && tp + fp > 0 && prec + rec > 0;
          ok = ok && close(m.f1, f1_defined, f1_defined ? 2 * prec * rec / (prec + rec) : 0.0);
          if (!ok) ++failures;
        }
  std::ostringstream os;
  os << failures << " failures over " << matrices << " matrices";
  return {failures == 0, os.str()};
}

// 4 -------------------------------------------------------------------------
Outcome mcar() {
  const auto d = testutil::random_continuous(500, 20, 4);
  bool exact = true;
  std::ostringstream os;
  for (auto [m, want] : {std::pair{0.1, 1000u}, {0.2, 2000u}, {0.3, 3000u}}) {
    const auto got = missing_cell_count(inject_mcar(d, {MissingnessLevel(m), 99}));
    exact = exact && got == want;
    os << (m > 0.15 ? "/" : "") << got;
  }
  std::vector<double> per_column(20, 0.0);
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto out = inject_mcar(d, {MissingnessLevel(0.1), s});
    for (std::size_t c = 0; c < 20; ++c) per_column[c] += static_cast<double>(out.column(c).missing_count());
  }
  const double expected = 1000.0 * 1000.0 / 20.0;
  double chi2 = 0.0;
  for (double h : per_column) chi2 += (h - expected) * (h - expected) / expected;
  const double critical = 36.191;  // chi-square, df = 19, upper 1%
  os << " cells, column chi2 " << chi2 << " (critical " << critical << ")";
  return {exact && chi2 < critical, os.str()};
}

// 5 -------------------------------------------------------------------------
ImportanceReport scaled(const ImportanceReport& r, double c) {
  std::vector<ImportanceEntry> e;
  for (const auto& x : r.entries()) e.push_back({x.feature, x.importance * c});
  return ImportanceReport(r.model_name(), r.dataset_tag(), std::move(e));
}

Outcome stability_identities() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  const auto random_report = [&] {
    std::vector<ImportanceEntry> e;
    for (int i = 0; i < 25; ++i) e.push_back({"f" + std::to_string(i), u(gen)});
    return ImportanceReport("m", "t", std::move(e));
  };
  const auto base = random_report();
  const auto same = relative_change(base, {{0.1, base}, {0.2, base}, {0.3, base}}, 10);
  const bool zero = same.aggregate_mean == 0.0 && same.aggregate_std == 0.0;

  const ImportanceReport other("m", "t", {{"unrelated", 1.0}});
  const auto gone = relative_change(base, {{0.1, other}, {0.2, other}, {0.3, other}}, 10);
  const bool one = gone.aggregate_mean == 1.0;

  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_report();
    const ReportsByLevel levels{{0.1, random_report()}, {0.2, random_report()}, {0.3, random_report()}};
    const auto ref = relative_change(c, levels, 10);
    for (double k : {1e-8, 0.37, 3.0, 1e5}) {
      ReportsByLevel s;
      for (const auto& [m, r] : levels) s.emplace(m, scaled(r, k));
      const auto got = relative_change(scaled(c, k), s, 10);
      worst = std::max(worst, std::abs(got.aggregate_mean - ref.aggregate_mean) / ref.aggregate_mean);
    }
  }
  std::ostringstream os;
  os << "identical mean " << same.aggregate_mean << " sd " << same.aggregate_std << ", vanished mean "
     << gone.aggregate_mean << ", rescale rel. error " << worst;
  return {zero && one && worst < 1e-12, os.str()};
}

// 6 -------------------------------------------------------------------------
Outcome overlap_arithmetic() {
  std::vector<ImportanceEntry> a;
  for (int i = 0; i < 10; ++i) a.push_back({"f" + std::to_string(i), 20.0 - i});
  for (int i = 0; i < 10; ++i) a.push_back({"tail" + std::to_string(i), 1.0 / (i + 1)});
  const ImportanceReport complete("m", "t", a);
  bool ok = true;
  std::ostringstream os;
  for (int j = 0; j <= 10; ++j) {
    // j shared features on top, the rest replaced by names absent from a's top-10.
    std::vector<ImportanceEntry> b;
    for (int i = 0; i < j; ++i) b.push_back({"f" + std::to_string(i), 30.0 - i});
    for (int i = j; i < 10; ++i) b.push_back({"g" + std::to_string(i), 30.0 - i});
    for (int i = j; i < 10; ++i) b.push_back({"f" + std::to_string(i), 0.5 / (i + 1)});
    const double got = top_k_overlap_percent(complete, ImportanceReport("m", "t", b), 10);
    ok = ok && got == 10.0 * j;
    os << got << (j < 10 ? " " : "");
  }
  return {ok, os.str()};
}

// 7 -------------------------------------------------------------------------
Outcome synthetic_experiment() {
  std::vector<double> hits, ba0, ba30, ov30, secs;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto cohort = make_benchmark_cohort(seed);
    ExperimentConfig cfg;
    cfg.repeats = 10;
    cfg.seed = seed;
    const auto t0 = Clock::now();
    const auto r = run_experiment(cohort.data, cfg);
    secs.push_back(seconds_since(t0));
    const auto& cactus_result = r.models.at(0);
    const auto head = top_k(cactus_result.mean_importance.at(0.0), 10);
    std::size_t h = 0;
    for (const auto& e : head.entries())
      h += std::count(cohort.informative.begin(), cohort.informative.end(), e.feature);
    hits.push_back(static_cast<double>(h));
    ba0.push_back(*cactus_result.metrics.front().summary[0].mean);
    ba30.push_back(*cactus_result.metrics.back().summary[0].mean);
    ov30.push_back(cactus_result.overlap.points.back().percent);
  }
  const double m_hits = median(hits), m_ba0 = median(ba0), m_ba30 = median(ba30), m_ov = median(ov30);
  const double slowest = *std::max_element(secs.begin(), secs.end());
  std::ostringstream os;
  os << "median: informative in top-10 " << m_hits << ", BA m=0 " << m_ba0 << ", BA m=0.3 " << m_ba30
     << ", overlap m=0.3 " << m_ov << "%; slowest full grid (CACTUS + RF) " << slowest << " s";
  return {m_hits >= 9 && m_ba0 >= 0.90 && m_ba30 >= 0.80 && m_ov >= 70.0 && slowest < 60.0, os.str()};
}

// 8 -------------------------------------------------------------------------
Outcome determinism() {
  testutil::TempDir dir("accept_det");
  write_csv(make_benchmark_cohort(8).data, dir / "bench.csv");
  const auto run = [&](const std::string& out, std::size_t threads) {
    RunConfig cfg;
    cfg.input = dir / "bench.csv";
    cfg.target = "target";
    cfg.repeats = 3;
    cfg.seed = 8;
    cfg.forest.n_trees = 25;
    cfg.out = dir / out;
    cfg.threads = threads;
    return cmd_run(cfg).manifest;
  };
  const auto a = run("a", 1);
  const auto b = run("b", 4);
  const std::vector<std::string> checked{"metrics.json", "metrics.csv",  "stability.json", "stability.csv",
                                         "overlap.json", "overlap.csv", "heatmap.csv"};
  std::size_t equal = 0;
  for (const auto& name : checked) {
    std::string ha, hb;
    for (const auto& f : a["files"])
      if (f["name"] == name) ha = f["sha256"];
    for (const auto& f : b["files"])
      if (f["name"] == name) hb = f["sha256"];
    const bool disk = sha256_hex(read_file(dir / "a" / name)) == sha256_hex(read_file(dir / "b" / name));
    if (!ha.empty() && ha == hb && disk) ++equal;
  }
  std::ostringstream os;
  os << equal << "/" << checked.size() << " artifact hashes identical across 1 and 4 threads";
  return {equal == checked.size(), os.str()};
}

// 9 -------------------------------------------------------------------------
Outcome interchange() {
  testutil::TempDir dir("accept_io");
  const ImportanceReport lgbm("LGBM", "total", {{"psa/tpsa", 192.0}, {"nse", 390.4}, {"age, years", 12.5}, {"crp", 0.0}});
  write_file(dir / "lgbm.json", to_json(lgbm).dump());
  write_file(dir / "LGBM__total.csv", to_csv(lgbm));
  const auto from_json = import_external_report(dir / "lgbm.json");
  const auto from_csv = import_external_report(dir / "LGBM__total.csv");
  const bool order = lgbm.entries()[0].feature == "nse" && lgbm.entries()[1].feature == "psa/tpsa";

  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1e3);
  std::size_t bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ImportanceEntry> e;
    for (int i = 0; i < 30; ++i) e.push_back({"feat \"" + std::to_string(i) + "\",x", trial % 3 ? u(gen) : std::floor(u(gen) / 100)});
    const ImportanceReport r("M", "t+10%", e);
    write_file(dir / "r.json", to_json(r).dump());
    write_file(dir / "M__t+10%.csv", to_csv(r));
    if (!(import_external_report(dir / "r.json") == r && import_external_report(dir / "M__t+10%.csv") == r)) ++bad;
  }
  std::ostringstream os;
  os << "nse " << from_csv.entries()[0].importance << " ranked above psa/tpsa " << from_csv.entries()[1].importance
     << "; " << bad << " of 100 random reports failed to round-trip";
  return {order && from_json == lgbm && from_csv == lgbm && bad == 0, os.str()};
}

// 10 ------------------------------------------------------------------------
Outcome significance_range() {
  std::size_t separated = 0;
  bool in_range = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto cohort = make_benchmark_cohort(seed);
    const auto& d = cohort.data;
    const auto sig = significance(apply_abstraction(fit_abstraction(d), d));
    for (const auto& e : top_k(sig, 10).entries()) in_range = in_range && e.importance > 0.0 && e.importance <= 1.0;
    double min_inf = 2.0, max_noise = -1.0;
    for (const auto& e : sig.entries()) {
      const bool inf = std::count(cohort.informative.begin(), cohort.informative.end(), e.feature) > 0;
      if (inf)
        min_inf = std::min(min_inf, e.importance);
      else
        max_noise = std::max(max_noise, e.importance);
    }
    if (min_inf > max_noise) ++separated;
  }
  std::ostringstream os;
  os << "top-10 values in (0,1]: " << (in_range ? "yes" : "no") << "; informative > noise in " << separated
     << "/10 seeds";
  return {in_range && separated >= 9, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"threshold oracle equivalence", threshold_oracle},
      {"classifier oracle equivalence", classifier_oracle},
      {"metric identities", metric_identities},
      {"MCAR exactness and uniformity", mcar},
      {"stability identities", stability_identities},
      {"overlap arithmetic", overlap_arithmetic},
      {"synthetic cohort experiment", synthetic_experiment},
      {"determinism", determinism},
      {"interchange round-trip", interchange},
      {"significance range", significance_range},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail
              << std::endl;
    if (!o.pass) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
