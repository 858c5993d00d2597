// Copyright 2026 The MTDA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Arguments restrict the run to the listed
// criteria, e.g. `mtda_acceptance 1 2 9`.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gen.hpp"
#include "mtda/adversarial.hpp"
#include "mtda/bench.hpp"
#include "mtda/curriculum.hpp"
#include "mtda/heads.hpp"
#include "mtda/losses.hpp"

namespace fs = std::filesystem;
using mtda::nn::Matrix;
using mtda::testing::Gen;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Desk-scale benchmark: N=3, n_c=4, shifts 0.1/0.3/0.6.
mtda::BenchSetup desk_setup() {
  mtda::BenchSetup s;
  s.data.num_classes = 4;
  s.data.num_targets = 3;
  s.data.shifts = {0.1, 0.3, 0.6};
  s.data.per_class = 50;
  s.hp = mtda::desk_scale_hyperparams();
  return s;
}

mtda::HyperParams desk_hp(int K_star, int bs, int bt) {
  auto hp = mtda::desk_scale_hyperparams();
  hp.K = 1500;
  hp.K_star = K_star;
  hp.batch_source = bs;
  hp.batch_target = bt;
  hp.tau = 0.7;
  return hp;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

// Runs shared between criteria, computed on first use.
struct Runs {
  std::vector<mtda::CellRun> k3;      // K*=3, (48,16)
  std::vector<mtda::CellRun> k1;      // K*=1, (48,16), with probes
  std::vector<mtda::CellRun> b3232;   // K*=3, (32,32)
  double k3_seconds = 0.0, k1_seconds = 0.0, b3232_seconds = 0.0;

  static void fill(std::vector<mtda::CellRun>& out, double& seconds, const mtda::HyperParams& hp, const char* tag) {
    if (!out.empty()) return;
    const auto setup = desk_setup();
    const auto t0 = Clock::now();
    for (auto seed : kSeeds) {
      out.push_back(mtda::run_cell(setup, hp, seed));
      const auto& r = out.back().result;
      std::cerr << "  " << tag << " seed " << seed << ": final " << fmt(r.final_report.average_target_accuracy)
                << ", source-only " << fmt(r.source_only ? r.source_only->average_target_accuracy : 0.0) << " ("
                << fmt(out.back().seconds, 1) << " s)\n";
    }
    seconds = since(t0);
  }

  void need_k3() { fill(k3, k3_seconds, desk_hp(3, 48, 16), "K*=3 48/16"); }
  void need_k1() {
    auto hp = desk_hp(1, 48, 16);
    hp.probe_fractions = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    fill(k1, k1_seconds, hp, "K*=1 48/16");
  }
  void need_b3232() { fill(b3232, b3232_seconds, desk_hp(3, 32, 32), "K*=3 32/32"); }
};

std::vector<double> finals(const std::vector<mtda::CellRun>& runs) {
  std::vector<double> out;
  for (const auto& c : runs) out.push_back(c.result.final_report.average_target_accuracy);
  return out;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  Gen g(101);
  int edge_fail = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto labels = g.labels(g.integer(1, 16), g.integer(1, 6));
    const auto got = mtda::build_edge_targets(labels);
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = 0; j < labels.size(); ++j)
        if (got.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) !=
            (labels[i] == labels[j] ? 1.0 : 0.0))
          ++edge_fail;
  }

  double bce_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = g.integer(2, 12);
    const Matrix<double> aff = g.matrix(n, n, 0.0, 1.0);
    const auto targets = mtda::build_edge_targets(g.labels(n, 3));
    double total = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double p = std::clamp(aff(i, j), mtda::kProbabilityEpsilon, 1.0 - mtda::kProbabilityEpsilon);
        const double t = targets.values(i, j);
        total += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        ++count;
      }
    bce_err = std::max(bce_err, std::abs(mtda::bce_edge<double>(aff, targets).value - total / count));
  }

  double row_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int b = g.integer(2, 20);
    const Matrix<double> n = mtda::normalize_affinity<double>(g.matrix(b, b, 0.0, 1.0));
    row_err = std::max(row_err, (n.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }

  // Reversal: d(loss)/d(theta) through the GRL is -lambda times the finite difference without it.
  double grl_err = 0.0;
  mtda::Discriminator<double> disc(2);
  disc.reset(g.rng());
  Matrix<double> theta(1, 2);
  theta << 0.7, -0.4;
  const Matrix<double> x = g.matrix(3, 1);
  const std::vector<int> flags{0, 1, 1};
  auto loss = [&] { return mtda::adversarial_loss<double>(disc.forward(x * theta), flags).value; };
  for (double lambda : {0.5, 1.0, 2.0}) {
    const mtda::GradientReversal<double> grl{lambda};
    const auto adv = mtda::adversarial_loss<double>(disc.forward(grl.forward(x * theta)), flags);
    const Matrix<double> dtheta = x.transpose() * grl.backward(disc.backward(adv.grad.col(0)));
    for (Eigen::Index j = 0; j < 2; ++j)
      grl_err = std::max(grl_err, mtda::testing::rel_err(dtheta(0, j), -lambda * mtda::testing::central_difference(theta, 0, j, loss)));
  }

  const double seconds = since(t0);
  Outcome o;
  o.pass = edge_fail == 0 && bce_err <= 1e-8 && row_err <= 1e-6 && grl_err <= 1e-3 && seconds < 30.0;
  o.detail = "edge mismatches " + std::to_string(edge_fail) + ", bce max err " + sci(bce_err) + " (<= 1e-8), row-sum max err " +
             sci(row_err) + " (<= 1e-6), GRL max rel err " + sci(grl_err) + " (<= 1e-3), " + fmt(seconds, 2) + " s (< 30)";
  return o;
}

Outcome criterion2() {
  const auto reg = mtda::make_synthetic(4, 3, {0.1, 0.3, 0.6}, 50, 7);
  mtda::HyperParams hp;
  hp.K = 1500;
  hp.K_star = 3;
  mtda::DryRunLearner learner(4, 7);
  const auto t0 = Clock::now();
  const auto r = mtda::run(reg, hp, learner);
  const double seconds = since(t0);

  bool ok = true;
  std::vector<std::string> why;
  const auto seq = r.domain_sequence();
  if (seq.size() != 9) {
    ok = false;
    why.push_back("sequence length " + std::to_string(seq.size()));
  } else {
    for (int pass = 0; pass < 3; ++pass) {
      std::vector<int> ids(seq.begin() + pass * 3, seq.begin() + pass * 3 + 3);
      std::sort(ids.begin(), ids.end());
      if (ids != std::vector<int>{1, 2, 3}) {
        ok = false;
        why.push_back("pass " + std::to_string(pass + 1) + " does not visit each domain once");
      }
    }
  }
  if (r.total_adaptation_iterations != 3 * 1500 || learner.adapt_steps() != 3 * 1500) {
    ok = false;
    why.push_back("total iterations " + std::to_string(r.total_adaptation_iterations));
  }
  std::set<mtda::SampleId> seen;
  for (std::size_t i = 0; i < r.ledger.size(); ++i) {
    const auto& e = r.ledger[i];
    if (!seen.insert(e.id).second) {
      ok = false;
      why.push_back("duplicate ledger entry");
    }
    if (i >= r.ledger.origin_count() && !(e.confidence > hp.tau)) {
      ok = false;
      why.push_back("ledger entry at or below tau");
    }
  }
  std::size_t prev = r.ledger.origin_count();
  for (const auto& v : r.visits) {
    if (v.ledger_size < prev) {
      ok = false;
      why.push_back("ledger shrank");
    }
    prev = v.ledger_size;
  }
  if (seconds >= 1.0) ok = false;

  std::string seq_text;
  for (int d : seq) seq_text += std::to_string(d);
  Outcome o;
  o.pass = ok;
  o.detail = "sequence " + seq_text + ", " + std::to_string(r.total_adaptation_iterations) + " iterations, ledger " +
             std::to_string(r.ledger.size()) + " (" + std::to_string(r.ledger.size() - r.ledger.origin_count()) +
             " pseudo), " + fmt(seconds, 3) + " s (< 1)";
  for (const auto& w : why) o.detail += "; " + w;
  return o;
}

// The engine's own first pass (re-ranked before every visit) from a converged
// source model; 500 iterations per visit as in the K*=3 desk schedule.
Outcome criterion3() {
  const auto setup = desk_setup();
  auto hp = setup.hp;
  hp.K = 500;
  hp.K_star = 1;
  hp.K_prime = 0;
  const auto t0 = Clock::now();
  int ascending = 0;
  std::string orders;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cell = mtda::run_cell(setup, hp, seed);
    const auto& r = cell.result;
    std::string order;
    for (int id : r.passes.at(0).order) order += std::to_string(id);
    if (order == "123") ++ascending;
    orders += (orders.empty() ? "" : " ") + order + (r.source.converged ? "" : "*");
    std::cerr << "  seed " << seed << ": first-pass order " << order << " (source " << r.source.iterations << " iters"
              << (r.source.converged ? ", converged" : ", not converged") << ", " << fmt(cell.seconds, 1) << " s)\n";
  }
  const double seconds = since(t0);
  Outcome o;
  o.pass = ascending >= 4 && seconds < 600.0;
  o.detail = std::to_string(ascending) + "/5 seeds ascending (orders " + orders + "; * = source not converged), " +
             fmt(seconds, 1) + " s (< 600)";
  return o;
}

Outcome criterion4(Runs& runs) {
  runs.need_k3();
  std::vector<double> base;
  for (const auto& c : runs.k3) base.push_back(c.result.source_only ? c.result.source_only->average_target_accuracy : 0.0);
  const double adapted = mean(finals(runs.k3)), baseline = mean(base);
  Outcome o;
  o.pass = adapted >= baseline + 0.05 && runs.k3_seconds < 1200.0;
  o.detail = "adapted " + fmt(100 * adapted, 2) + "% vs source-only " + fmt(100 * baseline, 2) + "% (gain " +
             fmt(100 * (adapted - baseline), 2) + " >= 5 points), " + fmt(runs.k3_seconds, 1) + " s (< 1200)";
  return o;
}

Outcome criterion5(Runs& runs) {
  runs.need_k3();
  runs.need_k1();
  const double k3 = mean(finals(runs.k3)), k1 = mean(finals(runs.k1));
  const double seconds = runs.k3_seconds + runs.k1_seconds;
  Outcome o;
  o.pass = k3 >= k1 - 0.005 && seconds < 2700.0;
  o.detail = "K*=3 " + fmt(100 * k3, 2) + "% vs K*=1 " + fmt(100 * k1, 2) + "% (need >= K*=1 - 0.5), " +
             fmt(seconds, 1) + " s (< 2700)";
  return o;
}

Outcome criterion6(Runs& runs) {
  runs.need_k3();
  // Additions per (domain, pass), summed over seeds.
  std::map<int, std::map<int, long long>> added;
  for (const auto& c : runs.k3)
    for (const auto& v : c.result.visits) added[v.domain][v.pass] += v.added;
  int decaying = 0;
  std::string cells;
  for (const auto& [domain, per_pass] : added) {
    bool non_increasing = true;
    long long prev = std::numeric_limits<long long>::max();
    cells += (cells.empty() ? "" : "; ") + std::string("domain ") + std::to_string(domain) + ":";
    for (const auto& [pass, n] : per_pass) {
      if (n > prev) non_increasing = false;
      prev = n;
      cells += " " + std::to_string(n);
    }
    if (non_increasing) ++decaying;
  }
  Outcome o;
  o.pass = decaying >= 2;
  o.detail = std::to_string(decaying) + "/" + std::to_string(added.size()) + " domains non-increasing (" + cells + ")";
  return o;
}

Outcome criterion7(Runs& runs) {
  runs.need_k3();
  runs.need_b3232();
  const double a = mean(finals(runs.k3)), b = mean(finals(runs.b3232));
  Outcome o;
  o.pass = a >= b - 0.005;
  o.detail = "(48,16) " + fmt(100 * a, 2) + "% vs (32,32) " + fmt(100 * b, 2) + "% (need >= (32,32) - 0.5), " +
             fmt(runs.b3232_seconds, 1) + " s for (32,32)";
  return o;
}

Outcome criterion8(Runs& runs) {
  runs.need_k1();
  long long inc_first = 0, cor_first = 0, inc_last = 0, cor_last = 0;
  bool complete = true;
  for (const auto& c : runs.k1)
    for (const auto& v : c.result.visits) {
      if (v.probes.size() != 4) {
        complete = false;
        continue;
      }
      inc_first += v.probes[1].incorrect - v.probes[0].incorrect;
      cor_first += v.probes[1].correct - v.probes[0].correct;
      inc_last += v.probes[3].incorrect - v.probes[2].incorrect;
      cor_last += v.probes[3].correct - v.probes[2].correct;
    }
  // A third that adds incorrect samples without net correct ones has an unbounded ratio.
  auto ratio = [](long long inc, long long cor) {
    if (cor > 0) return static_cast<double>(inc) / static_cast<double>(cor);
    return inc > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  const double first = ratio(inc_first, cor_first), last = ratio(inc_last, cor_last);
  Outcome o;
  o.pass = complete && last > first;
  auto signed_count = [](long long v) { return (v >= 0 ? "+" : "") + std::to_string(v); };
  o.detail = "first third " + signed_count(inc_first) + " incorrect / " + signed_count(cor_first) +
             " correct (ratio " + fmt(first) + "), final third " + signed_count(inc_last) + " / " +
             signed_count(cor_last) + " (ratio " + fmt(last) + ")";
  if (!complete) o.detail += "; probes missing";
  return o;
}

std::string stripped_manifest(const fs::path& run) {
  std::ifstream in(run / "manifest.json");
  if (!in) return {};
  auto j = nlohmann::json::parse(in);
  j.erase("timestamps");
  return j.dump();
}

Outcome criterion9() {
  const fs::path root = fs::temp_directory_path() / ("mtda_accept_det_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string args =
      " train --synthetic n_c=3 N=2 shifts=0.2,0.5 per_class=20 --K 60 --Kstar 2 --Kprime 10 --Bs 24 --Bt 8 "
      "--set source.max_iters=100 --seed 11 --out ";
  // Both runs use the same output path, since the config echo records it.
  const fs::path out = root / "run";
  const std::string cmd = std::string(MTDA_CLI_PATH) + args + out.string() + " > /dev/null 2>&1";
  int codes[2];
  std::string a, b;
  std::stringstream sa, sb;
  for (int i = 0; i < 2; ++i) {
    fs::remove_all(out);
    codes[i] = std::system(cmd.c_str());
    std::ifstream m(out / "metrics.csv");
    (i == 0 ? sa : sb) << m.rdbuf();
    (i == 0 ? a : b) = stripped_manifest(out);
  }
  fs::remove_all(root);
  Outcome o;
  o.pass = codes[0] == 0 && codes[1] == 0 && !a.empty() && a == b;
  o.detail = std::string("manifests ") + (a == b && !a.empty() ? "byte-equal" : "differ") + " after removing timestamps (" +
             std::to_string(a.size()) + " bytes); metrics.csv " + (sa.str() == sb.str() ? "byte-equal" : "differs");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  Runs runs;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1},
      {2, criterion2},
      {3, criterion3},
      {4, [&] { return criterion4(runs); }},
      {5, [&] { return criterion5(runs); }},
      {6, [&] { return criterion6(runs); }},
      {7, [&] { return criterion7(runs); }},
      {8, [&] { return criterion8(runs); }},
      {9, criterion9},
  };
  int failures = 0;
  for (const auto& [n, check] : criteria) {
    if (!wanted(n)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
