// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "aime/aime.hpp"
#include "aime/cli.hpp"
#include "test_util.hpp"

using namespace aime;
using aime::test::random_matrix;
using aime::test::relative_frobenius;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SynthSpec surrogate_spec(SynthDesign design, std::uint64_t seed) {
  SynthSpec s;
  s.n = 600;
  s.p = 40;
  s.q = 40;
  s.n_signal = 10;
  s.noise_sd = 0.3;
  s.design = design;
  s.seed = seed;
  return s;
}

TrainConfig default_train(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  RngStream rng(20240601, 1);
  double worst = 0.0;
  std::string worst_arch;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const std::size_t p = 10 + rng.uniform_below(51);
    const std::size_t q = 10 + rng.uniform_below(51);
    const std::size_t d = 1 + rng.uniform_below(4);
    Network net = build_network(build_architecture(p, q, d), trial + 1);
    RngStream br(trial + 1, 99);
    for (auto& l : net.layers)
      for (double& v : l.bias) v = br.uniform(-0.5, 0.5);
    const Matrix x = random_matrix(6, p, trial, 1);
    const Matrix y = random_matrix(6, q, trial, 2);
    const double err = gradient_check(net, x, y, 1e-5, trial + 1);
    if (err > worst || worst_arch.empty()) {
      worst = std::max(worst, err);
      worst_arch = std::to_string(p) + "/" + std::to_string(q) + "/" + std::to_string(d);
    }
  }
  const double secs = seconds_since(t0);
  report(1, "gradient correctness", worst < 1e-4 && secs < 60.0,
         "max relative error " + fmt("%.3g", worst) + " (worst p/q/d " + worst_arch + ") over 20 architectures, " +
             fmt("%.1f", secs) + " s");
}

void architecture_fidelity() {
  const auto a = build_architecture(5459, 5703, 4);
  const bool pass = a.encoder_sizes == std::array<std::size_t, 3>{1092, 219, 9} &&
                    a.encoder_dropout == std::array<double, 3>{0.20, 0.10, 0.0} &&
                    a.decoder_sizes == std::array<std::size_t, 3>{10, 229, 1141} &&
                    a.decoder_dropout == std::array<double, 3>{0.0, 0.10, 0.20};
  std::ostringstream s;
  s << "encoder (" << a.encoder_sizes[0] << ", " << a.encoder_sizes[1] << ", " << a.encoder_sizes[2]
    << "), decoder (" << a.decoder_sizes[0] << ", " << a.decoder_sizes[1] << ", " << a.decoder_sizes[2] << ")";
  report(2, "architecture fidelity", pass, s.str());
}

void training_sanity() {
  const auto t0 = Clock::now();
  SynthSpec s;
  s.n = 200;
  s.p = 30;
  s.q = 30;
  s.design = SynthDesign::linear;
  s.seed = 1;
  const auto data = generate(s);
  const auto m = fit(data.x.matrix, data.y.matrix, 4, default_train(1));
  const double first = m.loss_history.front(), last = m.loss_history.back();
  const double secs = seconds_since(t0);
  report(3, "training sanity", last < 0.5 * first && secs < 30.0,
         "epoch-1 MSE " + fmt("%.4f", first) + ", epoch-200 MSE " + fmt("%.4f", last) + " (ratio " +
             fmt("%.3f", last / first) + "), " + fmt("%.1f", secs) + " s");
}

struct SeedOutcome {
  double aime_acc = 0.0;
  double cca_acc = 0.0;
  double cca_corr = 0.0;
  double recall = 0.0;
};

SeedOutcome run_surrogate(SynthDesign design, std::uint64_t seed, bool with_importance) {
  const auto data = generate(surrogate_spec(design, seed));
  SeedOutcome o;
  const auto model = fit(data.x.matrix, data.y.matrix, 4, default_train(seed));
  o.aime_acc = evaluate_embedding(embed(model, data.x.matrix), data.labels);
  const auto cca = fit_cca(data.x.matrix, data.y.matrix, 4);
  o.cca_acc = evaluate_embedding(cca.x_variates, data.labels);
  o.cca_corr = cca.correlations[0];
  if (with_importance) {
    const auto rep = permutation_importance(model, data.x.matrix, 10, seed);
    const auto k = data.signal_indices.size();
    std::size_t hits = 0;
    for (std::size_t r = 0; r < k; ++r)
      hits += std::binary_search(data.signal_indices.begin(), data.signal_indices.end(), rep.ranking[r]);
    o.recall = static_cast<double>(hits) / static_cast<double>(k);
  }
  return o;
}

std::vector<SeedOutcome> quadratic_runs;

void claim_surrogate() {
  const auto t0 = Clock::now();
  int wins = 0;
  bool all_low_corr = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto o = run_surrogate(SynthDesign::quadratic, seed, true);
    quadratic_runs.push_back(o);
    wins += (o.aime_acc - o.cca_acc) >= 0.25;
    all_low_corr = all_low_corr && o.cca_corr < 0.25;
    detail += " s" + std::to_string(seed) + "(aime " + fmt("%.3f", o.aime_acc) + " cca " + fmt("%.3f", o.cca_acc) +
              " rho1 " + fmt("%.3f", o.cca_corr) + ")";
  }
  const double secs = seconds_since(t0);
  report(4, "claim surrogate", wins >= 3 && all_low_corr && secs < 300.0,
         std::to_string(wins) + "/5 seeds with gap >= 0.25; CCA rho1 < 0.25 in all: " +
             (all_low_corr ? "yes" : "no") + ";" + detail + "; " + fmt("%.1f", secs) + " s");
}

void linear_parity() {
  int close = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto o = run_surrogate(SynthDesign::linear, seed, false);
    close += std::abs(o.aime_acc - o.cca_acc) <= 0.1;
    detail += " s" + std::to_string(seed) + "(aime " + fmt("%.3f", o.aime_acc) + " cca " + fmt("%.3f", o.cca_acc) + ")";
  }
  report(5, "linear parity", close >= 3, std::to_string(close) + "/5 seeds within 0.1;" + detail);
}

void importance_soundness() {
  // Exact zeros.
  Matrix x = random_matrix(40, 10, 6, 1);
  for (std::size_t i = 0; i < x.rows(); ++i) x(i, 2) = -1.5;
  TrainConfig cfg = default_train(6);
  cfg.epochs = 20;
  auto model = fit(x, random_matrix(40, 8, 6, 2), 3, cfg);
  for (std::size_t r = 0; r < model.network.layers[0].weights.rows(); ++r) model.network.layers[0].weights(r, 7) = 0.0;
  const auto rep = permutation_importance(model, x, 10, 6);
  const bool zeros = rep.scores[2] == 0.0 && rep.scores[7] == 0.0;

  // Exhaustive n = 3 oracle on a model whose hidden units stay in their linear region.
  TrainedModel lin;
  lin.architecture = build_architecture(2, 1, 2);
  lin.network = build_network(lin.architecture, 0);
  auto& L = lin.network.layers;
  L[0].weights = Matrix{{1.5, -0.7}};
  L[0].bias = {20.0};
  L[1].weights = Matrix{{0.8}};
  L[1].bias = {1.0};
  L[2].weights = Matrix{{1.2}};
  L[2].bias = {0.5};
  L[3].weights = Matrix{{1.0}, {-2.0}};
  L[3].bias = {0.0, 0.3};
  lin.input_means = {0.0, 0.0};
  lin.input_sds = {1.0, 1.0};
  lin.output_means = {0.0};
  lin.output_sds = {1.0};
  const Matrix x3{{0.3, -1.2}, {1.7, 0.4}, {-0.8, 0.9}};
  const Matrix base = embed(lin, x3);
  const std::size_t repeats = 60;
  bool oracle = true;
  double worst_z = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    std::array<std::size_t, 3> perm{0, 1, 2};
    std::vector<double> shifts;
    do {
      Matrix xp = x3;
      for (std::size_t i = 0; i < 3; ++i) xp(i, j) = x3(perm[i], j);
      shifts.push_back(squared_distance(embed(lin, xp), base));
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double mean = std::accumulate(shifts.begin(), shifts.end(), 0.0) / 6.0;
    double var = 0.0;
    for (double s : shifts) var += (s - mean) * (s - mean);
    const double se = std::sqrt(var / 6.0 / static_cast<double>(repeats));
    const double sampled = permutation_importance(lin, x3, repeats, 1).scores[j];
    const double z = std::abs(sampled - mean) / se;
    worst_z = std::max(worst_z, z);
    oracle = oracle && z <= 3.0;
  }

  int recall_ok = 0;
  std::string detail;
  for (std::size_t s = 0; s < quadratic_runs.size(); ++s) {
    recall_ok += quadratic_runs[s].recall >= 0.8;
    detail += " " + fmt("%.1f", quadratic_runs[s].recall);
  }
  report(6, "importance soundness", zeros && oracle && recall_ok >= 3,
         std::string("exact zeros: ") + (zeros ? "yes" : "no") + "; exhaustive oracle worst |z| " +
             fmt("%.2f", worst_z) + "; recall >= 0.8 in " + std::to_string(recall_ok) + "/5 seeds (" + detail + " )");
}

void cca_oracles() {
  const Matrix a = random_matrix(200, 1, 70, 1);
  Matrix b = random_matrix(200, 1, 70, 2);
  for (std::size_t i = 0; i < 200; ++i) b(i, 0) += 0.4 * a(i, 0);
  const auto ma = column_means(a), mb = column_means(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    sab += (a(i, 0) - ma[0]) * (b(i, 0) - mb[0]);
    saa += (a(i, 0) - ma[0]) * (a(i, 0) - ma[0]);
    sbb += (b(i, 0) - mb[0]) * (b(i, 0) - mb[0]);
  }
  const double pearson_err = std::abs(fit_cca(a, b, 1, 0.0).correlations[0] - std::abs(sab / std::sqrt(saa * sbb)));

  const Matrix x = random_matrix(100, 5, 71);
  double self_err = 0.0;
  for (double c : fit_cca(x, x, 5, 0.0).correlations) self_err = std::max(self_err, std::abs(c - 1.0));

  double null_max = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    null_max = std::max(null_max,
                        fit_cca(random_matrix(2000, 2, seed, 10), random_matrix(2000, 2, seed, 11), 2, 0.0).correlations[0]);
  report(7, "CCA oracles", pearson_err < 1e-10 && self_err < 1e-8 && null_max < 0.15,
         "|rho - |pearson|| " + fmt("%.2g", pearson_err) + ", self max |rho-1| " + fmt("%.2g", self_err) +
             ", null max rho1 " + fmt("%.4f", null_max));
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "aime");
  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

void determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "aime_acceptance_determinism";
  fs::remove_all(root);
  bool ok = true;
  for (const char* run : {"r1", "r2"}) {
    const std::string dir = (root / run).string();
    fs::create_directories(dir);
    ok = ok && cli({"synth", "--n", "120", "--p", "20", "--q", "15", "--n-signal", "5", "--seed", "4", "--out-prefix",
                    dir + "/d"}) == 0;
    ok = ok && cli({"train", "--x", dir + "/d.x.tsv", "--y", dir + "/d.y.tsv", "--dim", "3", "--epochs", "30",
                    "--seed", "4", "--model-out", dir + "/m.bin"}) == 0;
    ok = ok && cli({"importance", "--model", dir + "/m.bin", "--x", dir + "/d.x.tsv", "--seed", "4", "--out",
                    dir + "/imp.tsv"}) == 0;
    ok = ok && cli({"cca", "--x", dir + "/d.x.tsv", "--y", dir + "/d.y.tsv", "--k", "3", "--out-prefix",
                    dir + "/c"}) == 0;
  }
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "r1")) {
    const auto name = entry.path().filename();
    ++compared;
    if (!fs::exists(root / "r2" / name) ||
        read_file(entry.path().string()) != read_file((root / "r2" / name).string())) {
      ++differing;
    }
  }
  fs::remove_all(root);
  report(8, "determinism", ok && compared >= 10 && differing == 0,
         std::to_string(compared) + " files compared across two runs, " + std::to_string(differing) + " differ" +
             (ok ? "" : "; a command failed"));
}

void linear_algebra() {
  RngStream rng(909, 0);
  double svd_worst = 0.0, chol_worst = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const std::size_t m = 1 + rng.uniform_below(50), n = 1 + rng.uniform_below(50);
    const Matrix a = random_matrix(m, n, t, 1);
    const Svd s = svd_thin(a);
    Matrix us = s.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
      for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= s.s[j];
    svd_worst = std::max(svd_worst, relative_frobenius(matmul_nt(us, s.v), a));

    const std::size_t k = 1 + rng.uniform_below(50);
    const Matrix b = random_matrix(k, k, t, 2);
    Matrix spd = matmul_nt(b, b);
    for (std::size_t i = 0; i < k; ++i) spd(i, i) += 1.0;
    const Matrix l = cholesky(spd);
    chol_worst = std::max(chol_worst, relative_frobenius(matmul_nt(l, l), spd));
  }
  report(9, "linear-algebra kernels", svd_worst < 1e-8 && chol_worst < 1e-8,
         "worst relative Frobenius error: SVD " + fmt("%.2g", svd_worst) + ", Cholesky " + fmt("%.2g", chol_worst) +
             " over 100 instances");
}

}  // namespace

int main() {
  gradient_correctness();
  architecture_fidelity();
  training_sanity();
  claim_surrogate();
  linear_parity();
  importance_soundness();
  cca_oracles();
  determinism();
  linear_algebra();
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
