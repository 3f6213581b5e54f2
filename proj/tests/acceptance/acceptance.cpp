// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "retseg/augment.hpp"
#include "retseg/checkpoint.hpp"
#include "retseg/filters.hpp"
#include "retseg/metrics.hpp"
#include "retseg/pipeline.hpp"
#include "retseg/report.hpp"
#include "retseg/tensor.hpp"
#include "retseg/trainer.hpp"
#include "support/dataset.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"
#include "support/unet_gradcheck.hpp"

using namespace retseg;
using synthetic::random_tensor;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void expect(Outcome& o, bool cond, const std::string& what) {
  if (cond) return;
  if (o.pass) o.detail.clear();
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what;
  o.pass = false;
}

std::vector<double> as_doubles(std::span<const float> v) { return {v.begin(), v.end()}; }

// ---------------------------------------------------------------------------

Outcome efficacy_ratio_pairs() {
  struct Pair {
    double is, dl, er;
  };
  const Pair pairs[] = {{0.7708, 0.3903, 1.9748}, {0.7668, 0.3895, 1.9686}, {0.7637, 0.3969, 1.9241},
                        {0.7660, 0.3902, 1.9630}, {0.7519, 0.4273, 1.7596}, {0.7465, 0.4365, 1.7101}};
  Outcome o;
  double worst = 0;
  for (const auto& p : pairs) {
    const double d = std::fabs(efficacy_ratio(p.is, p.dl) - p.er);
    worst = std::max(worst, d);
    expect(o, d <= 1e-3, fmt("ER(%.4f, %.4f) off by %.2e", p.is, p.dl, d));
  }
  if (o.pass) o.detail = fmt("6 pairs, max |dER| = %.2e (tol 1e-3)", worst);
  return o;
}

Outcome convolution_oracle() {
  Outcome o;
  Rng rng(2024);
  double worst = 0;
  for (int c = 0; c < 100; ++c) {
    const int w = 1 + static_cast<int>(rng.below(24)), h = 1 + static_cast<int>(rng.below(24));
    const int r = static_cast<int>(rng.below(4));
    const Border border = c % 2 ? Border::Reflect : Border::Replicate;
    const GrayImage img = synthetic::random_image(w, h, 5000 + c);
    std::vector<float> k((2 * r + 1) * (2 * r + 1));
    for (float& v : k) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const FloatField out = convolve2d(img, Kernel2D(r, k), border);
    const auto ref = oracle::convolve(as_doubles(img.pixels()), w, h, as_doubles(k), r, border == Border::Reflect);
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::fabs(out.pixels()[i] - ref[i]));
  }
  expect(o, worst <= 1e-6, fmt("direct convolution max error %.2e > 1e-6", worst));

  double sep = 0;
  for (int c = 0; c < 20; ++c) {
    const int w = 8 + static_cast<int>(rng.below(40)), h = 8 + static_cast<int>(rng.below(40));
    const GaussianParams p = GaussianParams::with_sigma(0.5 + 2.5 * rng.uniform01());
    const GrayImage img = synthetic::random_image(w, h, 6000 + c);
    const GrayImage fast = gaussian_blur(img, p);
    const auto ref = oracle::convolve(as_doubles(img.pixels()), w, h, as_doubles(gaussian_kernel(p).weights()),
                                      p.radius, false);
    for (std::size_t i = 0; i < ref.size(); ++i)
      sep = std::max(sep, std::fabs(fast.pixels()[i] - std::clamp(ref[i], 0.0, 1.0)));
  }
  expect(o, sep <= 1e-5, fmt("separable gaussian max error %.2e > 1e-5", sep));
  if (o.pass) o.detail = fmt("100 cases max %.2e (tol 1e-6); separable gaussian max %.2e (tol 1e-5)", worst, sep);
  return o;
}

// --- gradients ---------------------------------------------------------------

template <class T>
Tensor4<T> away_from_zero(Shape4 s, std::uint64_t seed) {
  Tensor4<T> t = random_tensor<T>(s, seed, 0.05, 1.0);
  Rng rng(seed + 1);
  for (auto& v : t.data())
    if (rng.uniform01() < 0.5) v = -v;
  return t;
}

template <class T>
Tensor4<T> spaced_tensor(Shape4 s, std::uint64_t seed) {
  std::vector<T> v(s.count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(-1.0 + 0.05 * i);
  Rng rng(seed);
  rng.shuffle(v);
  return Tensor4<T>(s, v);
}

// Largest relative error per primitive over `seeds` seeds at precision T.
template <class T>
std::map<std::string, double> primitive_errors(int seeds) {
  std::map<std::string, double> worst;
  auto note = [&](const char* name, double e) { worst[name] = std::max(worst[name], e); };
  for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(seeds); ++seed) {
    {
      Tensor4<T> x = random_tensor<T>({2, 3, 5, 5}, seed);
      Tensor4<T> w = random_tensor<T>({4, 3, 3, 3}, seed + 100);
      Tensor4<T> b = random_tensor<T>({4, 1, 1, 1}, seed + 200);
      Tensor4<T> r = random_tensor<T>({2, 4, 5, 5}, seed + 300);
      auto g = nn::conv2d_backward<T>(x, w, r);
      auto loss = [&] { return gradcheck::project(nn::conv2d<T>(x, w, b.data()), r); };
      note("conv2d", gradcheck::relative_error(x, g.dx, loss));
      note("conv2d", gradcheck::relative_error(w, g.dweight, loss));
      note("conv2d", gradcheck::relative_error(b, g.dbias, loss));
    }
    {
      Tensor4<T> x = spaced_tensor<T>({2, 2, 4, 6}, seed);
      auto p = nn::maxpool2(x);
      Tensor4<T> r = random_tensor<T>(p.y.shape(), seed + 1);
      Tensor4<T> dx = nn::maxpool2_backward<T>(r, p.argmax, x.shape());
      note("maxpool2", gradcheck::relative_error(x, dx, [&] { return gradcheck::project(nn::maxpool2(x).y, r); }));
    }
    {
      Tensor4<T> x = random_tensor<T>({1, 2, 3, 3}, seed);
      Tensor4<T> w = random_tensor<T>({2, 3, 2, 2}, seed + 10);
      Tensor4<T> b = random_tensor<T>({3, 1, 1, 1}, seed + 20);
      Tensor4<T> r = random_tensor<T>({1, 3, 6, 6}, seed + 30);
      auto g = nn::upconv2_backward<T>(x, w, r);
      auto loss = [&] { return gradcheck::project(nn::upconv2<T>(x, w, b.data()), r); };
      note("upconv2", gradcheck::relative_error(x, g.dx, loss));
      note("upconv2", gradcheck::relative_error(w, g.dweight, loss));
      note("upconv2", gradcheck::relative_error(b, g.dbias, loss));
    }
    {
      Tensor4<T> x = away_from_zero<T>({2, 2, 3, 3}, seed);
      Tensor4<T> r = random_tensor<T>(x.shape(), seed + 5);
      note("relu", gradcheck::relative_error(x, nn::relu_backward(nn::relu(x), r),
                                             [&] { return gradcheck::project(nn::relu(x), r); }));
      Tensor4<T> z = random_tensor<T>(x.shape(), seed + 6, -4.0, 4.0);
      note("sigmoid", gradcheck::relative_error(z, nn::sigmoid_backward(nn::sigmoid(z), r),
                                                [&] { return gradcheck::project(nn::sigmoid(z), r); }));
    }
    {
      Tensor4<T> a = random_tensor<T>({1, 2, 2, 3}, seed), b = random_tensor<T>({1, 1, 2, 3}, seed + 1);
      Tensor4<T> r = random_tensor<T>({1, 3, 2, 3}, seed + 2);
      auto [da, db] = nn::split_channels(r, 2);
      auto loss = [&] { return gradcheck::project(nn::concat_channels(a, b), r); };
      note("concat", gradcheck::relative_error(a, da, loss));
      note("concat", gradcheck::relative_error(b, db, loss));
    }
    {
      Tensor4<T> p = random_tensor<T>({1, 1, 4, 4}, seed, 0.05, 0.95);
      Tensor4<T> t = random_tensor<T>(p.shape(), seed + 1, 0.0, 1.0);
      for (auto& v : t.data()) v = v >= T(0.5) ? T(1) : T(0);
      auto d = nn::soft_dice_loss(p, t);
      note("soft_dice", gradcheck::relative_error(p, d.dprobs, [&] { return double(nn::soft_dice_loss(p, t).loss); }));
    }
  }
  return worst;
}

template <class T>
double end_to_end_error(int seeds) {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(seeds); ++seed)
    worst = std::max(worst, gradcheck::unet_end_to_end<T>(seed).relative_error);
  return worst;
}

Outcome gradient_suite() {
  constexpr int kSeeds = 20;
  constexpr double kTol32 = 1e-3, kTol64 = 1e-4;
  Outcome o;
  const auto f = primitive_errors<float>(kSeeds);
  const auto d = primitive_errors<double>(kSeeds);
  double pf = 0, pd = 0;
  for (const auto& [name, e] : f) {
    pf = std::max(pf, e);
    expect(o, e <= kTol32, "32-bit " + name + fmt(" error %.2e", e));
  }
  for (const auto& [name, e] : d) {
    pd = std::max(pd, e);
    expect(o, e <= kTol64, "64-bit " + name + fmt(" error %.2e", e));
  }
  const double ef = end_to_end_error<float>(kSeeds), ed = end_to_end_error<double>(kSeeds);
  expect(o, ef <= kTol32, fmt("32-bit end-to-end error %.2e", ef));
  expect(o, ed <= kTol64, fmt("64-bit end-to-end error %.2e", ed));
  if (o.pass)
    o.detail = fmt("%g primitives x 20 seeds: 32-bit max %.2e, 64-bit max %.2e; ", double(f.size()), pf, pd) +
               fmt("end-to-end ws16 x 20 seeds: 32-bit %.2e, 64-bit %.2e", ef, ed);
  return o;
}

// --- training ----------------------------------------------------------------

bool same_bytes(const ParameterList<float>& a, const ParameterList<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a[i].value.data(), y = b[i].value.data();
    if (a[i].name != b[i].name || x.size() != y.size() ||
        std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) != 0)
      return false;
  }
  return true;
}

bool same_history(const TrainHistory& a, const TrainHistory& b) {
  if (a.epochs.size() != b.epochs.size() || a.steps != b.steps || a.best_epoch != b.best_epoch) return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const auto &x = a.epochs[i], &y = b.epochs[i];
    const double u[] = {x.train_loss, x.val.is, x.val.acc, x.val.rec, x.val.dl, x.val.dc};
    const double v[] = {y.train_loss, y.val.is, y.val.acc, y.val.rec, y.val.dl, y.val.dc};
    if (x.epoch != y.epoch || std::memcmp(u, v, sizeof u) != 0) return false;
  }
  return true;
}

Outcome overfit_sanity() {
  constexpr std::uint64_t kSeed = 0;
  const auto samples = fixtures::overfit_samples(64, 4);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 2;
  tc.learning_rate = fixtures::kOverfitLearningRate;
  tc.seed = kSeed;

  UNet<float> a(UNetConfig::reti_unet1(16), kSeed), b(UNetConfig::reti_unet1(16), kSeed);
  const TrainResult ra = train(a, samples, samples, tc);
  const TrainResult rb = train(b, samples, samples, tc);
  double best = 0;
  int first = 0;
  for (const auto& e : ra.history.epochs) {
    best = std::max(best, e.val.is);
    if (!first && e.val.is >= 0.90) first = e.epoch;
  }
  const double final_iou = evaluate(a, samples).is;

  Outcome o;
  expect(o, best >= 0.90, fmt("best training IoU %.4f < 0.90", best));
  expect(o, same_history(ra.history, rb.history) && same_bytes(a.parameters(), b.parameters()),
         "second run with the same seed differs");
  if (o.pass)
    o.detail = fmt("training IoU >= 0.90 at epoch %g, best %.4f, final %.4f; rerun identical (%.1f s/run)", first,
                   best, final_iou, ra.history.training_seconds);
  return o;
}

// --- metrics -----------------------------------------------------------------

Outcome metric_oracles() {
  Outcome o;
  double identity = 0;
  std::vector<std::pair<BinaryMask, BinaryMask>> all;
  ConfusionCounts micro;
  auto check_against = [&](const ConfusionCounts& c, const oracle::Counts& k, const char* what) {
    expect(o, c == ConfusionCounts{k.tp, k.fp, k.tn, k.fn}, std::string(what) + ": confusion differs");
    const HardMetrics h = hard_metrics(c);
    // set definitions: |P&G|/|P|G|, 2|P&G|/(|P|+|G|), agreement/total, |P&G|/|G|
    const std::uint64_t inter = k.tp, uni = k.tp + k.fp + k.fn, p = k.tp + k.fp, g = k.tp + k.fn;
    const double iou = uni ? double(inter) / double(uni) : 1.0;
    const double dice = p + g ? double(2 * inter) / double(p + g) : 1.0;
    const double acc = double(k.tp + k.tn) / double(k.tp + k.fp + k.tn + k.fn);
    const double rec = g ? double(inter) / double(g) : 1.0;
    expect(o, h.iou == iou && h.dice == dice && h.accuracy == acc && h.recall == rec,
           std::string(what) + ": metric differs from the set definition");
    identity = std::max(identity, std::fabs(h.dice - 2 * h.iou / (1 + h.iou)));
  };
  Rng rng(77);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const int w = 1 + static_cast<int>(rng.below(32)), h = 1 + static_cast<int>(rng.below(32));
    BinaryMask pred = synthetic::random_mask(w, h, 100 + s, rng.uniform01());
    BinaryMask gt = synthetic::random_mask(w, h, 900 + s, rng.uniform01());
    const ConfusionCounts c = confusion(pred, gt);
    check_against(c, oracle::enumerate({{pred, gt}}), "pair");
    micro += c;
    all.emplace_back(std::move(pred), std::move(gt));
  }
  check_against(micro, oracle::enumerate(all), "micro-average");
  expect(o, identity <= 1e-12, fmt("hard dice identity off by %.2e", identity));
  if (o.pass) o.detail = fmt("50 pairs + micro-average exact; max |Dice - 2IoU/(1+IoU)| = %.2e", identity);
  return o;
}

// --- dataset -----------------------------------------------------------------

Outcome dataset_arithmetic() {
  TempDir dir;
  testing_support::write_originals(dir / "data", 40, 16);
  PipelineConfig c;
  c.dataset_root = dir / "data";
  c.output_dir = dir / "runs";
  c.target_width = c.target_height = 16;
  const SplitManifest s = run_split(c);
  const DatasetManifest augmented = load_manifest(stage_paths(c).augmented_manifest);

  Outcome o;
  std::set<fs::path> pool, seen;
  for (const auto& e : augmented) pool.insert(e.image);
  std::size_t listed = 0;
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (const auto& e : *part) {
      seen.insert(e.image);
      ++listed;
    }
  expect(o, load_manifest(stage_paths(c).manifest).size() == 40, "expected 40 originals");
  expect(o, augmented.size() == 120 && pool.size() == 120, fmt("augmented set has %g entries", double(augmented.size())));
  expect(o, s.train.size() == 80 && s.val.size() == 20 && s.test.size() == 20,
         fmt("split %g/%g/%g", double(s.train.size()), double(s.val.size()), double(s.test.size())));
  expect(o, listed == seen.size() && seen == pool, "split parts overlap or miss entries");
  if (o.pass) o.detail = "40 -> 120 -> 80/20/20, disjoint, union = augmented set";
  return o;
}

// --- filters -----------------------------------------------------------------

BinaryMask mask_from(int w, int h, const std::set<oracle::Pixel>& on) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(w) * h, 0);
  for (auto [x, y] : on) v[static_cast<std::size_t>(y) * w + x] = 1;
  return BinaryMask(w, h, v);
}

Outcome filter_invariants() {
  Outcome o;
  double norm = 0;
  for (double sigma : {0.5, 1.0, 1.5, 2.0, 3.0})
    for (int radius : {1, 2, 3, 5, 9}) {
      const Kernel2D k = gaussian_kernel({sigma, radius});
      double s = 0;
      for (float w : k.weights()) s += w;
      norm = std::max(norm, std::fabs(s - 1.0));
    }
  expect(o, norm <= 1e-7, fmt("gaussian kernel sum off by %.2e", norm));

  int flips = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GrayImage img = synthetic::random_image(7 + static_cast<int>(seed), 5 + static_cast<int>(seed % 7), seed);
    const GaussianParams p{0.6 + 0.15 * seed, 1 + static_cast<int>(seed % 4)};
    for (FlipAxis a : {FlipAxis::Horizontal, FlipAxis::Vertical}) {
      ++flips;
      expect(o, gaussian_blur(flip(img, a), p) == flip(gaussian_blur(img, p), a), "blur does not commute with a flip");
    }
  }

  for (float v : {0.0f, 0.3f, 1.0f}) {
    const FloatField m = sobel_magnitude(GrayImage(9, 6, v));
    expect(o, std::all_of(m.pixels().begin(), m.pixels().end(), [](float x) { return x == 0.0f; }),
           "sobel of a constant image is non-zero");
  }

  expect(o, prune_spurs(mask_from(5, 5, {{2, 2}}), 1).count_ones() == 0, "isolated pixel survives");
  std::set<oracle::Pixel> l;
  for (int y = 1; y <= 6; ++y) l.insert({2, y});
  for (int x = 3; x <= 7; ++x) l.insert({x, 6});
  auto tip_less = l;
  for (oracle::Pixel p : {oracle::Pixel{2, 1}, {2, 2}, {7, 6}, {6, 6}}) tip_less.erase(p);
  expect(o, oracle::to_set(prune_spurs(mask_from(10, 10, l), 2)) == tip_less, "L spurs do not retract by two");
  int masks = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const BinaryMask m = synthetic::random_mask(14, 11, seed, 0.15 + 0.01 * seed);
    for (int it = 0; it <= 4; ++it, ++masks)
      expect(o, oracle::to_set(prune_spurs(m, it)) == oracle::prune(oracle::to_set(m), it),
             "pruning differs from the set simulation");
  }
  if (o.pass)
    o.detail = fmt("kernel sum within %.1e; %g exact flip commutations; sobel(const) = 0; %g pruning cases match",
                   norm, flips, masks);
  return o;
}

// --- determinism and persistence --------------------------------------------

std::map<std::string, std::vector<unsigned char>> tree_bytes(const fs::path& root) {
  std::map<std::string, std::vector<unsigned char>> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = testing_support::read_bytes(e.path());
  return out;
}

Outcome determinism_and_persistence() {
  Outcome o;
  TempDir dir;

  const auto samples = fixtures::overfit_samples(32, 3);
  TrainConfig tc;
  tc.epochs = 4;
  tc.learning_rate = fixtures::kOverfitLearningRate;
  tc.seed = 11;
  UNet<float> a(UNetConfig::reti_unet1(16), 11), b(UNetConfig::reti_unet1(16), 11);
  const TrainResult ra = train(a, samples, samples, tc);
  const TrainResult rb = train(b, samples, samples, tc);
  expect(o, same_history(ra.history, rb.history), "training history differs between same-seed runs");
  expect(o, same_bytes(a.parameters(), b.parameters()) && ra.optimizer == rb.optimizer,
         "trained weights or optimizer state differ");

  save_checkpoint(a, &ra.optimizer, dir / "a.rseg");
  const Checkpoint back = load_checkpoint(dir / "a.rseg");
  expect(o, same_bytes(back.model.parameters(), a.parameters()), "checkpoint weights are not bit-exact");
  expect(o, back.adam && *back.adam == ra.optimizer, "checkpoint optimizer state differs");
  save_checkpoint(back.model, back.adam ? &*back.adam : nullptr, dir / "b.rseg");
  expect(o, testing_support::read_bytes(dir / "a.rseg") == testing_support::read_bytes(dir / "b.rseg"),
         "re-saved checkpoint differs byte-wise");

  testing_support::write_originals(dir / "data", 4, 72);
  std::size_t files = 0;
  for (Approach approach : kAllApproaches) {
    PipelineConfig c;
    c.dataset_root = dir / "data";
    c.output_dir = dir / "runs";
    c.target_width = c.target_height = 64;
    c.approach = approach;
    run_preprocess(c);
    const auto first = tree_bytes(stage_paths(c).stage);
    fs::remove_all(stage_paths(c).stage);
    run_preprocess(c);
    expect(o, tree_bytes(stage_paths(c).stage) == first,
           std::string("preprocess rerun differs for ") + std::string(to_string(approach)));
    files += first.size();
  }
  if (o.pass)
    o.detail = fmt("history and weights bit-identical; checkpoint bit-exact; %g preprocessed files byte-identical",
                   double(files));
  return o;
}

// --- reproduction check ------------------------------------------------------

Outcome reproduction_check() {
  Outcome o;
  expect(o, check_reproduction(reference_rows()).ok, "reference rows rejected");
  auto acc = reference_rows();
  acc[1].metrics.acc -= 0.025;
  expect(o, !check_reproduction(acc).ok, "accuracy drift of 0.025 accepted");
  auto iou = reference_rows();
  iou[2].metrics.is += 0.055;
  expect(o, !check_reproduction(iou).ok, "IoU drift of 0.055 accepted");
  auto order = reference_rows();
  std::swap(order[1].metrics.er, order[5].metrics.er);
  expect(o, !check_reproduction(order).ok, "broken ER ordering accepted");
  auto near = reference_rows();
  for (auto& r : near) {
    r.metrics.acc += 0.019;
    r.metrics.is -= 0.049;
  }
  expect(o, check_reproduction(near).ok, "in-tolerance rows rejected");
  if (o.pass)
    o.detail = "checker accepts reference/in-tolerance rows and rejects drifted ones; full-DRIVE grid run "
               "excluded from CI (see README)";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "efficacy ratio", efficacy_ratio_pairs},
      {"AC2", "convolution oracle", convolution_oracle},
      {"AC3", "gradient suite", gradient_suite},
      {"AC4", "overfit sanity", overfit_sanity},
      {"AC5", "metric oracles", metric_oracles},
      {"AC6", "dataset arithmetic", dataset_arithmetic},
      {"AC7", "filter invariants", filter_invariants},
      {"AC8", "determinism and persistence", determinism_and_persistence},
      {"AC9", "reproduction check (desk scale)", reproduction_check},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s  %-32s %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
