/* Copyright 2026 The CAT Codec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>
#include <numeric>
#include <vector>

#include "cat/entropy.hpp"
#include "cat/errors.hpp"
#include "cat/ops.hpp"
#include "cat/quantizer.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cat;

namespace {

Histogram counts(std::vector<std::uint64_t> c) { return Histogram{std::move(c)}; }

TensorPtr vector_of(std::vector<double> v) {
  const std::size_t n = v.size();
  return make_tensor(Tensor({n}, std::move(v)));
}

double entropy_value(const TensorPtr& x, std::span<const double> levels, SoftEntropyConfig cfg, std::uint64_t seed) {
  Tape tape(Tape::Mode::kInference);
  Rng rng(seed);
  return soft_entropy(tape, x, levels, cfg, rng)->item();
}

}  // namespace

TEST_CASE("empirical entropy of small histograms") {
  CHECK(empirical_entropy(counts({4, 4})) == 1.0);
  CHECK(empirical_entropy(counts({8, 0, 0, 0})) == 0.0);
  CHECK(empirical_entropy(counts({1, 1, 2})) == 1.5);
  CHECK_THROWS_AS(empirical_entropy(counts({0, 0})), InputError);
  CHECK_THROWS_AS(empirical_entropy(counts({})), InputError);
}

TEST_CASE("empirical entropy matches direct summation and its bounds") {
  Rng rng(43);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t L = 1 + rng.below(32);
    std::vector<std::uint64_t> c(L);
    for (auto& v : c) v = rng.below(3) == 0 ? 0 : rng.below(1000);
    if (std::accumulate(c.begin(), c.end(), std::uint64_t{0}) == 0) c[0] = 1;
    const double h = empirical_entropy(counts(c));
    CHECK(h == doctest::Approx(oracle::entropy_bits(c)).epsilon(1e-12));
    CHECK(h >= 0.0);
    CHECK(h <= std::log2(static_cast<double>(L)) + 1e-12);
  }
  CHECK(empirical_entropy(counts({5, 5, 5, 5})) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("histogram construction") {
  std::vector<std::uint16_t> symbols = {0, 2, 2, 3, 2};
  Histogram h = Histogram::of(symbols, 4);
  CHECK(h.counts == std::vector<std::uint64_t>{1, 0, 3, 1});
  CHECK(h.total() == 5);
  CHECK(h.present_symbols() == 3);
  std::vector<std::uint16_t> bad = {4};
  CHECK_THROWS_AS(h.add(bad), InputError);
}

TEST_CASE("soft assignment limits and symmetry") {
  const std::vector<double> levels = {0.0, 1.0 / 3, 2.0 / 3, 1.0};
  auto onlevel = soft_assignment(levels[2], levels, 1000.0);
  CHECK(onlevel[2] >= 1.0 - 1e-10);

  auto mid = soft_assignment((levels[1] + levels[2]) / 2, levels, 7.0);
  CHECK(mid[1] == doctest::Approx(mid[2]).epsilon(1e-14));

  auto flat = soft_assignment(0.3, levels, 1e-12);
  for (double p : flat) CHECK(p == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("soft assignment rows are probability vectors") {
  Rng rng(47);
  const std::vector<double> levels = QuantizerState(1.5, 4).levels();
  for (int i = 0; i < 1000; ++i) {
    auto p = soft_assignment(rng.uniform(-0.5, 2.0), levels, rng.uniform(0.1, 50.0));
    double s = 0.0;
    for (double v : p) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("soft entropy extremes") {
  const std::vector<double> levels = QuantizerState(1.0, 2).levels();
  SoftEntropyConfig cfg{1000.0, 1.0};
  CHECK(entropy_value(vector_of(std::vector<double>(50, levels[1])), levels, cfg, 1) <= 1e-6);
  CHECK(entropy_value(vector_of(levels), levels, cfg, 1) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("soft entropy matches the direct formula on the drawn subset") {
  Rng data(53);
  const std::vector<double> levels = QuantizerState(1.2, 3).levels();
  std::vector<double> x(200);
  for (double& v : x) v = data.uniform(0.0, 1.2);
  SoftEntropyConfig cfg{10.0, 0.3};
  Rng pick(99);
  const auto idx = draw_subsample(x.size(), cfg.subsample_fraction, pick);
  CHECK(idx.size() == 60);
  std::vector<double> chosen;
  for (auto i : idx) chosen.push_back(x[i]);
  CHECK(entropy_value(vector_of(x), levels, cfg, 99) ==
        doctest::Approx(oracle::soft_entropy_bits(chosen, levels, 10.0)).epsilon(1e-12));
}

TEST_CASE("soft entropy is invariant under permutation of the samples") {
  Rng rng(59);
  const std::vector<double> levels = QuantizerState(1.0, 4).levels();
  std::vector<double> x(300);
  for (double& v : x) v = rng.uniform(0.0, 1.0);
  std::vector<double> y = x;
  rng.shuffle(std::span<double>(y));
  SoftEntropyConfig all{10.0, 1.0};
  CHECK(entropy_value(vector_of(x), levels, all, 1) == doctest::Approx(entropy_value(vector_of(y), levels, all, 2)).epsilon(1e-13));
}

TEST_CASE("subsample draws distinct indices") {
  Rng rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(500);
    const double f = rng.uniform(0.001, 1.0);
    auto idx = draw_subsample(n, f, rng);
    const std::size_t expected = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * n)));
    CHECK(idx.size() == std::min(expected, n));
    for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] > idx[i - 1]);
    CHECK(idx.back() < n);
  }
}

TEST_CASE("soft entropy gradient matches finite differences") {
  Rng rng(67);
  const std::vector<double> levels = QuantizerState(1.0, 3).levels();
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> xv(40);
    for (double& v : xv) v = rng.uniform(-0.2, 1.2);
    auto x = make_leaf(Tensor({40}, xv), true);
    SoftEntropyConfig cfg{10.0, 0.5};
    Tape tape;
    Rng r(trial);
    auto h = soft_entropy(tape, x, levels, cfg, r);
    tape.backward(*h);
    std::vector<double> analytic(x->grad().begin(), x->grad().end());
    auto numeric = oracle::central_differences([&] { return entropy_value(x, levels, cfg, trial); }, x->data(), 1e-6);
    CHECK(oracle::relative_error(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("compressibility loss values") {
  Tape tape(Tape::Mode::kInference);
  std::vector<double> onehot(9, 0.0);
  onehot[4] = -3.0;
  CHECK(compressibility_loss(tape, vector_of(onehot))->item() == 1.0);
  CHECK(compressibility_loss(tape, vector_of(std::vector<double>(16, 0.7)))->item() == doctest::Approx(4.0).epsilon(1e-15));
  auto zeros = make_leaf(Tensor({5}, 0.0), true);
  Tape rec;
  auto z = compressibility_loss(rec, zeros);
  CHECK(z->item() == 0.0);
  rec.backward(*z);
  for (double g : zeros->grad()) CHECK(g == 0.0);
}

TEST_CASE("compressibility loss is scale invariant") {
  Rng rng(71);
  std::vector<double> x(50);
  for (double& v : x) v = rng.uniform(-2.0, 2.0);
  Tape tape(Tape::Mode::kInference);
  const double base = compressibility_loss(tape, vector_of(x))->item();
  for (double c : {-3.0, 0.001, 17.0}) {
    std::vector<double> y = x;
    for (double& v : y) v *= c;
    CHECK(std::abs(compressibility_loss(tape, vector_of(y))->item() - base) <= 1e-10 * base);
  }
}

TEST_CASE("compressibility loss gradient matches finite differences") {
  Rng rng(73);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> xv(30);
    for (double& v : xv) {
      v = rng.uniform(-2.0, 2.0);
      if (std::abs(v) < 0.05) v = 0.5;
    }
    auto x = make_leaf(Tensor({30}, xv), true);
    Tape tape;
    auto l = compressibility_loss(tape, x);
    tape.backward(*l);
    std::vector<double> analytic(x->grad().begin(), x->grad().end());
    auto f = [&] {
      Tape t(Tape::Mode::kInference);
      return compressibility_loss(t, x)->item();
    };
    CHECK(oracle::relative_error(analytic, oracle::central_differences(f, x->data(), 1e-6)) <= 1e-4);
  }
}

TEST_CASE("network entropy loss sums the per-site losses") {
  Rng rng(79);
  std::vector<SiteActivation> sites;
  for (int s = 0; s < 3; ++s) {
    std::vector<double> v(20 + 10 * s);
    for (double& e : v) e = rng.uniform(0.0, 1.0);
    sites.push_back({vector_of(v), QuantizerState(1.0, 2 + s).levels()});
  }
  SoftEntropyConfig cfg{10.0, 1.0};
  Tape tape(Tape::Mode::kInference);
  Rng r(1);
  double expected_soft = 0.0, expected_comp = 0.0;
  for (auto& s : sites) {
    expected_soft += oracle::soft_entropy_bits(s.values->data(), s.levels, 10.0);
    expected_comp += compressibility_loss(tape, s.values)->item();
  }
  CHECK(std::abs(network_entropy_loss(tape, sites, EntropyLossMode::kSoftEntropy, cfg, r)->item() - expected_soft) <=
        1e-12);
  CHECK(std::abs(network_entropy_loss(tape, sites, EntropyLossMode::kCompressibility, cfg, r)->item() -
                 expected_comp) <= 1e-12);

  std::vector<SiteActivation> one = {sites[0]};
  std::vector<SiteActivation> two = {sites[0], sites[0]};
  const double single = network_entropy_loss(tape, one, EntropyLossMode::kCompressibility, cfg, r)->item();
  CHECK(network_entropy_loss(tape, two, EntropyLossMode::kCompressibility, cfg, r)->item() == 2 * single);
  CHECK(single == compressibility_loss(tape, sites[0].values)->item());

  std::vector<SiteActivation> none;
  CHECK_THROWS_AS(network_entropy_loss(tape, none, EntropyLossMode::kSoftEntropy, cfg, r), ConfigError);
}

TEST_CASE("loss mode names round-trip") {
  for (auto m : {EntropyLossMode::kSoftEntropy, EntropyLossMode::kCompressibility}) {
    CHECK(parse_entropy_loss_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_entropy_loss_mode("l1"), ConfigError);
}

TEST_CASE("soft entropy config validation") {
  CHECK_THROWS_AS((SoftEntropyConfig{0.0, 0.5}.validate()), ConfigError);
  CHECK_THROWS_AS((SoftEntropyConfig{10.0, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((SoftEntropyConfig{10.0, 1.5}.validate()), ConfigError);
  CHECK_NOTHROW((SoftEntropyConfig{10.0, 1.0}.validate()));
}
