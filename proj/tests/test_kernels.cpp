#include <cmath>
#include <random>

#include "doctest.h"
#include "multiroi/kernels.hpp"

using namespace multiroi;
using namespace multiroi::kernels;

namespace {

// The parallel backward kernels sum in a different (but thread-count independent) order.
bool close(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-12 * std::max(1.0, std::abs(a[i]))) return false;
  }
  return true;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("conv kernels: serial and parallel agree") {
  std::mt19937_64 rng(3);
  for (int stride : {1, 2}) {
    ConvShape s{2, 3, 11, 9, 5, 3, stride, 1};
    const auto in = random_vec(s.input_size(), rng);
    const auto w = random_vec(s.weight_size(), rng);
    const auto b = random_vec(static_cast<std::size_t>(s.out_channels), rng);
    std::vector<double> o1(s.output_size()), o2(s.output_size());
    serial::conv2d_forward(s, in, w, b, o1);
    parallel::conv2d_forward(s, in, w, b, o2);
    CHECK(o1 == o2);

    const auto go = random_vec(s.output_size(), rng);
    std::vector<double> gi1(s.input_size()), gi2(s.input_size());
    serial::conv2d_backward_input(s, go, w, gi1);
    parallel::conv2d_backward_input(s, go, w, gi2);
    CHECK(close(gi1, gi2));

    std::vector<double> gw1(s.weight_size()), gw2(s.weight_size()), gb1(b.size()), gb2(b.size());
    serial::conv2d_backward_weight(s, in, go, gw1, gb1);
    parallel::conv2d_backward_weight(s, in, go, gw2, gb2);
    CHECK(close(gw1, gw2));
    CHECK(close(gb1, gb2));
  }
}

TEST_CASE("conv forward: 1x1 identity kernel copies the input") {
  ConvShape s{1, 1, 4, 5, 1, 1, 1, 0};
  std::mt19937_64 rng(1);
  const auto in = random_vec(s.input_size(), rng);
  std::vector<double> w{1.0}, b{0.0}, out(s.output_size());
  parallel::conv2d_forward(s, in, w, b, out);
  CHECK(out == in);
}

TEST_CASE("maxpool: serial and parallel agree, argmax points at the max") {
  PoolShape s{2, 3, 8, 7, 2, 2, 0};
  std::mt19937_64 rng(5);
  const auto in = random_vec(static_cast<std::size_t>(s.batch) * s.channels * s.in_height * s.in_width, rng);
  const std::size_t n_out = static_cast<std::size_t>(s.batch) * s.channels * s.out_height() * s.out_width();
  std::vector<double> o1(n_out), o2(n_out);
  std::vector<int> a1(n_out), a2(n_out);
  serial::maxpool_forward(s, in, o1, a1);
  parallel::maxpool_forward(s, in, o2, a2);
  CHECK(o1 == o2);
  CHECK(a1 == a2);
  for (std::size_t i = 0; i < n_out; ++i) CHECK(in[a1[i]] == o1[i]);
}

TEST_CASE("affine_sample: serial and parallel agree for both borders") {
  Image src(31, 23);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  for (float& p : src.pixels) p = u(rng);
  AffineMap m{0.9, 0.3, -2.0, -0.25, 1.1, 3.5};
  for (Border border : {Border::Zero, Border::Clamp}) {
    Image a(40, 30), b(40, 30);
    serial::affine_sample(src, m, border, a);
    parallel::affine_sample(src, m, border, b);
    CHECK(a == b);
  }
}

TEST_CASE("bilinear_at: pixel centers return stored values, midpoints average") {
  Image src(2, 1);
  src.at(0, 0) = 0.2F;
  src.at(1, 0) = 0.6F;
  CHECK(bilinear_at(src, 0.0, 0.0, Border::Zero) == doctest::Approx(0.2));
  CHECK(bilinear_at(src, 0.5, 0.0, Border::Zero) == doctest::Approx(0.4));
  CHECK(bilinear_at(src, -5.0, 0.0, Border::Clamp) == doctest::Approx(0.2));
  CHECK(bilinear_at(src, -5.0, 0.0, Border::Zero) == 0.0F);
}
