#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "smartcharge/electrical.hpp"
#include "smartcharge/kernels.hpp"

using namespace smartcharge;
namespace k = smartcharge::kernels;

namespace {

bool have_avx2() {
  if (k::supported(k::Isa::avx2)) return true;
  MESSAGE("AVX2 not available; vector comparison skipped");
  return false;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

double ulp_distance(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::abs(std::nextafter(a, b) - a);
}

} // namespace

TEST_CASE("scalar ecm sweep matches the reference electrical model") {
  const k::KernelTable& s = k::table(k::Isa::scalar);
  std::vector<double> p;
  for (double x = -50.0; x <= 50.0; x += 0.25) p.push_back(x);
  std::vector<double> de(p.size()), q(p.size());
  std::vector<std::uint8_t> ok(p.size());
  s.ecm_sweep(360.0, 0.1, 5.0 / 60.0, p.data(), p.size(), de.data(), q.data(), ok.data());
  for (std::size_t i = 0; i < p.size(); ++i) {
    REQUIRE(ok[i] == 1);
    const EnergyStep ref = energy_step(EcmPoint{360.0, 0.1}, p[i], 5.0);
    CHECK(de[i] == doctest::Approx(ref.delta_e).epsilon(1e-14));
    CHECK(q[i] == doctest::Approx(ref.q_loss).epsilon(1e-14).scale(1e-12));
  }
}

TEST_CASE("scalar ecm sweep flags undeliverable power") {
  const k::KernelTable& s = k::table(k::Isa::scalar);
  const double p[3] = {-400.0, -10.0, 10.0};
  double de[3], q[3];
  std::uint8_t ok[3];
  s.ecm_sweep(360.0, 0.1, 1.0 / 12.0, p, 3, de, q, ok);
  CHECK(ok[0] == 0);
  CHECK(de[0] == 0.0);
  CHECK(q[0] == 0.0);
  CHECK(ok[1] == 1);
  CHECK(ok[2] == 1);
}

TEST_CASE("argmin takes the lowest index on ties") {
  for (auto isa : {k::Isa::scalar, k::Isa::avx2}) {
    if (!k::supported(isa)) continue;
    const k::KernelTable& t = k::table(isa);
    std::vector<double> v(37, 5.0);
    CHECK(t.argmin(v.data(), v.size()) == 0);
    v[20] = 1.0;
    v[30] = 1.0;
    CHECK(t.argmin(v.data(), v.size()) == 20);
    v[3] = 1.0;
    CHECK(t.argmin(v.data(), v.size()) == 3);
    CHECK(t.argmin(v.data(), 1) == 0);
  }
}

TEST_CASE("avx2 ecm sweep is bit-identical to scalar") {
  if (!have_avx2()) return;
  const k::KernelTable& s = k::table(k::Isa::scalar);
  const k::KernelTable& a = k::table(k::Isa::avx2);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> du(250.0, 420.0), dr(0.01, 0.4), dp(-500.0, 60.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 37;
    std::vector<double> p(n);
    for (auto& x : p) x = dp(rng);
    const double u = du(rng), r = dr(rng);
    std::vector<double> de1(n), q1(n), de2(n), q2(n);
    std::vector<std::uint8_t> ok1(n), ok2(n);
    s.ecm_sweep(u, r, 1.0 / 12.0, p.data(), n, de1.data(), q1.data(), ok1.data());
    a.ecm_sweep(u, r, 1.0 / 12.0, p.data(), n, de2.data(), q2.data(), ok2.data());
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(ok1[i] == ok2[i]);
      CHECK(bit_equal(de1[i], de2[i]));
      CHECK(bit_equal(q1[i], q2[i]));
    }
  }
}

TEST_CASE("avx2 argmin and standardize are bit-identical to scalar") {
  if (!have_avx2()) return;
  const k::KernelTable& s = k::table(k::Isa::scalar);
  const k::KernelTable& a = k::table(k::Isa::avx2);
  std::mt19937_64 rng(18);
  std::uniform_int_distribution<int> small(0, 6);
  std::normal_distribution<double> g(3.0, 7.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 53;
    std::vector<double> v(n);
    for (auto& x : v) x = trial % 2 ? static_cast<double>(small(rng)) : g(rng);
    CHECK(s.argmin(v.data(), n) == a.argmin(v.data(), n));
    std::vector<double> x1 = v, x2 = v;
    s.standardize(x1.data(), n, 1.5, 2.25);
    a.standardize(x2.data(), n, 1.5, 2.25);
    for (std::size_t i = 0; i < n; ++i) CHECK(bit_equal(x1[i], x2[i]));
  }
}

TEST_CASE("avx2 dense layers agree with scalar") {
  if (!have_avx2()) return;
  const k::KernelTable& s = k::table(k::Isa::scalar);
  const k::KernelTable& a = k::table(k::Isa::avx2);
  std::mt19937_64 rng(19);
  std::normal_distribution<double> g(0.0, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_in = 1 + trial % 5, n_out = 1 + trial % 11, n = 1 + trial % 23;
    std::vector<double> w(n_out * n_in), b(n_out), in(n_in * n);
    for (auto& x : w) x = g(rng);
    for (auto& x : b) x = g(rng);
    for (auto& x : in) x = 3.0 * g(rng);
    std::vector<double> o1(n_out * n), o2(n_out * n);
    s.dense(w.data(), b.data(), n_out, n_in, in.data(), n, o1.data(), k::Activation::identity);
    a.dense(w.data(), b.data(), n_out, n_in, in.data(), n, o2.data(), k::Activation::identity);
    for (std::size_t i = 0; i < o1.size(); ++i) CHECK(bit_equal(o1[i], o2[i]));
    s.dense(w.data(), b.data(), n_out, n_in, in.data(), n, o1.data(), k::Activation::sigmoid);
    a.dense(w.data(), b.data(), n_out, n_in, in.data(), n, o2.data(), k::Activation::sigmoid);
    for (std::size_t i = 0; i < o1.size(); ++i) CHECK(ulp_distance(o1[i], o2[i]) <= 8.0);
  }
}

TEST_CASE("sigmoid saturates without overflow") {
  for (auto isa : {k::Isa::scalar, k::Isa::avx2}) {
    if (!k::supported(isa)) continue;
    const k::KernelTable& t = k::table(isa);
    const double w[1] = {1.0}, b[1] = {0.0};
    const double in[8] = {-1000.0, -750.0, -40.0, -1.0, 0.0, 1.0, 40.0, 1000.0};
    double out[8];
    t.dense(w, b, 1, 1, in, 8, out, k::Activation::sigmoid);
    for (double o : out) {
      CHECK(std::isfinite(o));
      CHECK(o >= 0.0);
      CHECK(o <= 1.0);
    }
    CHECK(out[4] == 0.5);
    CHECK(out[7] == 1.0);
    CHECK(out[0] < 1e-300);
  }
}

TEST_CASE("table lookup and names") {
  CHECK(k::name(k::Isa::scalar) == "scalar");
  CHECK(k::supported(k::Isa::scalar));
  CHECK(k::table(k::Isa::scalar).isa == k::Isa::scalar);
  const k::Isa before = k::active().isa;
  k::select(k::Isa::scalar);
  CHECK(k::active().isa == k::Isa::scalar);
  k::select(before);
}
