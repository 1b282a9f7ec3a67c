// Serial reference vs OpenMP kernels, plus one full ETDRK4 step.
#include <benchmark/benchmark.h>

#include <complex>
#include <vector>

#include "gkdv/evolve.hpp"
#include "gkdv/kernels.hpp"
#include "gkdv/random.hpp"
#include "gkdv/soliton.hpp"

namespace kx = gkdv::kernels;
using kx::cplx;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t stream) {
  gkdv::CounterRng r(11, stream);
  std::vector<double> v(n);
  for (double& x : v) x = r.normal();
  return v;
}

std::vector<cplx> cnoise(std::size_t n, std::uint64_t stream) {
  const auto re = noise(n, stream), im = noise(n, stream + 1);
  std::vector<cplx> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {re[i], im[i]};
  return v;
}

template <bool Par>
void BM_dot(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto a = noise(n, 1), b = noise(n, 2);
  for (auto _ : st) {
    benchmark::DoNotOptimize(Par ? kx::parallel::dot(a.data(), b.data(), n) : kx::serial::dot(a.data(), b.data(), n));
  }
  st.SetBytesProcessed(static_cast<std::int64_t>(st.iterations() * 2 * n * sizeof(double)));
}

template <bool Par>
void BM_schrodinger(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto u = noise(n, 3), d = noise(n, 4);
  std::vector<double> out(n);
  for (auto _ : st) {
    if (Par) kx::parallel::apply_schrodinger(u.data(), d.data(), out.data(), n, 0.05);
    else kx::serial::apply_schrodinger(u.data(), d.data(), out.data(), n, 0.05);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Par>
void BM_etd_final(benchmark::State& st) {
  const auto m = static_cast<std::size_t>(st.range(0));
  const auto e = cnoise(m, 10), f1 = cnoise(m, 12), f2 = cnoise(m, 14), f3 = cnoise(m, 16);
  const auto nv = cnoise(m, 18), na = cnoise(m, 20), nb = cnoise(m, 22), nc = cnoise(m, 24);
  auto v = cnoise(m, 26);
  for (auto _ : st) {
    if (Par) kx::parallel::etd_final(e.data(), f1.data(), f2.data(), f3.data(), nv.data(), na.data(), nb.data(), nc.data(), v.data(), m);
    else kx::serial::etd_final(e.data(), f1.data(), f2.data(), f3.data(), nv.data(), na.data(), nb.data(), nc.data(), v.data(), m);
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_etdrk4_step(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0));
  const auto nl = gkdv::Nonlinearity::pure_power(2);
  const gkdv::Grid g(200.0, N);
  gkdv::KdvStepper stepper(g, nl, 1e-3);
  gkdv::Field u = gkdv::SolitonProfile::build(nl, 1.0).sample(g);
  for (auto _ : st) stepper.step(u);
}

}  // namespace

BENCHMARK(BM_dot<false>)->Name("dot/serial")->Range(1 << 12, 1 << 20);
BENCHMARK(BM_dot<true>)->Name("dot/parallel")->Range(1 << 12, 1 << 20);
BENCHMARK(BM_schrodinger<false>)->Name("schrodinger/serial")->Range(1 << 12, 1 << 20);
BENCHMARK(BM_schrodinger<true>)->Name("schrodinger/parallel")->Range(1 << 12, 1 << 20);
BENCHMARK(BM_etd_final<false>)->Name("etd_final/serial")->Range(1 << 11, 1 << 19);
BENCHMARK(BM_etd_final<true>)->Name("etd_final/parallel")->Range(1 << 11, 1 << 19);
BENCHMARK(BM_etdrk4_step)->Arg(4096)->Arg(16384);

BENCHMARK_MAIN();
