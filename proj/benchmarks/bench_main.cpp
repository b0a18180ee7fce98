#include <benchmark/benchmark.h>

#include <memory>

#include "paneitz/axisym.hpp"
#include "paneitz/bubbles.hpp"
#include "paneitz/functional.hpp"
#include "paneitz/quadrature.hpp"

using namespace paneitz;

static void BM_BuildQuadrature(benchmark::State& st) {
  Bubble b(Point::north(5), static_cast<double>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(build_quadrature(5, std::optional<Bubble>(b), 3));
}
BENCHMARK(BM_BuildQuadrature)->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_JValue(benchmark::State& st) {
  Vec v = Vec::Zero(6);
  v[5] = 0.1;
  auto K = CurvatureField::affine(5, 1, v);
  Bubble b(Point::north(5), 100);
  auto q = build_quadrature(5, std::optional<Bubble>(b), 3);
  auto conf = Configuration::single(b);
  for (auto _ : st) benchmark::DoNotOptimize(J_value(conf, K, q));
}
BENCHMARK(BM_JValue)->Unit(benchmark::kMicrosecond);

static void BM_PaneitzApply(benchmark::State& st) {
  auto g = std::make_shared<const AxisymGrid>(5, static_cast<int>(st.range(0)));
  auto u = axisym_bubble(g, 10);
  for (auto _ : st) benchmark::DoNotOptimize(paneitz_apply(u));
}
BENCHMARK(BM_PaneitzApply)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);

static void BM_NewtonSolve(benchmark::State& st) {
  auto g = std::make_shared<const AxisymGrid>(5, static_cast<int>(st.range(0)));
  auto init = axisym_bubble(g, 2);
  for (int k = 0; k < g->size(); ++k) init.values()[k] *= 1 + 0.01L * g->t()[k];
  auto K = CurvatureField::constant(5, 1);
  for (auto _ : st) benchmark::DoNotOptimize(solve_equation3(K, init));
}
BENCHMARK(BM_NewtonSolve)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
