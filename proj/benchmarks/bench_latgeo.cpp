#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "latgeo/ergodic.hpp"
#include "latgeo/lattice.hpp"
#include "latgeo/torus.hpp"

using namespace latgeo;

namespace {

// Skewed unimodular basis: the identity sheared and squeezed by a_t.
Mat skewed_basis(int d, double t) {
  Mat b = Mat::Identity(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) b(i, j) = std::sin(1.7 * i + 0.3 * j);
  b.row(0) *= std::exp((d - 1) * t);
  for (int i = 1; i < d; ++i) b.row(i) *= std::exp(-t);
  return b;
}

torus::Scene default_scene() {
  using funcspec::FuncFamily;
  torus::Scene sc;
  sc.d = 2;
  sc.k = 1;
  sc.U = funcspec::ParamBox{Vec::Constant(1, 0.2), Vec::Constant(1, 0.8)};
  sc.theta = FuncFamily::parse({"0", "0"}, 2, 1, 1);
  sc.f = FuncFamily::parse({"cos(0.3+s1)", "sin(0.3+s1)"}, 2, 1, 1, true);
  sc.u = {FuncFamily::parse({"cos(s1)", "sin(s1)"}, 2, 1, 1, true)};
  sc.phi = {FuncFamily::parse({"pi/7 + 0.3*s1^2", "sqrt(3)/5"}, 2, 1, 1)};
  sc.omega = {torus::RegionFamily::box(FuncFamily::parse({"-0.5"}, 1, 1, 1),
                                       FuncFamily::parse({"0.5"}, 1, 1, 1))};
  return sc;
}

void BM_Lll(benchmark::State& state) {
  const Mat b = skewed_basis(static_cast<int>(state.range(0)), 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(lattice::lll_reduce(b));
}
BENCHMARK(BM_Lll)->DenseRange(2, 6);

void BM_ShortestVector(benchmark::State& state) {
  const Mat b = skewed_basis(static_cast<int>(state.range(0)), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(lattice::shortest_vector(b));
}
BENCHMARK(BM_ShortestVector)->DenseRange(2, 6);

void BM_HitTimes(benchmark::State& state) {
  const torus::Scene sc = default_scene();
  const Vec s = Vec::Constant(1, 0.5);
  const double l = static_cast<double>(state.range(0));
  const double t_max = 50.0 * std::exp(l) / std::cos(0.3);
  std::size_t events = 0;
  for (auto _ : state) {
    const torus::HitSeries h = torus::hit_times(sc, s, l, t_max);
    events = h.events.size();
    benchmark::DoNotOptimize(events);
  }
  state.counters["events"] = static_cast<double>(events);
}
BENCHMARK(BM_HitTimes)->Arg(0)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_CountPointsInRegion(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const lattice::UnimodularLattice lat = lattice::sample_haar_sl2(rng);
  const lattice::AffineGrid grid(lat, Mat::Constant(2, 1, 0.3));
  const lattice::CylinderRegion region{static_cast<double>(state.range(0)),
                                       Region(Box{Vec::Constant(1, -0.5), Vec::Constant(1, 0.5)})};
  for (auto _ : state) benchmark::DoNotOptimize(lattice::count_points_in_region(grid, 0, region));
}
BENCHMARK(BM_CountPointsInRegion)->Arg(1)->Arg(10)->Arg(100);

void BM_BirkhoffTrajectory(benchmark::State& state) {
  ergodic::TrajectorySpec spec;
  spec.base = groups::GroupElement(groups::SLMatrix::identity(2), Mat::Constant(2, 1, 0.37));
  spec.params = groups::FlowParams(2, 1);
  spec.T = static_cast<double>(state.range(0));
  spec.dt = 1.0 / 64.0;
  const ergodic::Observable obs = ergodic::Observable::bump(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(ergodic::birkhoff_average(spec, obs).final);
  state.counters["steps"] = spec.T / spec.dt;
}
BENCHMARK(BM_BirkhoffTrajectory)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
