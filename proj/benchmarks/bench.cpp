#include <benchmark/benchmark.h>

#include <memory>

#include "hmfem/examples.hpp"
#include "hmfem/fem.hpp"
#include "hmfem/mesh.hpp"
#include "hmfem/solver.hpp"

using namespace hmfem;

namespace {

struct Setup {
  MeshPtr mesh;
  SaddleSystem system;
  SaddleState state;
};

Setup make_setup(int dim, int level) {
  const ExampleId id = dim == 2 ? ExampleId::inv_stereo : ExampleId::radial;
  auto mesh = std::make_shared<const SimplicialMesh>(build_mesh(dim, level));
  auto manifold = std::make_shared<const TargetManifold>(default_manifold(id));
  SaddleSystem system = make_example_system(id, mesh, manifold);
  SaddleState state = perturbed_start(system, id, 10, 0.01);
  return {mesh, std::move(system), std::move(state)};
}

void BM_RefineUniform(benchmark::State& st) {
  const int dim = static_cast<int>(st.range(0)), level = static_cast<int>(st.range(1));
  const SimplicialMesh coarse = build_mesh(dim, level - 1);
  for (auto _ : st) benchmark::DoNotOptimize(refine_uniform(coarse));
}
BENCHMARK(BM_RefineUniform)->Args({2, 7})->Args({3, 4})->Unit(benchmark::kMillisecond);

void BM_AssembleStiffness(benchmark::State& st) {
  const SimplicialMesh mesh = build_mesh(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(assemble_stiffness(mesh));
}
BENCHMARK(BM_AssembleStiffness)->Args({2, 7})->Args({3, 4})->Unit(benchmark::kMillisecond);

void BM_AssembleJacobian(benchmark::State& st) {
  const Setup s = make_setup(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(assemble_jacobian(s.system, s.state));
}
BENCHMARK(BM_AssembleJacobian)->Args({2, 7})->Args({3, 4})->Unit(benchmark::kMillisecond);

void BM_KktSolve(benchmark::State& st) {
  const Setup s = make_setup(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  const SparseMatrix jac = assemble_jacobian(s.system, s.state);
  const Vector rhs = -assemble_residual(s.system, s.state);
  KktOptions options;
  options.method = st.range(2) == 0 ? KktMethod::direct : KktMethod::iterative;
  for (auto _ : st) benchmark::DoNotOptimize(solve_kkt(jac, rhs, options));
}
BENCHMARK(BM_KktSolve)
    ->Args({2, 6, 0})
    ->Args({2, 6, 1})
    ->Args({3, 3, 0})
    ->Args({3, 3, 1})
    ->Unit(benchmark::kMillisecond);

void BM_NewtonSolve(benchmark::State& st) {
  const Setup s = make_setup(2, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(newton_solve(s.system, s.state));
}
BENCHMARK(BM_NewtonSolve)->Arg(5)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
