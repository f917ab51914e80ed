#include <benchmark/benchmark.h>

#include <random>

#include "dmu/agents.hpp"
#include "dmu/blackboard.hpp"
#include "dmu/constraints.hpp"
#include "dmu/dynamics.hpp"
#include "dmu/geometry.hpp"

using namespace dmu;

namespace
{

std::vector<Box3> some_boxes(int n)
{
  std::vector<Box3> boxes;
  for (int i = 0; i < n; ++i)
  {
    boxes.emplace_back(Vec3{0.3 * i - 0.5, 1.0 + 0.1 * i, 0.8}, Vec3{0.1, 0.1, 0.3}, 0.2 * i);
  }
  return boxes;
}

void BM_OverlapLength(benchmark::State& state)
{
  const Polygon2 a = Polygon2::rectangle(0.1, 0.2, 0.5, 0.3);
  const Polygon2 b = Polygon2::rectangle(0.3, 0.1, 0.6, 0.6);
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(polygon_overlap_length(a, b));
  }
}
BENCHMARK(BM_OverlapLength);

void BM_SegmentOcclusion(benchmark::State& state)
{
  const auto boxes = some_boxes(static_cast<int>(state.range(0)));
  const Segment3 s{{0, 0, 1.4}, {0.2, 2.0, 0.9}};
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(segment_occlusion_length(s, boxes));
  }
}
BENCHMARK(BM_SegmentOcclusion)->Arg(4)->Arg(32);

void BM_ConeOcclusion(benchmark::State& state)
{
  const auto boxes = some_boxes(8);
  Cone c;
  c.vertex = {0, 0, 1.4};
  c.axis = Vec3(0.1, 1, -0.2).normalized();
  c.aperture = deg2rad(10.0);
  c.length = 2.0;
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(cone_occlusion_length(c, boxes, static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_ConeOcclusion)->Arg(16)->Arg(64);

void BM_Lcp(benchmark::State& state)
{
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i)
  {
    a.data()[i] = u(eng);
  }
  VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    b[i] = 2.0 * u(eng);
  }
  const LcpProblem p{a * a.transpose() + 0.05 * MatrixXd::Identity(n, n), b};
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(solve_lcp(p));
  }
}
BENCHMARK(BM_Lcp)->Arg(2)->Arg(6)->Arg(24);

void BM_BlackboardTick(benchmark::State& state)
{
  WorldState w;
  w.target.position = {0.3, 2.0, 0.9};
  w.scene.polygons.push_back(Polygon2::rectangle(0.1, 0.8, 0.3, 0.2));
  w.scene.boxes = some_boxes(6);
  Blackboard board;
  board.register_agent({"Attraction", 1, true, 0.01, deg2rad(3)}, [](const WorldState& s) { return attraction_step(s); });
  board.register_agent({"Repulsion", 1, true, 0.01, deg2rad(3)}, [](const WorldState& s) { return repulsion_step(s); });
  board.register_agent({"Visual", 1, true, 0.01, deg2rad(5)}, [](const WorldState& s) { return head_orientation_step(s); });
  board.register_agent({"Cone", 1, true, 0.005, deg2rad(1)}, [](const WorldState& s) { return visibility_step(s); });
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(board.run_tick(w));
  }
}
BENCHMARK(BM_BlackboardTick);

void BM_Rk4Step(benchmark::State& state)
{
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const JointDynamics d(MatrixXd::Identity(n, n) * 2.0, 1e-3);
  const TorqueField f = [](const VectorXd& q) { return VectorXd(-q.array().sin()); };
  VectorXd q = VectorXd::Constant(n, 0.3);
  for (auto _ : state)
  {
    q = step_first_order(d, q, f);
    benchmark::DoNotOptimize(q);
  }
}
BENCHMARK(BM_Rk4Step)->Arg(3)->Arg(7);

}  // namespace
BENCHMARK_MAIN();
