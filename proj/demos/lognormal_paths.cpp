// Minimal library walkthrough: pick a kernel and wavelet family, compute the
// envelope constants, ask for a mean-square certified plan, and draw a few
// paths of Y(t) = exp(X(t)).

#include <cstdio>

#include "wavesim/planner.hpp"
#include "wavesim/simulator.hpp"

int main() {
  using namespace wavesim;

  const Kernel kernel = make_example1_kernel();
  const WaveletFamily family = make_meyer();

  const PlannerConstants constants = compute_constants(kernel, family);
  std::printf("c_bound = %.4f, e2 = %.4f, f2 = %.4f\n", constants.c_bound,
              constants.e2, constants.f2);

  const TruncationPlan plan = plan_mean_square(constants.inflated(), 0.2, 1.0);
  std::printf("mean-square plan: n0=%ld n=%d m=%ld\n", plan.n0, plan.n,
              plan.m.front());

  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);

  GeneratorSpec spec;
  spec.seed = 2024;
  const auto paths = simulate_batch(kernel, family, plan, spec, grid, 3);
  for (std::size_t p = 0; p < paths.size(); ++p)
    std::printf("path %zu: Y(0)=%.4f Y(0.5)=%.4f Y(1)=%.4f\n", p,
                paths[p].y_hat.front(), paths[p].y_hat[10],
                paths[p].y_hat.back());
  return 0;
}
