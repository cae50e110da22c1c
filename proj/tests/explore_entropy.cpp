#include <cstdio>
#include <chrono>
#include "cansys/szego.hpp"
#include "support/families.hpp"
using namespace cansys;
int main() {
  auto t0 = std::chrono::steady_clock::now();
  const BuiltModel m = build_hamiltonian(families::bump());
  const EntropyProfile prof = entropy_ode(m.H, 6.0);
  auto t1 = std::chrono::steady_clock::now();
  std::printf("BUMP profile: K0=%.8f I0=%.10f (elapsed %.1f ms)\n", prof.K0, prof.I.front(),
              std::chrono::duration<double, std::milli>(t1 - t0).count());
  std::printf("expected I(r>=2) = e^{2g(2)} = %.10f, profile I(3) = %.10f\n",
              std::exp(2.0 * families::bump().g(2.0)), prof.Iat(3.0));
  std::printf("r, I, R, K, gamma:\n");
  for (double r : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0})
    std::printf("  %.1f  %.8f  %.2e  %.8f  %.2e\n", r, prof.Iat(r), prof.Rat(r), prof.Kat(r), prof.gammaAt(r));

  EntropyDirectContext ctx;
  ctx.grid = prof.density0.grid;
  ctx.K0 = prof.K0;
  ctx.I0 = prof.I.front();
  const std::vector<double> rg{0.5, 1.0, 1.5, 2.0, 3.0, 5.0};
  const auto direct = entropy_direct_profile(m.H, rg, ctx);
  for (std::size_t j = 0; j < rg.size(); ++j)
    std::printf("  r=%.1f K_ode=%.8f K_direct=%.8f diff=%.2e\n", rg[j], prof.Kat(rg[j]), direct[j],
                prof.Kat(rg[j]) - direct[j]);
  auto t2 = std::chrono::steady_clock::now();
  std::printf("direct profile elapsed %.1f ms\n", std::chrono::duration<double, std::milli>(t2 - t1).count());

  // szego function rational oracle
  PoissonGrid g = makePoissonGrid(256);
  HerglotzData data; data.grid = g; data.w.resize(g.size()); data.flag.assign(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) data.w[k] = (g.x[k]*g.x[k] + 4.0) / (g.x[k]*g.x[k] + 1.0);
  auto D = [](Complex z) { return (z + Complex(0,2)) / (z + Complex(0,1)); };
  for (Complex z : {Complex(0,1), Complex(0,2), Complex(1,1)}) {
    const Complex v = szego_function(data, z).value;
    std::printf("D(%.0f+%.0fi): computed (%.10f, %.10f) exact (%.10f, %.10f)\n",
                z.real(), z.imag(), v.real(), v.imag(), D(z).real(), D(z).imag());
  }
  const auto bnd = szego_boundary(data);
  double worst = 0;
  for (std::size_t k = 0; k < g.size(); ++k) worst = std::max(worst, std::abs(bnd[k] - D(Complex(g.x[k], 0.0))));
  std::printf("boundary worst err = %.2e\n", worst);

  // GBUMP profile and dual
  const BuiltModel gm = build_hamiltonian(families::gbump());
  const EntropyProfile gp = entropy_ode(gm.H, 4.0);
  const EntropyProfile gd = entropy_ode(gm.H.dual(), 4.0);
  for (double r : {0.0, 1.0, 2.0, 3.0})
    std::printf("GBUMP K(%.0f)=%.8f dual=%.8f diff=%.2e | gamma=%.6f\n", r, gp.Kat(r), gd.Kat(r),
                gp.Kat(r) - gd.Kat(r), gp.gammaAt(r));
  auto t3 = std::chrono::steady_clock::now();
  std::printf("total %.1f ms\n", std::chrono::duration<double, std::milli>(t3 - t0).count());
  return 0;
}
