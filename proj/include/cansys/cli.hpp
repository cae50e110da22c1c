#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "cansys/config.hpp"
#include "cansys/krein.hpp"
#include "cansys/model.hpp"
#include "cansys/scatter.hpp"
#include "cansys/szego.hpp"
#include "cansys/transfer.hpp"
#include "cansys/weyl.hpp"

namespace cansys {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

namespace detail {

inline std::filesystem::path ensureOutDir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline int writeDiagnostics(const RunConfig& cfg, const NumericError& e,
                            const std::string& command) {
  const auto dir = ensureOutDir(cfg);
  Json d{{"config_hash", cfg.hashString()},
         {"command", command},
         {"error", e.what()},
         {"last_good_t", e.last_good_t}};
  writeJsonFile(dir / "diagnostics.json", d);
  std::cout << d.dump() << "\n";
  return kExitNumeric;
}

inline Json verdictJson(const SzegoReport& rep) {
  Json j{{"verdict", toString(rep.verdict)},
         {"blocks", rep.terms.size()},
         {"sum", rep.partial_sums.empty() ? 0.0 : rep.partial_sums.back()}};
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

inline void dumpBlocks(const std::filesystem::path& path, const RunConfig& cfg,
                       const SzegoReport& rep) {
  CsvWriter csv(cfg.hashString(), {"n", "term", "partial_sum"});
  for (std::size_t n = 0; n < rep.terms.size(); ++n)
    csv.row({static_cast<double>(n), rep.terms[n], rep.partial_sums[n]});
  csv.write(path);
}

}  // namespace detail

// Szego criteria in potential, Hamiltonian, and maximal form.
inline int cmd_szego(const RunConfig& cfg) {
  const auto dir = detail::ensureOutDir(cfg);
  try {
    Json summary{{"config_hash", cfg.hashString()}, {"experiment", cfg.experiment}};
    const bool offdiag = cfg.potential.kind == PotentialKind::off_diagonal ||
                         cfg.potential.kind == PotentialKind::zero;
    CriterionOptions copts;
    copts.horizon = cfg.horizon;
    if (offdiag) {
      const SzegoReport pot = criterion_potential(cfg.potential, cfg.blocks, copts);
      detail::dumpBlocks(dir / "blocks_potential.csv", cfg, pot);
      summary["potential_criterion"] = detail::verdictJson(pot);
      const SzegoReport mx = criterion_maximal(cfg.potential, cfg.blocks, copts);
      detail::dumpBlocks(dir / "blocks_maximal.csv", cfg, mx);
      summary["maximal_criterion"] = detail::verdictJson(mx);
    }
    const BuiltModel model = build_hamiltonian(cfg.potential);
    const SzegoReport ham = criterion_hamiltonian(model.H, cfg.blocks, copts);
    detail::dumpBlocks(dir / "blocks_hamiltonian.csv", cfg, ham);
    summary["hamiltonian_criterion"] = detail::verdictJson(ham);
    writeJsonFile(dir / "szego_summary.json", summary);
    std::cout << summary.dump() << "\n";
    return kExitOk;
  } catch (const NumericError& e) {
    return detail::writeDiagnostics(cfg, e, "szego");
  }
}

// Boundary density and Weyl values on the configured z list.
inline int cmd_weyl(const RunConfig& cfg) {
  const auto dir = detail::ensureOutDir(cfg);
  try {
    const BuiltModel model = build_hamiltonian(cfg.potential);
    BoundaryDensityOptions bopts;
    bopts.eps_schedule = cfg.eps_schedule;
    bopts.depth_margin = cfg.depth_margin;
    const HerglotzData dens =
        boundary_density(model.H, 0.0, makePoissonGrid(cfg.x_nodes), bopts);
    CsvWriter csv(cfg.hashString(), {"x", "w", "flag"});
    for (std::size_t k = 0; k < dens.size(); ++k)
      csv.row({dens.grid.x[k], dens.w[k], static_cast<double>(dens.flag[k])});
    csv.write(dir / "density.csv");

    CsvWriter mcsv(cfg.hashString(), {"re_z", "im_z", "re_m", "im_m", "radius"});
    for (const Complex& z : cfg.z_list) {
      const WeylEstimate est =
          weyl_function(model.H, 0.0, z, weylDefaultDepth(0.0) + cfg.depth_margin - 18.0);
      mcsv.row({z.real(), z.imag(), est.value.real(), est.value.imag(), est.radius});
    }
    mcsv.write(dir / "weyl.csv");

    LogIntegralStats stats;
    const double J = log_integral(dens, &stats);
    Json summary{{"config_hash", cfg.hashString()},
                 {"experiment", cfg.experiment},
                 {"log_integral", J},
                 {"clipped_weight", stats.clipped_weight},
                 {"flagged_nodes", stats.flagged_nodes}};
    writeJsonFile(dir / "weyl_summary.json", summary);
    std::cout << summary.dump() << "\n";
    return kExitOk;
  } catch (const NumericError& e) {
    return detail::writeDiagnostics(cfg, e, "weyl");
  }
}

// Entropy profile plus the additivity cross-route.
inline int cmd_entropy(const RunConfig& cfg) {
  const auto dir = detail::ensureOutDir(cfg);
  try {
    const BuiltModel model = build_hamiltonian(cfg.potential);
    EntropyOptions eopts;
    eopts.tol = cfg.ode_tol;
    eopts.x_nodes = cfg.x_nodes;
    eopts.eps_schedule = cfg.eps_schedule;
    eopts.depth_margin = cfg.depth_margin;
    const EntropyProfile prof = entropy_ode(model.H, cfg.r_max, eopts);

    CsvWriter pcsv(cfg.hashString(), {"r", "I", "R", "K", "gamma"});
    std::vector<double> r_out;
    for (double r = 0.0; r <= cfg.r_max + 1e-12; r += cfg.r_step) r_out.push_back(r);
    for (double r : r_out)
      pcsv.row({r, prof.Iat(r), prof.Rat(r), prof.Kat(r), prof.gammaAt(r)});
    pcsv.write(dir / "profile.csv");

    EntropyDirectContext ctx;
    ctx.grid = prof.density0.grid;
    ctx.K0 = prof.K0;
    ctx.I0 = prof.I.front();
    ctx.depth_margin = cfg.depth_margin;
    ctx.tol = cfg.ode_tol;
    const std::vector<double> direct = entropy_direct_profile(model.H, r_out, ctx);

    double max_diff = 0.0;
    CsvWriter xcsv(cfg.hashString(), {"r", "K_ode", "K_direct", "diff"});
    for (std::size_t j = 0; j < r_out.size(); ++j) {
      const double ko = prof.Kat(r_out[j]);
      const double diff = ko - direct[j];
      max_diff = std::max(max_diff, std::abs(diff));
      xcsv.row({r_out[j], ko, direct[j], diff});
    }
    xcsv.write(dir / "entropy_cross.csv");

    Json summary{{"config_hash", cfg.hashString()},
                 {"experiment", cfg.experiment},
                 {"K0", prof.K0},
                 {"max_cross_route_diff", max_diff}};
    writeJsonFile(dir / "entropy_summary.json", summary);
    std::cout << summary.dump() << "\n";
    return kExitOk;
  } catch (const NumericError& e) {
    return detail::writeDiagnostics(cfg, e, "entropy");
  }
}

// Logarithmic convergence metric and the Khrushchev identity residuals.
inline int cmd_khrushchev(const RunConfig& cfg) {
  const auto dir = detail::ensureOutDir(cfg);
  try {
    const BuiltModel model = build_hamiltonian(cfg.potential);
    BoundaryDensityOptions bopts;
    bopts.eps_schedule = cfg.eps_schedule;
    bopts.depth_margin = cfg.depth_margin;
    const HerglotzData dens =
        boundary_density(model.H, 0.0, makePoissonGrid(cfg.x_nodes), bopts);

    std::vector<double> r_grid;
    for (double r = cfg.r_step; r <= cfg.r_max + 1e-12; r += cfg.r_step)
      r_grid.push_back(r);
    const std::vector<double> metric =
        convergence_metric(model.H, r_grid, dens, cfg.depth_margin, cfg.ode_tol);
    CsvWriter mcsv(cfg.hashString(), {"r", "metric"});
    for (std::size_t j = 0; j < r_grid.size(); ++j) mcsv.row({r_grid[j], metric[j]});
    mcsv.write(dir / "metric.csv");

    KhrushchevOptions kopts;
    kopts.depth_margin = cfg.depth_margin;
    kopts.tol = cfg.ode_tol;
    CsvWriter rcsv(cfg.hashString(), {"r", "x", "residual"});
    double worst = 0.0;
    for (double r : cfg.khrushchev_r) {
      const KhrushchevResult res = khrushchev_residual(model.H, r, dens, kopts);
      worst = std::max(worst, res.max_residual);
      for (std::size_t k = 0; k < res.xs.size(); ++k)
        rcsv.row({r, res.xs[k], res.residuals[k]});
    }
    rcsv.write(dir / "khrushchev_residual.csv");

    Json summary{{"config_hash", cfg.hashString()},
                 {"experiment", cfg.experiment},
                 {"final_metric", metric.empty() ? 0.0 : metric.back()},
                 {"max_identity_residual", worst}};
    writeJsonFile(dir / "khrushchev_summary.json", summary);
    std::cout << summary.dump() << "\n";
    return kExitOk;
  } catch (const NumericError& e) {
    return detail::writeDiagnostics(cfg, e, "khrushchev");
  }
}

// Wave-operator experiment: error curve plus the modified phase.
inline int cmd_scatter(const RunConfig& cfg) {
  const auto dir = detail::ensureOutDir(cfg);
  try {
    const BuiltModel model = build_hamiltonian(cfg.potential);
    WavePacket packet = cfg.packet();
    packet.validate();

    EntropyOptions eopts;
    eopts.tol = cfg.ode_tol;
    eopts.x_nodes = cfg.x_nodes;
    eopts.eps_schedule = cfg.eps_schedule;
    eopts.depth_margin = cfg.depth_margin;
    const double s_max = cfg.t_max + packet.a + 1.0;
    const EntropyProfile prof = entropy_ode(model.H, s_max, eopts);

    const double hs = packet.a / 64.0;
    const KreinTable table =
        build_krein_table(model.H, prof, s_max, hs, prof.density0.grid, cfg.ode_tol);

    std::vector<double> t_grid;
    for (double t = std::max(cfg.t_min, packet.a + 4.0 * hs); t <= cfg.t_max + 1e-12;
         t += cfg.t_step)
      t_grid.push_back(hs * std::llround(t / hs));
    const ScatterReport rep = scatter_error(table, packet, t_grid, prof.density0);

    CsvWriter ecsv(cfg.hashString(), {"t", "error"});
    for (std::size_t m = 0; m < rep.t.size(); ++m) ecsv.row({rep.t[m], rep.error[m]});
    ecsv.write(dir / "scatter_error.csv");

    std::vector<double> r_grid;
    for (double r = 0.0; r <= cfg.r_max + 1e-12; r += cfg.r_step) r_grid.push_back(r);
    const PhaseResult phase = modified_phase(model.N0, prof, r_grid);
    CsvWriter pcsv(cfg.hashString(), {"r", "phi"});
    for (std::size_t j = 0; j < phase.r.size(); ++j) pcsv.row({phase.r[j], phase.phi[j]});
    pcsv.write(dir / "phi.csv");

    Json manifest{{"config_hash", cfg.hashString()},
                  {"experiment", cfg.experiment},
                  {"potential", cfg.potential.toJson()},
                  {"packet", Json{{"shape", cfg.packet_shape},
                                  {"a", cfg.packet_a},
                                  {"channel", cfg.channel == WavePacket::Channel::first
                                                  ? "first"
                                                  : "second"}}},
                  {"grids", Json{{"x_nodes", cfg.x_nodes},
                                 {"t_min", cfg.t_min},
                                 {"t_max", cfg.t_max},
                                 {"t_step", cfg.t_step},
                                 {"table_step", hs}}},
                  {"tolerances", Json{{"ode", cfg.ode_tol},
                                      {"eps", cfg.eps_schedule},
                                      {"depth_margin", cfg.depth_margin}}},
                  {"final_error", rep.error.empty() ? 0.0 : rep.error.back()}};
    writeJsonFile(dir / "scatter_manifest.json", manifest);
    std::cout << manifest.dump() << "\n";
    return kExitOk;
  } catch (const NumericError& e) {
    return detail::writeDiagnostics(cfg, e, "scatter");
  }
}

inline int dispatch(const std::string& command, const RunConfig& cfg) {
  if (command == "szego") return cmd_szego(cfg);
  if (command == "weyl") return cmd_weyl(cfg);
  if (command == "entropy") return cmd_entropy(cfg);
  if (command == "khrushchev") return cmd_khrushchev(cfg);
  if (command == "scatter") return cmd_scatter(cfg);
  throw ConfigError("unknown command: " + command);
}

}  // namespace cansys
