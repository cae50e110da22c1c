#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cansys/mat2.hpp"
#include "cansys/model.hpp"
#include "cansys/scatter.hpp"

namespace cansys {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string experiment = "run";
  PotentialSpec potential;

  std::size_t x_nodes = 128;
  double r_max = 10.0;
  double r_step = 0.5;
  double t_min = 2.0;
  double t_max = 10.0;
  double t_step = 0.5;
  std::size_t blocks = 16;
  std::vector<Complex> z_list{Complex(0.0, 1.0)};
  std::vector<double> khrushchev_r{1.0, 2.0, 3.0, 5.0};

  double ode_tol = 1e-10;
  std::vector<double> eps_schedule{1e-2, 5e-3};
  double depth_margin = 18.0;
  double horizon = 20.0;

  std::string packet_shape = "sine";
  double packet_a = 1.0;
  WavePacket::Channel channel = WavePacket::Channel::first;

  std::string out_dir = "out";

  Json raw;

  static RunConfig fromJson(const Json& j);
  static RunConfig fromFile(const std::string& path);

  WavePacket packet() const {
    WavePacket p = (packet_shape == "bump") ? WavePacket::bump(packet_a, channel)
                                            : WavePacket::sine(packet_a, channel);
    return p;
  }

  std::uint64_t hash() const {
    const std::string dump = raw.dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : dump) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  std::string hashString() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash());
    return buf;
  }
};

namespace detail {

inline void requirePositiveFinite(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(std::string("config: ") + name + " must be positive and finite");
}

}  // namespace detail

inline RunConfig RunConfig::fromJson(const Json& j) {
  RunConfig c;
  c.raw = j;
  try {
    c.experiment = j.value("experiment", c.experiment);
    if (j.contains("potential")) c.potential = PotentialSpec::fromJson(j.at("potential"));
    if (j.contains("grids")) {
      const Json& g = j.at("grids");
      c.x_nodes = g.value("x_nodes", c.x_nodes);
      c.r_max = g.value("r_max", c.r_max);
      c.r_step = g.value("r_step", c.r_step);
      c.t_min = g.value("t_min", c.t_min);
      c.t_max = g.value("t_max", c.t_max);
      c.t_step = g.value("t_step", c.t_step);
      c.blocks = g.value("blocks", c.blocks);
      if (g.contains("z")) {
        c.z_list.clear();
        for (const auto& zz : g.at("z"))
          c.z_list.emplace_back(zz.at(0).get<double>(), zz.at(1).get<double>());
      }
      if (g.contains("khrushchev_r"))
        c.khrushchev_r = g.at("khrushchev_r").get<std::vector<double>>();
    }
    if (j.contains("tolerances")) {
      const Json& t = j.at("tolerances");
      c.ode_tol = t.value("ode", c.ode_tol);
      if (t.contains("eps")) c.eps_schedule = t.at("eps").get<std::vector<double>>();
      c.depth_margin = t.value("depth_margin", c.depth_margin);
    }
    c.horizon = j.value("horizon", c.horizon);
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.contains("packet")) {
      const Json& p = j.at("packet");
      c.packet_shape = p.value("shape", c.packet_shape);
      c.packet_a = p.value("a", c.packet_a);
      const std::string ch = p.value("channel", "first");
      if (ch == "first") c.channel = WavePacket::Channel::first;
      else if (ch == "second") c.channel = WavePacket::Channel::second;
      else throw ConfigError("config: packet.channel must be 'first' or 'second'");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (c.x_nodes < 8 || c.x_nodes > 4096)
    throw ConfigError("config: x_nodes out of range [8, 4096]");
  detail::requirePositiveFinite(c.r_max, "grids.r_max");
  detail::requirePositiveFinite(c.r_step, "grids.r_step");
  detail::requirePositiveFinite(c.t_max, "grids.t_max");
  detail::requirePositiveFinite(c.t_step, "grids.t_step");
  detail::requirePositiveFinite(c.ode_tol, "tolerances.ode");
  detail::requirePositiveFinite(c.depth_margin, "tolerances.depth_margin");
  detail::requirePositiveFinite(c.horizon, "horizon");
  detail::requirePositiveFinite(c.packet_a, "packet.a");
  if (c.eps_schedule.empty()) throw ConfigError("config: eps schedule must be nonempty");
  for (std::size_t i = 0; i < c.eps_schedule.size(); ++i) {
    detail::requirePositiveFinite(c.eps_schedule[i], "tolerances.eps[k]");
    if (i > 0 && !(c.eps_schedule[i] < c.eps_schedule[i - 1]))
      throw ConfigError("config: eps schedule must decrease");
  }
  for (const Complex& z : c.z_list)
    if (!(z.imag() > 0.0)) throw ConfigError("config: grids.z must lie in the upper half-plane");
  if (c.blocks == 0) throw ConfigError("config: grids.blocks must be positive");
  return c;
}

inline RunConfig RunConfig::fromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return fromJson(j);
}

// ---------------------------------------------------------------------------
// Deterministic output helpers.
// ---------------------------------------------------------------------------

inline std::string formatNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(std::string hash, std::vector<std::string> columns)
      : hash_(std::move(hash)), columns_(std::move(columns)) {
    body_ += "# config_hash=" + hash_ + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      body_ += columns_[i];
      body_ += (i + 1 < columns_.size()) ? ',' : '\n';
    }
  }

  void row(std::initializer_list<double> values) {
    std::size_t i = 0;
    for (double v : values) {
      body_ += formatNumber(v);
      body_ += (++i < values.size()) ? ',' : '\n';
    }
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body_;
  }

 private:
  std::string hash_;
  std::vector<std::string> columns_;
  std::string body_;
};

inline void writeJsonFile(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace cansys
