#include "zk/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "zk/errors.hpp"

namespace zk {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

// little-endian byte packing, independent of the host order
template <class U>
void put_le(std::string& buf, U v) {
  for (std::size_t k = 0; k < sizeof(U); ++k) buf.push_back(char((v >> (8 * k)) & 0xff));
}
void put_f64(std::string& buf, double d) { put_le(buf, std::bit_cast<std::uint64_t>(d)); }

template <class U>
U get_le(const char* p) {
  U v = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k) v |= U(static_cast<unsigned char>(p[k])) << (8 * k);
  return v;
}
double get_f64(const char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

constexpr std::size_t header_bytes = 64;
constexpr std::size_t soliton_trailer_bytes = 24;

std::string encode(const SnapshotHeader& h, const Field& f) {
  if (f.grid.nx() != h.nx || f.grid.ny() != h.ny) throw ContractViolation("snapshot header does not match field");
  std::string buf;
  buf.reserve(header_bytes + 8 * f.values.size());
  buf.append("ZK2D", 4);
  put_le<std::uint16_t>(buf, snapshot_version);
  put_le<std::uint16_t>(buf, std::uint16_t(h.p));
  put_le<std::uint32_t>(buf, std::uint32_t(h.nx));
  put_le<std::uint32_t>(buf, std::uint32_t(h.ny));
  for (double d : {h.lx, h.ly, h.t, h.v, h.x_m, h.y_m}) put_f64(buf, d);
  for (double d : f.values) put_f64(buf, d);
  return buf;
}

SnapshotFile decode(const std::string& buf, const fs::path& path, std::size_t* end = nullptr) {
  if (buf.size() < header_bytes || std::memcmp(buf.data(), "ZK2D", 4) != 0)
    throw IoError(fmt::format("{}: not a snapshot file", path.string()));
  const char* p = buf.data();
  const auto version = get_le<std::uint16_t>(p + 4);
  if (version != snapshot_version) throw IoError(fmt::format("{}: unsupported snapshot version {}", path.string(), version));
  SnapshotHeader h;
  h.p = get_le<std::uint16_t>(p + 6);
  h.nx = int(get_le<std::uint32_t>(p + 8));
  h.ny = int(get_le<std::uint32_t>(p + 12));
  h.lx = get_f64(p + 16);
  h.ly = get_f64(p + 24);
  h.t = get_f64(p + 32);
  h.v = get_f64(p + 40);
  h.x_m = get_f64(p + 48);
  h.y_m = get_f64(p + 56);
  if (h.nx <= 0 || h.ny <= 0 || h.nx % 2 || h.ny % 2 || !(h.lx > 0) || !(h.ly > 0))
    throw IoError(fmt::format("{}: corrupt snapshot header", path.string()));
  const std::size_t n = std::size_t(h.nx) * h.ny;
  if (buf.size() < header_bytes + 8 * n) throw IoError(fmt::format("{}: truncated snapshot", path.string()));
  SnapshotFile out{h, Field(GridSpec(h.nx, h.ny, h.lx, h.ly))};
  for (std::size_t k = 0; k < n; ++k) out.field.values[k] = get_f64(p + header_bytes + 8 * k);
  if (end) *end = header_bytes + 8 * n;
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const fs::path& path, const std::string& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out.write(data.data(), std::streamsize(data.size()));
  if (!out) throw IoError(fmt::format("write failed for {}", path.string()));
}

// ---- config ----

std::string num(double d) { return fmt::format("{:.17g}", d); }

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + num(v[k]);
  return s;
}

const std::map<std::string, std::set<std::string>> known_keys = {
    {"run", {"p", "id", "output"}},
    {"grid", {"nx", "ny", "lx", "ly"}},
    {"frame", {"kind", "v", "x0"}},
    {"time", {"horizon", "steps", "h"}},
    {"scenario",
     {"kind", "lambda", "c1", "x1", "y1", "c2", "x2", "y2", "a", "epsilon", "amplitude", "wall", "snapshot", "soliton"}},
    {"record", {"every", "snapshot_times"}},
    {"breakdown", {"enabled", "tail_max", "energy_max"}},
    {"restart", {"refine", "steps", "horizon"}},
};

double to_double(const std::string& key, const std::string& s) {
  double d = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(d))
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, s));
  return d;
}

long to_long(const std::string& key, const std::string& s) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(fmt::format("{}: '{}' is not an integer", key, s));
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, s));
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

struct Reader {
  const pt::ptree& tree;
  std::optional<std::string> get(const std::string& key) const {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
    return std::nullopt;
  }
  void real(const std::string& key, double& out) const {
    if (auto v = get(key)) out = to_double(key, *v);
  }
  template <class I>
  void integer(const std::string& key, I& out) const {
    if (auto v = get(key)) out = I(to_long(key, *v));
  }
  void text(const std::string& key, std::string& out) const {
    if (auto v = get(key)) out = *v;
  }
  void boolean(const std::string& key, bool& out) const {
    if (auto v = get(key)) out = to_bool(key, *v);
  }
};

}  // namespace

void write_snapshot(const fs::path& path, const SnapshotHeader& h, const Field& f) { dump(path, encode(h, f)); }

SnapshotFile read_snapshot(const fs::path& path) { return decode(slurp(path), path); }

void write_soliton(const fs::path& path, const SolitonProfile& q) {
  const GridSpec& g = q.field.grid;
  std::string buf = encode({q.p, g.nx(), g.ny(), g.lx(), g.ly(), 0.0, q.c, 0.0, 0.0}, q.field);
  buf.append("ZKSL", 4);
  put_le<std::uint32_t>(buf, 0);
  put_f64(buf, q.c);
  put_f64(buf, q.residual_sup);
  dump(path, buf);
}

SolitonProfile read_soliton(const fs::path& path) {
  const std::string buf = slurp(path);
  std::size_t end = 0;
  SnapshotFile s = decode(buf, path, &end);
  if (buf.size() != end + soliton_trailer_bytes || std::memcmp(buf.data() + end, "ZKSL", 4) != 0)
    throw IoError(fmt::format("{}: snapshot has no soliton trailer", path.string()));
  SolitonProfile q{std::move(s.field), s.header.p, get_f64(buf.data() + end + 8), get_f64(buf.data() + end + 16), {}};
  return q;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (p < 2 || p > 4) fail(fmt::format("run.p = {} not in {{2, 3, 4}}", p));
  if (nx < 4 || ny < 4 || nx % 2 || ny % 2) fail(fmt::format("grid {}x{}: sizes must be even and >= 4", nx, ny));
  if (!(lx > 0) || !(ly > 0) || !std::isfinite(lx) || !std::isfinite(ly)) fail("grid.lx, grid.ly must be positive");
  if (!(horizon > 0) || !std::isfinite(horizon)) fail("time.horizon must be positive");
  if (steps < 1) fail("time.steps must be positive");
  if (record_every < 0) fail("record.every must be >= 0");
  if (!std::isfinite(frame.v) || !std::isfinite(frame.x0)) fail("frame values must be finite");
  for (double t : snapshot_times)
    if (!(t >= 0) || !std::isfinite(t)) fail("record.snapshot_times must be non-negative");
  if (!(breakdown.tail_max > 0) || !(breakdown.energy_max > 0)) fail("breakdown thresholds must be positive");
  const ScenarioSpec& s = scenario;
  for (double v : {s.lambda, s.first.c, s.first.x, s.first.y, s.second.c, s.second.x, s.second.y, s.a, s.epsilon, s.amplitude})
    if (!std::isfinite(v)) fail("scenario values must be finite");
  if (s.kind == ScenarioSpec::Kind::two_solitons && !(s.first.c > 0 && s.second.c > 0)) fail("scenario c1, c2 must be positive");
  if (s.kind == ScenarioSpec::Kind::aniso_gaussian && !(s.epsilon > 0)) fail("scenario.epsilon must be positive");
  if (restart) {
    if (restart->refine < 1) fail("restart.refine must be >= 1");
    if (restart->steps && *restart->steps < 1) fail("restart.steps must be positive");
    if (restart->horizon && !(*restart->horizon > 0)) fail("restart.horizon must be positive");
  }
}

std::string to_ini(const RunConfig& c) {
  std::string s;
  s += fmt::format("[run]\np = {}\nid = {}\noutput = {}\n\n", c.p, c.run_id, c.output);
  s += fmt::format("[grid]\nnx = {}\nny = {}\nlx = {}\nly = {}\n\n", c.nx, c.ny, num(c.lx), num(c.ly));
  const char* kind = c.frame.kind == FrameSpec::Kind::lab        ? "lab"
                     : c.frame.kind == FrameSpec::Kind::constant ? "constant"
                                                                 : "tracking";
  s += fmt::format("[frame]\nkind = {}\nv = {}\nx0 = {}\n\n", kind, num(c.frame.v), num(c.frame.x0));
  s += fmt::format("[time]\nhorizon = {}\nsteps = {}\n\n", num(c.horizon), c.steps);
  const ScenarioSpec& sc = c.scenario;
  s += fmt::format("[scenario]\nkind = {}\nlambda = {}\nc1 = {}\nx1 = {}\ny1 = {}\nc2 = {}\nx2 = {}\ny2 = {}\n", to_string(sc.kind),
                   num(sc.lambda), num(sc.first.c), num(sc.first.x), num(sc.first.y), num(sc.second.c), num(sc.second.x),
                   num(sc.second.y));
  s += fmt::format("a = {}\nepsilon = {}\namplitude = {}\nwall = {}\nsnapshot = {}\nsoliton = {}\n\n", num(sc.a),
                   num(sc.epsilon), num(sc.amplitude), to_string(sc.wall), c.snapshot, c.soliton);
  s += fmt::format("[record]\nevery = {}\nsnapshot_times = {}\n\n", c.record_every, list(c.snapshot_times));
  s += fmt::format("[breakdown]\nenabled = {}\ntail_max = {}\nenergy_max = {}\n", c.breakdown.enabled ? "true" : "false",
                   num(c.breakdown.tail_max), num(c.breakdown.energy_max));
  if (c.restart) {
    s += fmt::format("\n[restart]\nrefine = {}\n", c.restart->refine);
    if (c.restart->steps) s += fmt::format("steps = {}\n", *c.restart->steps);
    if (c.restart->horizon) s += fmt::format("horizon = {}\n", num(*c.restart->horizon));
  }
  return s;
}

RunConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ConfigError(fmt::format("override '{}' is not section.key=value", o));
    tree.put(pt::ptree::path_type(trim(o.substr(0, eq)), '.'), trim(o.substr(eq + 1)));
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys.find(section);
    if (it == known_keys.end() || !body.data().empty()) throw ConfigError(fmt::format("unknown config section '{}'", section));
    for (const auto& kv : body)
      if (!it->second.count(kv.first)) throw ConfigError(fmt::format("unknown config key '{}.{}'", section, kv.first));
  }

  RunConfig c;
  Reader r{tree};
  r.integer("run.p", c.p);
  r.text("run.id", c.run_id);
  r.text("run.output", c.output);
  r.integer("grid.nx", c.nx);
  c.ny = c.nx;
  r.integer("grid.ny", c.ny);
  r.real("grid.lx", c.lx);
  c.ly = c.lx;
  r.real("grid.ly", c.ly);

  if (auto k = r.get("frame.kind")) {
    if (*k == "lab") c.frame = FrameSpec::lab();
    else if (*k == "constant") c.frame = FrameSpec::constant(0.0);
    else if (*k == "tracking") c.frame = FrameSpec::tracking(0.0);
    else throw ConfigError("frame.kind must be lab, constant or tracking, got '" + *k + "'");
  }
  r.real("frame.v", c.frame.v);
  r.real("frame.x0", c.frame.x0);

  r.real("time.horizon", c.horizon);
  const bool has_steps = bool(r.get("time.steps"));
  r.integer("time.steps", c.steps);
  if (auto h = r.get("time.h")) {
    const double hv = to_double("time.h", *h);
    if (!(hv > 0)) throw ConfigError("time.h must be positive");
    const double n = c.horizon / hv;
    const long rounded = std::lround(n);
    if (std::abs(n - rounded) > 1e-9 * n) throw ConfigError("time.h does not divide time.horizon");
    if (has_steps && rounded != c.steps) throw ConfigError("time.h and time.steps disagree");
    c.steps = rounded;
  }

  ScenarioSpec& s = c.scenario;
  if (auto k = r.get("scenario.kind")) s.kind = parse_scenario_kind(*k);
  r.real("scenario.lambda", s.lambda);
  r.real("scenario.c1", s.first.c);
  r.real("scenario.x1", s.first.x);
  r.real("scenario.y1", s.first.y);
  r.real("scenario.c2", s.second.c);
  r.real("scenario.x2", s.second.x);
  r.real("scenario.y2", s.second.y);
  r.real("scenario.a", s.a);
  r.real("scenario.epsilon", s.epsilon);
  r.real("scenario.amplitude", s.amplitude);
  if (auto w = r.get("scenario.wall")) s.wall = parse_wall_variant(*w);
  r.text("scenario.snapshot", c.snapshot);
  r.text("scenario.soliton", c.soliton);

  r.integer("record.every", c.record_every);
  if (auto l = r.get("record.snapshot_times"); l && !l->empty()) {
    std::stringstream ss(*l);
    std::string item;
    while (std::getline(ss, item, ',')) c.snapshot_times.push_back(to_double("record.snapshot_times", trim(item)));
  }

  r.boolean("breakdown.enabled", c.breakdown.enabled);
  r.real("breakdown.tail_max", c.breakdown.tail_max);
  r.real("breakdown.energy_max", c.breakdown.energy_max);

  if (tree.get_child_optional("restart")) {
    RestartSpec rs;
    r.integer("restart.refine", rs.refine);
    if (auto v = r.get("restart.steps")) rs.steps = to_long("restart.steps", *v);
    if (auto v = r.get("restart.horizon")) rs.horizon = to_double("restart.horizon", *v);
    c.restart = rs;
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = slurp(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, overrides);
}

fs::path output_root() {
  if (const char* env = std::getenv("ZK2D_OUTPUT_ROOT"); env && *env) return fs::path(env);
  return fs::path("runs");
}

fs::path output_dir(const RunConfig& c) { return c.output.empty() ? output_root() / c.run_id : fs::path(c.output); }

std::string read_text(const fs::path& path) { return slurp(path); }
void write_text(const fs::path& path, const std::string& text) { dump(path, text); }

}  // namespace zk
