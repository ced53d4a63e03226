#include "mvgf/scenario.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mvgf {

namespace {

// ---- value syntax ----------------------------------------------------------

struct Node {
  bool is_list = false;
  std::string atom;
  std::vector<Node> items;
};

class ValueParser {
 public:
  explicit ValueParser(const std::string& s) : s_(s) {}

  Node parse() {
    Node n = value();
    skip();
    if (pos_ != s_.size()) throw ConfigError("unexpected trailing text '" + s_.substr(pos_) + "'");
    return n;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  Node value() {
    skip();
    if (pos_ >= s_.size()) throw ConfigError("missing value");
    const char open = s_[pos_];
    if (open == '[' || open == '(') {
      const char close = open == '[' ? ']' : ')';
      ++pos_;
      Node n;
      n.is_list = true;
      skip();
      if (pos_ < s_.size() && s_[pos_] == close) {
        ++pos_;
        return n;
      }
      while (true) {
        n.items.push_back(value());
        skip();
        if (pos_ >= s_.size()) throw ConfigError(std::string("unterminated list, expected '") + close + "'");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == close) {
          ++pos_;
          return n;
        }
        throw ConfigError(std::string("expected ',' or '") + close + "' in list");
      }
    }
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ')' && s_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
    }
    Node n;
    n.atom = s_.substr(start, pos_ - start);
    if (n.atom.empty()) throw ConfigError("empty list element");
    return n;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected a real number, got '" + s + "'");
  return v;
}

long long to_integer(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected an unsigned 64-bit integer, got '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  const auto v = to_integer(s);
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError("integer out of range: " + s);
  return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

std::string to_string_value(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

// ((k1,k2),a), ((k),a) or (k,a)
std::vector<CosineMode> to_modes(const std::string& text) {
  const Node root = ValueParser(text).parse();
  if (!root.is_list) throw ConfigError("mode list must be written as [((k1,k2),a), ...]");
  std::vector<CosineMode> out;
  for (const auto& item : root.items) {
    if (!item.is_list || item.items.size() != 2) throw ConfigError("each mode must be a pair (k, amplitude)");
    CosineMode m;
    const auto& k = item.items[0];
    if (k.is_list) {
      if (k.items.empty() || k.items.size() > 2) throw ConfigError("wavevector must have one or two components");
      for (std::size_t a = 0; a < k.items.size(); ++a) {
        if (k.items[a].is_list) throw ConfigError("wavevector components must be integers");
        m.k[a] = to_int(k.items[a].atom);
      }
    } else {
      m.k[0] = to_int(k.atom);
    }
    if (item.items[1].is_list) throw ConfigError("mode amplitude must be a number");
    m.amplitude = to_real(item.items[1].atom);
    out.push_back(m);
  }
  return out;
}

std::vector<RadialTerm> to_terms(const std::string& text) {
  const Node root = ValueParser(text).parse();
  if (!root.is_list) throw ConfigError("terms must be written as [(L,gamma), ...]");
  std::vector<RadialTerm> out;
  for (const auto& item : root.items) {
    if (!item.is_list || item.items.size() != 2 || item.items[0].is_list || item.items[1].is_list) {
      throw ConfigError("each radial term must be a pair (L, gamma)");
    }
    out.push_back({to_real(item.items[0].atom), to_real(item.items[1].atom)});
  }
  return out;
}

// ---- enum names ------------------------------------------------------------

const std::map<std::string, ConfinementSpec::Kind> kVKinds = {{"zero", ConfinementSpec::Kind::zero},
                                                              {"cosine_sum", ConfinementSpec::Kind::cosine_sum},
                                                              {"tabulated", ConfinementSpec::Kind::tabulated}};
const std::map<std::string, InteractionSpec::Kind> kWKinds = {
    {"zero", InteractionSpec::Kind::zero},
    {"fourier_multiplier", InteractionSpec::Kind::fourier_multiplier},
    {"newtonian_green", InteractionSpec::Kind::newtonian_green},
    {"yukawa_green", InteractionSpec::Kind::yukawa_green},
    {"radial_power", InteractionSpec::Kind::radial_power},
    {"cosine_sum", InteractionSpec::Kind::cosine_sum}};
const std::map<std::string, InitialSetting::Kind> kInitKinds = {
    {"uniform_plus_modes", InitialSetting::Kind::uniform_plus_modes},
    {"tabulated", InitialSetting::Kind::tabulated},
    {"gibbs_of_V", InitialSetting::Kind::gibbs_of_V}};
const std::map<std::string, SpectrumSetting::Base> kBases = {{"initial", SpectrumSetting::Base::initial},
                                                             {"stationary", SpectrumSetting::Base::stationary}};

template <class E>
E lookup(const std::map<std::string, E>& table, const std::string& v, const char* what) {
  const auto it = table.find(v);
  if (it != table.end()) return it->second;
  std::string allowed;
  for (const auto& [k, _] : table) allowed += (allowed.empty() ? "" : ", ") + k;
  throw ConfigError(std::string("unknown ") + what + " '" + v + "' (allowed: " + allowed + ")");
}

template <class E>
std::string name_of(const std::map<std::string, E>& table, E v) {
  for (const auto& [k, e] : table) {
    if (e == v) return k;
  }
  return "?";
}

using Setter = std::function<void(Scenario&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"name", [](Scenario& s, const std::string& v) { s.name = to_string_value(v); }},
      {"seed", [](Scenario& s, const std::string& v) { s.seed = to_u64(v); }},
      {"grid.dim", [](Scenario& s, const std::string& v) { s.dim = to_int(v); }},
      {"grid.M", [](Scenario& s, const std::string& v) { s.M = to_int(v); }},
      {"V.kind", [](Scenario& s, const std::string& v) { s.V.kind = lookup(kVKinds, v, "V.kind"); }},
      {"V.modes", [](Scenario& s, const std::string& v) { s.V.modes = to_modes(v); }},
      {"V.path", [](Scenario& s, const std::string& v) { s.V.path = to_string_value(v); }},
      {"W.kind", [](Scenario& s, const std::string& v) { s.W.kind = lookup(kWKinds, v, "W.kind"); }},
      {"W.chi", [](Scenario& s, const std::string& v) { s.W.chi = to_real(v); }},
      {"W.alpha", [](Scenario& s, const std::string& v) { s.W.alpha = to_real(v); }},
      {"W.terms", [](Scenario& s, const std::string& v) { s.W.terms = to_terms(v); }},
      {"W.modes", [](Scenario& s, const std::string& v) { s.W.modes = to_modes(v); }},
      {"initial.kind",
       [](Scenario& s, const std::string& v) { s.initial.kind = lookup(kInitKinds, v, "initial.kind"); }},
      {"initial.modes", [](Scenario& s, const std::string& v) { s.initial.modes = to_modes(v); }},
      {"initial.path", [](Scenario& s, const std::string& v) { s.initial.path = to_string_value(v); }},
      {"flow.dt", [](Scenario& s, const std::string& v) { s.flow.dt = to_real(v); }},
      {"flow.t_end", [](Scenario& s, const std::string& v) { s.flow.t_end = to_real(v); }},
      {"flow.dealias", [](Scenario& s, const std::string& v) { s.flow.dealias = to_bool(v); }},
      {"flow.adapt_cfl", [](Scenario& s, const std::string& v) { s.flow.adapt_cfl = to_real(v); }},
      {"flow.floor_policy",
       [](Scenario&, const std::string& v) {
         if (v != "clip_renormalize") throw ConfigError("flow.floor_policy must be clip_renormalize");
       }},
      {"flow.blowup_linf", [](Scenario& s, const std::string& v) { s.flow.blowup_linf = to_real(v); }},
      {"flow.log_every", [](Scenario& s, const std::string& v) { s.flow.log_every = to_int(v); }},
      {"flow.snapshot_every", [](Scenario& s, const std::string& v) { s.flow.snapshot_every = to_int(v); }},
      {"flow.conv_tol", [](Scenario& s, const std::string& v) { s.flow.conv_tol = to_real(v); }},
      {"flow.max_retries", [](Scenario& s, const std::string& v) { s.flow.max_retries = to_int(v); }},
      {"flow.max_clip_rate", [](Scenario& s, const std::string& v) { s.flow.max_clip_rate = to_real(v); }},
      {"stationary.damping", [](Scenario& s, const std::string& v) { s.stationary.damping = to_real(v); }},
      {"stationary.max_iter", [](Scenario& s, const std::string& v) { s.stationary.max_iter = to_int(v); }},
      {"stationary.tol", [](Scenario& s, const std::string& v) { s.stationary.tol = to_real(v); }},
      {"spectrum.max_mode", [](Scenario& s, const std::string& v) { s.spectrum.max_mode = to_int(v); }},
      {"spectrum.kernel_tol_rel",
       [](Scenario& s, const std::string& v) { s.spectrum.kernel_tol_rel = to_real(v); }},
      {"spectrum.base", [](Scenario& s, const std::string& v) { s.spectrum.base = lookup(kBases, v, "spectrum.base"); }},
      {"particles.n",
       [](Scenario& s, const std::string& v) {
         const auto n = to_integer(v);
         if (n < 1) throw ConfigError("particles.n must be at least 1");
         s.particles.n = static_cast<std::size_t>(n);
       }},
      {"particles.smoothing_modes",
       [](Scenario& s, const std::string& v) { s.particles.smoothing_modes = to_int(v); }},
      {"particles.bandwidth_modes",
       [](Scenario& s, const std::string& v) { s.particles.run.bandwidth_modes = to_int(v); }},
      {"particles.dt", [](Scenario& s, const std::string& v) { s.particles.run.dt = to_real(v); }},
      {"particles.t_end", [](Scenario& s, const std::string& v) { s.particles.run.t_end = to_real(v); }},
      {"particles.temperature",
       [](Scenario& s, const std::string& v) { s.particles.run.temperature = to_real(v); }},
      {"particles.log_every", [](Scenario& s, const std::string& v) { s.particles.run.log_every = to_int(v); }},
      {"fit.r2_min", [](Scenario& s, const std::string& v) { s.fit.r2_min = to_real(v); }},
      {"fit.min_points", [](Scenario& s, const std::string& v) { s.fit.min_points = to_int(v); }},
      {"fit.F_inf", [](Scenario& s, const std::string& v) { s.fit.F_inf = to_real(v); }},
      {"fit.trajectory", [](Scenario& s, const std::string& v) { s.fit.trajectory = to_string_value(v); }},
      {"compare.a", [](Scenario& s, const std::string& v) { s.compare.a = to_string_value(v); }},
      {"compare.b", [](Scenario& s, const std::string& v) { s.compare.b = to_string_value(v); }},
      {"outputs.dir", [](Scenario& s, const std::string& v) { s.out_dir = to_string_value(v); }},
  };
  return table;
}

const std::set<std::string> kSections = {"grid", "V", "W", "initial", "flow", "stationary",
                                         "spectrum", "particles", "fit", "compare", "outputs"};

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string modes_text(const std::vector<CosineMode>& modes) {
  std::string s = "[";
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i) s += ", ";
    s += "((" + std::to_string(modes[i].k[0]) + "," + std::to_string(modes[i].k[1]) + ")," +
         real(modes[i].amplitude) + ")";
  }
  return s + "]";
}

std::string terms_text(const std::vector<RadialTerm>& terms) {
  std::string s = "[";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) s += ", ";
    s += "(" + real(terms[i].coefficient) + "," + real(terms[i].exponent) + ")";
  }
  return s + "]";
}

void check_modes(const std::vector<CosineMode>& modes, const Scenario& s, const char* key) {
  for (const auto& m : modes) {
    if (s.dim == 1 && m.k[1] != 0) throw ConfigError(std::string(key) + ": second wavevector component on a 1-D grid");
    for (int a = 0; a < 2; ++a) {
      if (2 * std::abs(m.k[a]) >= s.M) throw ConfigError(std::string(key) + ": mode beyond the grid band |k| < M/2");
    }
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario sc;
  std::istringstream in(text);
  std::string raw, section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto where = "line " + std::to_string(line_no) + ": ";
    // Strip comments outside quotes.
    bool quoted_part = false;
    std::size_t cut = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '"') quoted_part = !quoted_part;
      if (raw[i] == '#' && !quoted_part) {
        cut = i;
        break;
      }
    }
    const std::string line = trim(raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      if (!kSections.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
    std::string full = key;
    if (key.find('.') == std::string::npos && !section.empty()) full = section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + full + "'");
    if (!seen.insert(full).second) throw ConfigError(where + "duplicate key '" + full + "'");
    try {
      it->second(sc, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + full + ": " + e.what());
    }
  }
  validate(sc);
  return sc;
}

void validate_particle_bands(const Scenario& s) {
  if (s.particles.smoothing_modes < 0 || 2 * s.particles.smoothing_modes > s.M) {
    throw ConfigError("particles.smoothing_modes must lie in [0, M/2]");
  }
  if (s.particles.run.bandwidth_modes < 0 || 2 * s.particles.run.bandwidth_modes > s.M) {
    throw ConfigError("particles.bandwidth_modes must lie in [0, M/2]");
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void validate(const Scenario& s) {
  const auto grid = TorusGrid::create(s.dim, s.M);
  if (s.V.kind == ConfinementSpec::Kind::tabulated && s.V.path.empty()) {
    throw ConfigError("V.kind = tabulated requires V.path");
  }
  check_modes(s.V.modes, s, "V.modes");
  check_modes(s.W.modes, s, "W.modes");
  check_modes(s.initial.modes, s, "initial.modes");
  s.W.validate(s.dim);
  kernel_multiplier(s.W, grid);
  if (s.initial.kind == InitialSetting::Kind::tabulated && s.initial.path.empty()) {
    throw ConfigError("initial.kind = tabulated requires initial.path");
  }
  s.flow.validate();
  if (!(s.stationary.damping > 0.0 && s.stationary.damping <= 1.0)) {
    throw ConfigError("stationary.damping must lie in (0, 1]");
  }
  if (s.stationary.max_iter < 1) throw ConfigError("stationary.max_iter must be positive");
  if (!(s.stationary.tol > 0.0)) throw ConfigError("stationary.tol must be positive");
  if (s.spectrum.max_mode < 1 || 2 * s.spectrum.max_mode >= s.M) {
    throw ConfigError("spectrum.max_mode must lie in [1, M/2)");
  }
  if (!(s.spectrum.kernel_tol_rel > 0.0)) throw ConfigError("spectrum.kernel_tol_rel must be positive");
  s.particles.run.validate();
  if (!(s.fit.r2_min > 0.0 && s.fit.r2_min <= 1.0)) throw ConfigError("fit.r2_min must lie in (0, 1]");
  if (s.fit.min_points < 3) throw ConfigError("fit.min_points must be at least 3");
}

std::string serialize(const Scenario& s) {
  std::ostringstream o;
  o << "name = " << quoted(s.name) << "\n";
  o << "seed = " << s.seed << "\n\n";
  o << "[grid]\ndim = " << s.dim << "\nM = " << s.M << "\n\n";
  o << "[V]\nkind = " << name_of(kVKinds, s.V.kind) << "\nmodes = " << modes_text(s.V.modes)
    << "\npath = " << quoted(s.V.path) << "\n\n";
  o << "[W]\nkind = " << name_of(kWKinds, s.W.kind) << "\nchi = " << real(s.W.chi) << "\nalpha = " << real(s.W.alpha)
    << "\nterms = " << terms_text(s.W.terms) << "\nmodes = " << modes_text(s.W.modes) << "\n\n";
  o << "[initial]\nkind = " << name_of(kInitKinds, s.initial.kind) << "\nmodes = " << modes_text(s.initial.modes)
    << "\npath = " << quoted(s.initial.path) << "\n\n";
  const auto& f = s.flow;
  o << "[flow]\ndt = " << real(f.dt) << "\nt_end = " << real(f.t_end) << "\ndealias = " << (f.dealias ? "true" : "false")
    << "\nadapt_cfl = " << real(f.adapt_cfl) << "\nfloor_policy = clip_renormalize\nblowup_linf = " << real(f.blowup_linf)
    << "\nlog_every = " << f.log_every << "\nsnapshot_every = " << f.snapshot_every << "\nconv_tol = " << real(f.conv_tol)
    << "\nmax_retries = " << f.max_retries << "\nmax_clip_rate = " << real(f.max_clip_rate) << "\n\n";
  o << "[stationary]\ndamping = " << real(s.stationary.damping) << "\nmax_iter = " << s.stationary.max_iter
    << "\ntol = " << real(s.stationary.tol) << "\n\n";
  o << "[spectrum]\nmax_mode = " << s.spectrum.max_mode << "\nkernel_tol_rel = " << real(s.spectrum.kernel_tol_rel)
    << "\nbase = " << name_of(kBases, s.spectrum.base) << "\n\n";
  const auto& p = s.particles;
  o << "[particles]\nn = " << p.n << "\nsmoothing_modes = " << p.smoothing_modes
    << "\nbandwidth_modes = " << p.run.bandwidth_modes << "\ndt = " << real(p.run.dt) << "\nt_end = " << real(p.run.t_end)
    << "\ntemperature = " << real(p.run.temperature) << "\nlog_every = " << p.run.log_every << "\n\n";
  o << "[fit]\nr2_min = " << real(s.fit.r2_min) << "\nmin_points = " << s.fit.min_points << "\n";
  if (s.fit.F_inf) o << "F_inf = " << real(*s.fit.F_inf) << "\n";
  o << "trajectory = " << quoted(s.fit.trajectory) << "\n\n";
  o << "[compare]\na = " << quoted(s.compare.a) << "\nb = " << quoted(s.compare.b) << "\n\n";
  o << "[outputs]\ndir = " << quoted(s.out_dir) << "\n";
  return o.str();
}

}  // namespace mvgf
