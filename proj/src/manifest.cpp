#include "biwarp/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <variant>

#include "biwarp/errors.hpp"

namespace biwarp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ------------------------------------------------------------ raw values

struct Pos {
  int line = 1;
  int col = 1;
};

struct Value;
using List = std::vector<Value>;
using Map = std::vector<std::pair<std::string, Value>>;

struct Ident {
  std::string name;
};
struct Str {
  std::string text;
};

struct Value {
  Pos pos;
  std::variant<double, Ident, Str, List, Map> v;

  bool is_number() const { return std::holds_alternative<double>(v); }
  bool is_ident() const { return std::holds_alternative<Ident>(v); }
  bool is_string() const { return std::holds_alternative<Str>(v); }
  bool is_list() const { return std::holds_alternative<List>(v); }
  bool is_map() const { return std::holds_alternative<Map>(v); }
};

[[noreturn]] void fail_at(const Pos& p, const std::string& what) { throw ParseError(what, p.line, p.col); }

class Reader {
 public:
  explicit Reader(std::string_view text) : s_(text) {}

  std::vector<std::pair<std::string, Value>> statements() {
    std::vector<std::pair<std::string, Value>> out;
    std::set<std::string> seen;
    for (;;) {
      skip();
      if (at_end()) return out;
      const Pos key_pos = pos();
      if (!is_ident_start(peek())) fail_at(key_pos, std::string("expected a key, found '") + peek() + "'");
      std::string key = ident();
      skip();
      expect('=');
      Value v = value();
      if (!seen.insert(key).second) fail_at(key_pos, "duplicate key '" + key + "'");
      out.emplace_back(std::move(key), std::move(v));
    }
  }

 private:
  bool at_end() const { return i_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[i_]; }
  Pos pos() const { return {line_, col_}; }
  static bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }

  void advance() {
    if (s_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip() {
    while (!at_end()) {
      const char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  void expect(char c) {
    skip();
    if (peek() != c) {
      if (at_end()) fail_at(pos(), std::string("expected '") + c + "', found end of input");
      fail_at(pos(), std::string("expected '") + c + "', found '" + peek() + "'");
    }
    advance();
  }

  std::string ident() {
    std::string out;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      out += peek();
      advance();
    }
    return out;
  }

  Value value() {
    skip();
    Value out;
    out.pos = pos();
    if (at_end()) fail_at(out.pos, "expected a value, found end of input");
    const char c = peek();
    if (c == '[') {
      advance();
      List items;
      skip();
      if (peek() == ']') {
        advance();
      } else {
        for (;;) {
          items.push_back(value());
          skip();
          if (peek() == ',') {
            advance();
            continue;
          }
          expect(']');
          break;
        }
      }
      out.v = std::move(items);
    } else if (c == '{') {
      advance();
      Map entries;
      skip();
      if (peek() == '}') {
        advance();
      } else {
        for (;;) {
          skip();
          const Pos kp = pos();
          if (!is_ident_start(peek())) fail_at(kp, "expected a map key");
          std::string key = ident();
          for (const auto& [k, unused] : entries) {
            if (k == key) fail_at(kp, "duplicate key '" + key + "'");
          }
          expect(':');
          entries.emplace_back(std::move(key), value());
          skip();
          if (peek() == ',') {
            advance();
            continue;
          }
          expect('}');
          break;
        }
      }
      out.v = std::move(entries);
    } else if (c == '"') {
      advance();
      out.pos = pos();  // first character inside the quotes
      std::string text;
      while (!at_end() && peek() != '"') {
        if (peek() == '\n') fail_at(out.pos, "unterminated string");
        text += peek();
        advance();
      }
      if (at_end()) fail_at(out.pos, "unterminated string");
      advance();
      out.v = Str{std::move(text)};
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      const std::size_t start = i_;
      if (c == '-' || c == '+') advance();
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' ||
                           ((peek() == '-' || peek() == '+') && (s_[i_ - 1] == 'e' || s_[i_ - 1] == 'E')))) {
        advance();
      }
      std::string_view tok = s_.substr(start, i_ - start);
      if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail_at(out.pos, "malformed number '" + std::string(tok) + "'");
      }
      out.v = v;
    } else if (is_ident_start(c)) {
      out.v = Ident{ident()};
    } else {
      fail_at(out.pos, std::string("unexpected '") + c + "'");
    }
    return out;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ------------------------------------------------------------ interpretation

const Value* find(const std::vector<std::pair<std::string, Value>>& entries, std::string_view key) {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

const List& as_list(const Value& v, const char* what) {
  if (!v.is_list()) fail_at(v.pos, std::string(what) + " must be a list");
  return std::get<List>(v.v);
}

const Map& as_map(const Value& v, const char* what) {
  if (!v.is_map()) fail_at(v.pos, std::string(what) + " must be a map");
  return std::get<Map>(v.v);
}

std::string as_name(const Value& v, const char* what) {
  if (v.is_ident()) return std::get<Ident>(v.v).name;
  if (v.is_string()) return std::get<Str>(v.v).text;
  fail_at(v.pos, std::string(what) + " must be a name");
}

// Parses a string-valued expression; error positions are mapped back into
// the manifest.
Expression parse_expr_at(const Value& v, const SymbolTable& symbols, const char* what) {
  if (v.is_number()) return Expression::constant(std::get<double>(v.v));
  // a bare name is shorthand for a one-symbol expression
  if (!v.is_string() && !v.is_ident()) fail_at(v.pos, std::string(what) + " must be an expression");
  const std::string& text = v.is_ident() ? std::get<Ident>(v.v).name : std::get<Str>(v.v).text;
  try {
    return Expression::parse(text, symbols);
  } catch (const ParseError& e) {
    std::string msg = e.what();
    if (auto colon = msg.find(": "); e.line() > 0 && colon != std::string::npos) msg = msg.substr(colon + 2);
    fail_at({v.pos.line, v.pos.col + e.column() - 1}, msg);
  }
}

double constant_value(const Value& v, const SymbolTable& symbols, const char* what) {
  const Expression e = parse_expr_at(v, symbols, what);
  if (!e.parameters().empty()) fail_at(v.pos, std::string(what) + " must not depend on parameters");
  const double x = e.eval({});
  if (!std::isfinite(x)) fail_at(v.pos, std::string(what) + " is not finite");
  return x;
}

Hint make_hint(const Value& v, const SymbolTable& symbols, std::span<const Interval> box, const char* what) {
  Hint h;
  const Value* expr_value = &v;
  if (v.is_map()) {
    const Map& m = std::get<Map>(v.v);
    expr_value = nullptr;
    for (const auto& [k, item] : m) {
      if (k == "cos" || k == "expr") {
        expr_value = &item;
      } else if (k == "mode") {
        const std::string mode = as_name(item, "mode");
        if (mode == "assert") {
          h.asserted = true;
        } else if (mode == "report") {
          h.asserted = false;
        } else {
          fail_at(item.pos, "mode must be assert or report");
        }
      } else {
        fail_at(item.pos, "unknown hint field '" + k + "'");
      }
    }
    if (expr_value == nullptr) fail_at(v.pos, std::string(what) + " needs an expression");
  }
  h.expr = parse_expr_at(*expr_value, symbols, what);
  h.text = h.expr.to_string(symbols.params);
  try {
    h.expr.validate_on(box);
  } catch (const ParseError& e) {
    fail_at(expr_value->pos, std::string(what) + ": " + e.what());
  }
  return h;
}

}  // namespace

const char* to_string(Block b) {
  switch (b) {
    case Block::T:
      return "T";
    case Block::Perp:
      return "perp";
    case Block::Theta:
      return "theta";
    case Block::Reeb:
      return "reeb";
  }
  return "?";
}

const char* to_string(AmbientKind k) {
  return k == AmbientKind::EuclideanContact ? "euclidean_contact" : "sasakian_standard";
}

AmbientKind ambient_kind_from_string(std::string_view s) {
  if (s == "euclidean_contact") return AmbientKind::EuclideanContact;
  if (s == "sasakian_standard") return AmbientKind::SasakianStandard;
  throw ParseError("unknown ambient kind '" + std::string(s) + "'");
}

std::vector<int> ImmersionSpec::indices(Block b) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i] == b) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> ImmersionSpec::base_indices() const {
  std::vector<int> out = indices(Block::T);
  if (reeb >= 0 && reeb_factor == Block::T) out.push_back(reeb);
  return out;
}

std::vector<int> ImmersionSpec::fiber_indices(int factor) const {
  const Block b = factor == 1 ? Block::Perp : Block::Theta;
  std::vector<int> out = indices(b);
  if (reeb >= 0 && reeb_factor == b) out.push_back(reeb);
  return out;
}

bool ImmersionSpec::in_domain(std::span<const double> u, double slack) const {
  if (u.size() != domain.size()) return false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] >= domain[i].lo - slack && u[i] <= domain[i].hi + slack)) return false;
  }
  return true;
}

std::vector<double> ImmersionSpec::domain_midpoint() const {
  std::vector<double> out(domain.size(), 0.0);
  for (std::size_t i = 0; i < domain.size(); ++i) {
    out[i] = domain[i].bounded() ? domain[i].mid() : 0.0;
  }
  return out;
}

ImmersionSpec parse_immersion(std::string_view text) {
  Reader reader(text);
  const auto entries = reader.statements();

  static const std::set<std::string> known{"ambient", "constants", "params", "blocks", "reeb_factor",
                                           "domain",  "psi",       "warp_hints", "slant_hint", "notes"};
  for (const auto& [k, v] : entries) {
    if (!known.contains(k)) fail_at(v.pos, "unknown key '" + k + "'");
  }

  ImmersionSpec spec;
  SymbolTable symbols;

  if (const Value* c = find(entries, "constants")) {
    for (const auto& [name, v] : as_map(*c, "constants")) {
      symbols.constants[name] = constant_value(v, symbols, "constant");
    }
    spec.constants = symbols.constants;
  }

  const Value* params = find(entries, "params");
  if (params == nullptr) throw ParseError("missing key 'params'");
  for (const Value& p : as_list(*params, "params")) {
    const std::string name = as_name(p, "parameter");
    if (symbols.param_index(name) >= 0) fail_at(p.pos, "duplicate parameter '" + name + "'");
    if (symbols.constants.contains(name) || name == "pi") {
      fail_at(p.pos, "parameter '" + name + "' shadows a constant");
    }
    symbols.params.push_back(name);
  }
  spec.params = symbols.params;
  const std::size_t d = spec.params.size();

  auto resolve = [&](const Value& v) {
    const std::string name = as_name(v, "parameter");
    const int idx = symbols.param_index(name);
    if (idx < 0) fail_at(v.pos, "undeclared symbol '" + name + "'");
    return idx;
  };

  spec.blocks.assign(d, Block::T);
  if (const Value* b = find(entries, "blocks")) {
    std::vector<int> assigned(d, 0);
    bool reeb_seen = false;
    for (const auto& [key, v] : as_map(*b, "blocks")) {
      Block block = Block::T;
      if (key == "T") {
        block = Block::T;
      } else if (key == "perp") {
        block = Block::Perp;
      } else if (key == "theta") {
        block = Block::Theta;
      } else if (key == "reeb") {
        block = Block::Reeb;
        reeb_seen = true;
      } else {
        fail_at(v.pos, "unknown block '" + key + "'");
      }
      std::vector<const Value*> members;
      if (v.is_list()) {
        for (const Value& item : std::get<List>(v.v)) members.push_back(&item);
      } else {
        members.push_back(&v);
      }
      if (block == Block::Reeb) {
        if (members.empty()) fail_at(v.pos, "missing reeb parameter");
        if (members.size() > 1) fail_at(members[1]->pos, "multiple reeb parameters");
      }
      for (const Value* item : members) {
        const int idx = resolve(*item);
        if (assigned[static_cast<std::size_t>(idx)]++ > 0) {
          fail_at(item->pos, "parameter '" + spec.params[static_cast<std::size_t>(idx)] + "' assigned twice");
        }
        spec.blocks[static_cast<std::size_t>(idx)] = block;
        if (block == Block::Reeb) spec.reeb = idx;
      }
    }
    if (!reeb_seen) fail_at(b->pos, "missing reeb parameter");
    for (std::size_t i = 0; i < d; ++i) {
      if (assigned[i] == 0) fail_at(b->pos, "parameter '" + spec.params[i] + "' not assigned to a block");
    }
  }

  if (const Value* rf = find(entries, "reeb_factor")) {
    const std::string f = as_name(*rf, "reeb_factor");
    if (f == "T") {
      spec.reeb_factor = Block::T;
    } else if (f == "perp") {
      spec.reeb_factor = Block::Perp;
    } else if (f == "theta") {
      spec.reeb_factor = Block::Theta;
    } else {
      fail_at(rf->pos, "reeb_factor must be T, perp or theta");
    }
    if (spec.reeb < 0) fail_at(rf->pos, "reeb_factor given without a reeb parameter");
  }

  spec.domain.assign(d, Interval{-kInf, kInf});
  if (const Value* dom = find(entries, "domain")) {
    SymbolTable consts_only{{}, symbols.constants};
    for (const auto& [name, v] : as_map(*dom, "domain")) {
      const int idx = symbols.param_index(name);
      if (idx < 0) fail_at(v.pos, "undeclared symbol '" + name + "'");
      const List& bounds = as_list(v, "domain interval");
      if (bounds.size() != 2) fail_at(v.pos, "domain interval needs two bounds");
      const double lo = constant_value(bounds[0], consts_only, "domain bound");
      const double hi = constant_value(bounds[1], consts_only, "domain bound");
      if (!(lo < hi)) fail_at(v.pos, "degenerate domain interval for '" + name + "'");
      spec.domain[static_cast<std::size_t>(idx)] = {lo, hi};
    }
  }

  const Value* psi = find(entries, "psi");
  if (psi == nullptr) throw ParseError("missing key 'psi'");
  const List& comps = as_list(*psi, "psi");
  if (comps.empty()) fail_at(psi->pos, "psi needs at least one component");
  for (const Value& c : comps) {
    Expression e = parse_expr_at(c, symbols, "component");
    try {
      e.validate_on(spec.domain);
    } catch (const ParseError& err) {
      fail_at(c.pos, err.what());
    }
    spec.component_text.push_back(e.to_string(spec.params));
    spec.components.push_back(std::move(e));
  }
  spec.ambient_dim = static_cast<int>(spec.components.size());

  if (const Value* amb = find(entries, "ambient")) {
    bool has_m = false;
    for (const auto& [key, v] : as_map(*amb, "ambient")) {
      if (key == "kind") {
        try {
          spec.ambient.kind = ambient_kind_from_string(as_name(v, "kind"));
        } catch (const ParseError& e) {
          fail_at(v.pos, e.what());
        }
      } else if (key == "m") {
        const double m = v.is_number() ? std::get<double>(v.v) : -1.0;
        if (!(m >= 0.0) || std::floor(m) != m) fail_at(v.pos, "m must be a non-negative integer");
        spec.ambient.m = static_cast<int>(m);
        has_m = true;
      } else {
        fail_at(v.pos, "unknown ambient field '" + key + "'");
      }
    }
    if (!has_m) fail_at(amb->pos, "ambient needs m");
    if (spec.ambient_dim != 2 * spec.ambient.m + 1) {
      fail_at(psi->pos, "arity mismatch: psi has " + std::to_string(spec.ambient_dim) +
                            " components, ambient dimension is " + std::to_string(2 * spec.ambient.m + 1));
    }
  } else {
    if (spec.ambient_dim % 2 == 0) {
      fail_at(psi->pos, "arity mismatch: psi must have an odd number of components");
    }
    spec.ambient.m = (spec.ambient_dim - 1) / 2;
  }

  if (const Value* wh = find(entries, "warp_hints")) {
    for (const auto& [key, v] : as_map(*wh, "warp_hints")) {
      if (key == "f1") {
        spec.f1_hint = make_hint(v, symbols, spec.domain, "warp hint f1");
      } else if (key == "f2") {
        spec.f2_hint = make_hint(v, symbols, spec.domain, "warp hint f2");
      } else {
        fail_at(v.pos, "unknown warp hint '" + key + "'");
      }
    }
  }
  if (const Value* sh = find(entries, "slant_hint")) {
    spec.slant_hint = make_hint(*sh, symbols, spec.domain, "slant hint");
  }
  if (const Value* notes = find(entries, "notes")) {
    for (const Value& n : as_list(*notes, "notes")) {
      if (!n.is_string()) fail_at(n.pos, "notes must be strings");
      spec.notes.push_back(std::get<Str>(n.v).text);
    }
  }
  return spec;
}

std::string to_manifest(const ImmersionSpec& spec) {
  std::string out;
  out += "ambient = {kind: \"";
  out += to_string(spec.ambient.kind);
  out += "\", m: " + std::to_string(spec.ambient.m) + "}\n";
  out += "params = [";
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    out += (i ? ", " : "") + spec.params[i];
  }
  out += "]\n";
  if (spec.reeb >= 0) {
    out += "blocks = {";
    bool first = true;
    for (Block b : {Block::T, Block::Perp, Block::Theta}) {
      out += first ? "" : ", ";
      first = false;
      out += std::string(to_string(b)) + ": [";
      const auto idx = spec.indices(b);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        out += (i ? ", " : "") + spec.params[static_cast<std::size_t>(idx[i])];
      }
      out += "]";
    }
    out += ", reeb: " + spec.params[static_cast<std::size_t>(spec.reeb)] + "}\n";
    out += std::string("reeb_factor = ") + to_string(spec.reeb_factor) + "\n";
  }
  std::string dom;
  for (std::size_t i = 0; i < spec.domain.size(); ++i) {
    if (!spec.domain[i].bounded()) continue;
    dom += (dom.empty() ? "" : ", ") + spec.params[i] + ": [" + format_double(spec.domain[i].lo) + ", " +
           format_double(spec.domain[i].hi) + "]";
  }
  if (!dom.empty()) out += "domain = {" + dom + "}\n";
  out += "psi = [";
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    out += (i ? ", \"" : "\"") + spec.components[i].to_string(spec.params) + "\"";
  }
  out += "]\n";
  auto hint_text = [&](const Hint& h, const char* key) {
    return std::string("{") + key + ": \"" + h.expr.to_string(spec.params) + "\", mode: " +
           (h.asserted ? "assert" : "report") + "}";
  };
  if (spec.f1_hint || spec.f2_hint) {
    out += "warp_hints = {";
    if (spec.f1_hint) out += "f1: " + hint_text(*spec.f1_hint, "expr");
    if (spec.f2_hint) out += std::string(spec.f1_hint ? ", " : "") + "f2: " + hint_text(*spec.f2_hint, "expr");
    out += "}\n";
  }
  if (spec.slant_hint) out += "slant_hint = " + hint_text(*spec.slant_hint, "cos") + "\n";
  if (!spec.notes.empty()) {
    out += "notes = [";
    for (std::size_t i = 0; i < spec.notes.size(); ++i) out += (i ? ", \"" : "\"") + spec.notes[i] + "\"";
    out += "]\n";
  }
  return out;
}

std::vector<Jet2> eval_jet2_unchecked(const ImmersionSpec& spec, std::span<const double> point) {
  std::vector<Jet2> out;
  out.reserve(spec.components.size());
  for (const Expression& e : spec.components) out.push_back(e.jet(point));
  return out;
}

std::vector<Jet2> eval_jet2(const ImmersionSpec& spec, std::span<const double> point) {
  if (point.size() != spec.dim()) throw DomainError("point has wrong dimension");
  if (!spec.in_domain(point)) throw DomainError("point outside the declared domain");
  return eval_jet2_unchecked(spec, point);
}

namespace {

std::vector<Jet2> central_differences(const ImmersionSpec& spec, std::span<const double> point, double h) {
  const std::size_t d = spec.dim();
  const std::size_t n = spec.components.size();
  std::vector<double> x(point.begin(), point.end());
  auto values_at = [&](const std::vector<double>& at) {
    if (!spec.in_domain(at)) throw DomainError("finite-difference stencil leaves the domain");
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = spec.components[k].eval(at);
    return v;
  };

  const std::vector<double> f0 = values_at(x);
  std::vector<Jet2> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.emplace_back(d, f0[k]);

  for (std::size_t i = 0; i < d; ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const auto fp = values_at(xp), fm = values_at(xm);
    for (std::size_t k = 0; k < n; ++k) {
      out[k].grad[i] = (fp[k] - fm[k]) / (2.0 * h);
      out[k].h(i, i) = (fp[k] - 2.0 * f0[k] + fm[k]) / (h * h);
    }
    for (std::size_t j = i + 1; j < d; ++j) {
      auto xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += h, xpp[j] += h;
      xpm[i] += h, xpm[j] -= h;
      xmp[i] -= h, xmp[j] += h;
      xmm[i] -= h, xmm[j] -= h;
      const auto a = values_at(xpp), b = values_at(xpm), c = values_at(xmp), e = values_at(xmm);
      for (std::size_t k = 0; k < n; ++k) {
        const double hij = (a[k] - b[k] - c[k] + e[k]) / (4.0 * h * h);
        out[k].h(i, j) = hij;
        out[k].h(j, i) = hij;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Jet2> finite_diff_jet2(const ImmersionSpec& spec, std::span<const double> point, double step,
                                   bool richardson) {
  if (point.size() != spec.dim()) throw DomainError("point has wrong dimension");
  if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
  auto coarse = central_differences(spec, point, step);
  if (!richardson) return coarse;
  auto fine = central_differences(spec, point, 0.5 * step);
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    for (std::size_t i = 0; i < coarse[k].grad.size(); ++i) {
      fine[k].grad[i] = (4.0 * fine[k].grad[i] - coarse[k].grad[i]) / 3.0;
    }
    for (std::size_t i = 0; i < coarse[k].hess.size(); ++i) {
      fine[k].hess[i] = (4.0 * fine[k].hess[i] - coarse[k].hess[i]) / 3.0;
    }
  }
  return fine;
}

}  // namespace biwarp
