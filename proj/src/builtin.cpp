#include "biwarp/builtin.hpp"

#include <cmath>
#include <numbers>

#include "biwarp/errors.hpp"

namespace biwarp {

namespace {

constexpr const char* kEx1 = R"MF(# 6-dimensional bi-warped submanifold of R^11, flat contact ambient
ambient = {kind: "euclidean_contact", m: 5}
constants = {theta0: @theta0@}
params = [u, v, t, r, s, z]
blocks = {T: [u, v], perp: [t], theta: [r, s], reeb: z}
domain = {u: [1, 2], v: [1, 2], t: [0.1, 1], r: [0.1, 1], s: [0.1, 1], z: [0, 1]}
psi = ["u", "v", "-t^2*cos(theta0)/2", "t^2*sin(theta0)/2", "r", "s", "r*s", "0", "r^2/2", "s^2/2", "z"]
warp_hints = {f1: {expr: "t", mode: report}, f2: {expr: "sqrt(1+r^2+s^2)", mode: report}}
slant_hint = {cos: "(1+r*s)/(1+r^2+s^2)", mode: report}
notes = ["f1 = t depends on its own fiber coordinate; t^2 dt^2 is a flat metric", "g(d_r, d_s) = r*s, so the slant block is not conformal"]
)MF";

constexpr const char* kEx2 = R"MF(# 7-dimensional bi-warped submanifold of R^19, flat contact ambient
ambient = {kind: "euclidean_contact", m: 9}
constants = {k: @k@}
params = [u, v, w, s, t, r, z]
blocks = {T: [u, v], perp: [w, s], theta: [t, r], reeb: z}
domain = {u: [1, 2], v: [1, 2], w: [0.1, 1], s: [0.1, 1], t: [0.1, 1], r: [0.1, 1], z: [0, 1]}
psi = ["u*cos(w)", "v*cos(w)", "u*cos(s)", "v*cos(s)", "u*sin(w)", "v*sin(w)", "u*sin(s)", "v*sin(s)",
       "u*cos(t)", "v*cos(t)", "u*cos(r)", "v*cos(r)", "u*sin(t)", "v*sin(t)", "u*sin(r)", "v*sin(r)",
       "k*(r-t)", "-k*(r+t)", "z"]
warp_hints = {f1: "sqrt(u^2+v^2)", f2: "sqrt(u^2+v^2+2*k^2)"}
slant_hint = {cos: "2*k^2/(u^2+v^2+2*k^2)", mode: assert}
notes = ["the induced metric carries a dz^2 term from the reeb coordinate"]
)MF";

std::string substitute(std::string text, const std::string& key, double value) {
  const std::string tag = "@" + key + "@";
  for (auto pos = text.find(tag); pos != std::string::npos; pos = text.find(tag)) {
    text.replace(pos, tag.size(), format_double(value));
  }
  return text;
}

double pick(const std::map<std::string, double>& constants, const std::string& name, double fallback) {
  const auto it = constants.find(name);
  return it == constants.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& constants, std::string_view allowed) {
  for (const auto& [name, value] : constants) {
    if (name != allowed) throw ParseError("unknown constant '" + name + "' for this example");
  }
}

}  // namespace

std::vector<BuiltinInfo> builtin_list() {
  return {{"ex1", "R^11, params (u,v,t,r,s,z), constant theta0 in (0, pi/2), default pi/4"},
          {"ex2", "R^19, params (u,v,w,s,t,r,z), constant k != 0, default 1"}};
}

std::string builtin_manifest_text(std::string_view id, const std::map<std::string, double>& constants) {
  if (id == "ex1") {
    reject_unknown(constants, "theta0");
    const double theta0 = pick(constants, "theta0", std::numbers::pi / 4);
    if (!(theta0 > 0.0 && theta0 < std::numbers::pi / 2)) {
      throw ParseError("theta0 must lie in the open interval (0, pi/2)");
    }
    return substitute(kEx1, "theta0", theta0);
  }
  if (id == "ex2") {
    reject_unknown(constants, "k");
    const double k = pick(constants, "k", 1.0);
    if (k == 0.0 || !std::isfinite(k)) throw ParseError("k must be a nonzero finite number");
    return substitute(kEx2, "k", k);
  }
  throw ParseError("unknown built-in example '" + std::string(id) + "' (expected ex1 or ex2)");
}

ImmersionSpec builtin_manifest(std::string_view id, const std::map<std::string, double>& constants) {
  return parse_immersion(builtin_manifest_text(id, constants));
}

}  // namespace biwarp
