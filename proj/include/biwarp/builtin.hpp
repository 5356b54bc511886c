#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "biwarp/manifest.hpp"

namespace biwarp {

struct BuiltinInfo {
  std::string id;
  std::string summary;
};

std::vector<BuiltinInfo> builtin_list();

/// Manifest text of a built-in example. `constants` overrides the defaults
/// (ex1: theta0 = pi/4, ex2: k = 1). Throws ParseError on an unknown id or an
/// out-of-range constant.
std::string builtin_manifest_text(std::string_view id, const std::map<std::string, double>& constants = {});

ImmersionSpec builtin_manifest(std::string_view id, const std::map<std::string, double>& constants = {});

}  // namespace biwarp
