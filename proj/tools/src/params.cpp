#include "params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace camo::cli {
namespace {

std::string normalise(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

}  // namespace

void ParamSet::add(CLI::App& app, const std::string& key, Kind kind, Json default_value,
                   const std::string& help) {
  auto p = std::make_unique<Param>();
  p->key = key;
  p->kind = kind;
  p->default_value = std::move(default_value);
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  std::string description = help;
  if (!p->default_value.is_null()) description += " [default: " + p->default_value.dump() + "]";
  p->option = app.add_option(flag, p->raw, description);
  if (kind == Kind::Bool) p->option->type_name("BOOL");
  params_.push_back(std::move(p));
}

const ParamSet::Param* ParamSet::find(const std::string& key) const {
  for (const auto& p : params_)
    if (p->key == key) return p.get();
  return nullptr;
}

Json ParamSet::convert(const Param& p, const std::string& text) {
  const std::string where = "--" + p.key + " '" + text + "'";
  try {
    std::size_t used = 0;
    switch (p.kind) {
      case Kind::Int: {
        const long long v = std::stoll(text, &used);
        if (used != text.size()) break;
        return Json(v);
      }
      case Kind::Real: {
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) break;
        return Json(v);
      }
      case Kind::Bool:
        if (text == "true" || text == "1" || text == "yes") return Json(true);
        if (text == "false" || text == "0" || text == "no") return Json(false);
        break;
      case Kind::Text:
        return Json(text);
    }
  } catch (const std::exception&) {
  }
  throw UsageError("invalid value for " + where);
}

Json ParamSet::check(const Param& p, const Json& value) {
  if (value.is_null()) return value;
  bool ok = false;
  switch (p.kind) {
    case Kind::Int: ok = value.is_number_integer(); break;
    case Kind::Real: ok = value.is_number(); break;
    case Kind::Bool: ok = value.is_boolean(); break;
    case Kind::Text: ok = value.is_string(); break;
  }
  if (!ok) throw UsageError("config value for '" + p.key + "' has the wrong type: " + value.dump());
  if (p.kind == Kind::Real) return Json(value.get<double>());
  return value;
}

Json ParamSet::resolve(const std::optional<std::filesystem::path>& config_file) const {
  Json out = Json::object();
  for (const auto& p : params_) out[p->key] = p->default_value;
  if (config_file) {
    if (!std::filesystem::exists(*config_file))
      throw MissingInput("config file '" + config_file->string() + "' not found");
    std::ifstream in(*config_file);
    Json cfg;
    try {
      cfg = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config file '" + config_file->string() + "' is not valid JSON: " + e.what());
    }
    if (cfg.is_object() && cfg.contains("params")) cfg = cfg.at("params");
    if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [raw_key, value] : cfg.items()) {
      const std::string key = normalise(raw_key);
      const Param* p = find(key);
      if (!p) throw UsageError("unknown config key '" + raw_key + "'");
      out[key] = check(*p, value);
    }
  }
  for (const auto& p : params_)
    if (p->option->count() > 0) out[p->key] = convert(*p, p->raw);
  return out;
}

}  // namespace camo::cli
