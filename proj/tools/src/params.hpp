#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace camo::cli {

using Json = nlohmann::ordered_json;

/// Bad flags, bad config keys or unparsable values; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced input file does not exist; maps to exit code 3.
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Typed parameters settable from a JSON config file and overridable on
/// the command line. Resolution order: default, config file, flag.
class ParamSet {
 public:
  enum class Kind { Int, Real, Bool, Text };

  /// Registers `--key` (underscores become dashes). A null default makes
  /// the parameter optional.
  void add(CLI::App& app, const std::string& key, Kind kind, Json default_value,
           const std::string& help);

  /// Values after applying `config_file` (flat object, or an object whose
  /// "params" member is flat) and every flag given on the command line.
  Json resolve(const std::optional<std::filesystem::path>& config_file) const;

 private:
  struct Param {
    std::string key;
    Kind kind;
    Json default_value;
    std::string raw;
    CLI::Option* option = nullptr;
  };
  const Param* find(const std::string& key) const;
  static Json convert(const Param& p, const std::string& text);
  static Json check(const Param& p, const Json& value);

  std::vector<std::unique_ptr<Param>> params_;
};

}  // namespace camo::cli
