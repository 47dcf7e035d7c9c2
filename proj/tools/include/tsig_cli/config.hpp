#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tsig/error.hpp"
#include "tsig/twisted_complex.hpp"

namespace tsig::cli {

// Validation failure with a JSON pointer to the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : Error(ErrorCode::ConfigInvalid, "cli", "parse_config", message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

struct RunConfig {
  FlatMetric metric;
  FlatBundle bundle;
  FluxForm flux;
  int truncation = 3;
  nlohmann::json parameters = nlohmann::json::object();
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

// Flux object {components: [...]} at the given pointer.
FluxForm parse_flux(const nlohmann::json& flux, int n, const std::string& pointer);

// Typed access to /parameters/<key> with defaults.
double param_double(const RunConfig& cfg, const std::string& key, double fallback);
int param_int(const RunConfig& cfg, const std::string& key, int fallback);
bool param_bool(const RunConfig& cfg, const std::string& key, bool fallback);
std::string param_string(const RunConfig& cfg, const std::string& key, const std::string& fallback);
std::vector<double> param_doubles(const RunConfig& cfg, const std::string& key, const std::vector<double>& fallback);
// Either a real number or [re, im].
cplx param_complex(const RunConfig& cfg, const std::string& key, cplx fallback);

}  // namespace tsig::cli
