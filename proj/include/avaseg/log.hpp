#pragma once

#include <string>
#include <utility>
#include <vector>

namespace avaseg::log {

/// A flat event field; values are emitted as JSON numbers or strings.
struct Field {
  std::string key;
  std::string json_value;

  Field(std::string k, double v);
  Field(std::string k, long long v);
  Field(std::string k, int v) : Field(std::move(k), static_cast<long long>(v)) {}
  Field(std::string k, std::size_t v) : Field(std::move(k), static_cast<long long>(v)) {}
  Field(std::string k, bool v);
  Field(std::string k, const std::string& v);
  Field(std::string k, const char* v) : Field(std::move(k), std::string(v)) {}
};

/// Writes one line-delimited JSON object {"event": name, ...} to stderr.
void event(const std::string& name, const std::vector<Field>& fields = {});

/// Silences event() (used by tests).
void set_enabled(bool enabled);

}  // namespace avaseg::log
