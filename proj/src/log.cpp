#include "avaseg/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

#include <json.hpp>

namespace avaseg::log {

namespace {
std::atomic<bool> g_enabled{true};
std::mutex g_mutex;
}  // namespace

Field::Field(std::string k, double v) : key(std::move(k)), json_value(nlohmann::json(v).dump()) {}
Field::Field(std::string k, long long v) : key(std::move(k)), json_value(std::to_string(v)) {}
Field::Field(std::string k, bool v) : key(std::move(k)), json_value(v ? "true" : "false") {}
Field::Field(std::string k, const std::string& v) : key(std::move(k)), json_value(nlohmann::json(v).dump()) {}

void event(const std::string& name, const std::vector<Field>& fields) {
  if (!g_enabled) return;
  std::string line = "{\"event\":" + nlohmann::json(name).dump();
  for (const auto& f : fields) line += "," + nlohmann::json(f.key).dump() + ":" + f.json_value;
  line += "}\n";
  std::lock_guard lock(g_mutex);
  std::cerr << line << std::flush;
}

void set_enabled(bool enabled) { g_enabled = enabled; }

}  // namespace avaseg::log
