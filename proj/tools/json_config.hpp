#pragma once

// JSON config files for CLI11. Top-level keys set global options; an object
// keyed by a subcommand name sets that subcommand's options:
//
//   {"train": {"model": "cnn", "output": "mh", "seed": 3}}
//
// A run manifest is accepted too: its "config" member is read.

#include <istream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace swarmtsc::cli {

class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return options_json(app, default_also).dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (j.is_object() && j.value("kind", "") == "manifest") j = j.at("config");
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto sub = parents;
        sub.push_back(key);
        collect(value, sub, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }

  // Vector defaults are rendered as "[a,b,c]".
  static nlohmann::json default_json(const std::string& s) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']') return s;
    nlohmann::json a = nlohmann::json::array();
    std::string item;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == ',') {
        a.push_back(item);
        item.clear();
      } else {
        item += s[i];
      }
    }
    if (!item.empty()) a.push_back(item);
    return a;
  }

  static nlohmann::json options_json(const CLI::App* app, bool default_also) {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      if (opt->count() > 0) {
        const auto& r = opt->results();
        j[name] = r.size() == 1 ? nlohmann::json(r.front()) : nlohmann::json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = default_json(opt->get_default_str());
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      auto s = options_json(sub, default_also);
      if (!s.empty()) j[sub->get_name()] = s;
    }
    return j;
  }
};

}  // namespace swarmtsc::cli
