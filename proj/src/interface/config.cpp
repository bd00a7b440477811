#include "provenance/interface/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>

#include "provenance/backends/local.hpp"
#include "provenance/backends/remote.hpp"
#include "provenance/backends/stub.hpp"
#include "provenance/error.hpp"
#include "provenance/json_io.hpp"

namespace provenance {

namespace {

constexpr const char* kSettingKeys[] = {
    "config",    "listen",        "relevance",         "nli",       "embedding",
    "strategy",  "top_k",         "top_p",             "aggregation", "threshold",
    "temporal_ordering", "claim_template", "request_timeout_ms", "max_concurrent_requests",
};

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<double> parse_double(const std::string& text) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) return std::nullopt;
  return value;
}

std::optional<bool> parse_bool(std::string text) {
  for (auto& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  return std::nullopt;
}

[[noreturn]] void bad_setting(const std::string& origin, const std::string& key, const std::string& why) {
  throw Error(ErrorCode::ConfigError, origin + ": " + key + " " + why);
}

void set_listen(ServiceConfig& config, const std::string& listen, const std::string& origin) {
  const auto colon = listen.rfind(':');
  const auto host = colon == std::string::npos ? std::string() : listen.substr(0, colon);
  const auto port = parse_number<int>(colon == std::string::npos ? listen : listen.substr(colon + 1));
  if (!port || *port < 0 || *port > 65535) bad_setting(origin, "listen", "must be HOST:PORT");
  if (!host.empty()) config.host = host;
  config.port = *port;
}

BackendDescriptor descriptor_from(const nlohmann::json& j) {
  return j.is_string() ? BackendDescriptor::parse(j.get<std::string>()) : BackendDescriptor::from_json(j);
}

}  // namespace

BackendDescriptor BackendDescriptor::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::ConfigError, "backend descriptor needs KIND:VALUE, got \"" + std::string(text) + "\"");
  }
  const auto kind = text.substr(0, colon);
  const auto value = std::string(text.substr(colon + 1));
  BackendDescriptor d;
  if (kind == "stub") {
    d.kind = Kind::Stub;
    const auto eq = value.find('=');
    d.mode = value.substr(0, eq);
    const auto arg = eq == std::string::npos ? std::string() : value.substr(eq + 1);
    if (d.mode == "table") {
      if (arg.empty()) throw Error(ErrorCode::ConfigError, "stub:table needs =PATH");
      d.location = arg;
    } else if ((d.mode == "hash" || d.mode == "hash-unit") && !arg.empty()) {
      const auto dim = parse_number<long>(arg);
      if (!dim || *dim < 1) throw Error(ErrorCode::ConfigError, "stub:hash dimension must be a positive integer");
      d.dimension = *dim;
    } else if ((d.mode != "overlap" && d.mode != "hash" && d.mode != "hash-unit") || !arg.empty()) {
      throw Error(ErrorCode::ConfigError, "unknown stub backend \"" + value + "\"");
    }
  } else if (kind == "remote") {
    d.kind = Kind::Remote;
    d.mode.clear();
    d.location = value;
  } else if (kind == "local") {
    d.kind = Kind::Local;
    d.mode.clear();
    d.location = value;
  } else {
    throw Error(ErrorCode::ConfigError, "unknown backend kind \"" + std::string(kind) + "\"");
  }
  if (d.kind != Kind::Stub && d.location.empty()) {
    throw Error(ErrorCode::ConfigError, std::string(kind) + " backend needs a location");
  }
  return d;
}

BackendDescriptor BackendDescriptor::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(ErrorCode::ConfigError, "backend descriptor object needs a \"kind\" string");
  }
  try {
    const auto kind = j["kind"].get<std::string>();
    std::string text;
    if (kind == "stub") {
      text = "stub:" + j.value("mode", std::string("overlap"));
      if (j.contains("path")) text += "=" + j["path"].get<std::string>();
      if (j.contains("dimension")) text += "=" + std::to_string(j["dimension"].get<long>());
    } else if (kind == "remote") {
      text = "remote:" + j.value("url", std::string());
    } else if (kind == "local") {
      text = "local:" + j.value("model", std::string());
    } else {
      text = kind + ":";
    }
    auto d = parse(text);
    if (j.contains("timeout_ms")) {
      const auto ms = j["timeout_ms"].get<long>();
      if (ms <= 0) throw Error(ErrorCode::ConfigError, "backend timeout_ms must be > 0");
      d.timeout = std::chrono::milliseconds(ms);
    }
    if (j.contains("batch_size")) {
      const auto n = j["batch_size"].get<long>();
      if (n <= 0) throw Error(ErrorCode::ConfigError, "backend batch_size must be > 0");
      d.batch_size = static_cast<std::size_t>(n);
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("backend descriptor: ") + e.what());
  }
}

nlohmann::json BackendDescriptor::to_json() const {
  nlohmann::json j;
  switch (kind) {
    case Kind::Stub:
      j = {{"kind", "stub"}, {"mode", mode}};
      if (mode == "table") j["path"] = location;
      if (mode.rfind("hash", 0) == 0) j["dimension"] = dimension;
      break;
    case Kind::Remote:
      j = {{"kind", "remote"}, {"url", location}, {"batch_size", batch_size}};
      break;
    case Kind::Local:
      j = {{"kind", "local"}, {"model", location}};
      break;
  }
  if (timeout) j["timeout_ms"] = timeout->count();
  return j;
}

std::string BackendDescriptor::describe() const {
  switch (kind) {
    case Kind::Stub:
      if (mode == "table") return "stub:table=" + location;
      if (mode.rfind("hash", 0) == 0 && dimension != 64) return "stub:" + mode + "=" + std::to_string(dimension);
      return "stub:" + mode;
    case Kind::Remote:
      return "remote:" + location;
    case Kind::Local:
      return "local:" + location;
  }
  return {};
}

void ServiceConfig::validate() const {
  if (request_timeout.count() <= 0) throw Error(ErrorCode::ConfigError, "request timeout must be > 0");
  if (max_concurrent_requests == 0) throw Error(ErrorCode::ConfigError, "max_concurrent_requests must be >= 1");
  if (port < 0 || port > 65535) throw Error(ErrorCode::ConfigError, "port out of range");
  const auto text_only = [](const BackendDescriptor& d, const char* role) {
    if (d.kind == BackendDescriptor::Kind::Stub && d.mode.rfind("hash", 0) == 0) {
      throw Error(ErrorCode::ConfigError, std::string(role) + " backend cannot be a hashed embedding stub");
    }
  };
  text_only(relevance, "relevance");
  text_only(nli, "NLI");
  if (embedding.kind == BackendDescriptor::Kind::Stub && embedding.mode.rfind("hash", 0) != 0) {
    throw Error(ErrorCode::ConfigError, "embedding stub must be stub:hash or stub:hash-unit");
  }
  try {
    pipeline.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, "pipeline: " + e.detail());
  }
}

nlohmann::json ServiceConfig::to_json() const {
  return {
      {"listen", host + ":" + std::to_string(port)},
      {"backends", {{"relevance", relevance.to_json()}, {"nli", nli.to_json()}, {"embedding", embedding.to_json()}}},
      {"pipeline", provenance::to_json(pipeline)},
      {"request_timeout_ms", request_timeout.count()},
      {"max_concurrent_requests", max_concurrent_requests},
  };
}

void apply_config_json(ServiceConfig& config, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "listen") {
        set_listen(config, value.get<std::string>(), "config file");
      } else if (key == "backends") {
        for (const auto& [role, desc] : value.items()) {
          if (role == "relevance") {
            config.relevance = descriptor_from(desc);
          } else if (role == "nli") {
            config.nli = descriptor_from(desc);
          } else if (role == "embedding") {
            config.embedding = descriptor_from(desc);
          } else {
            throw Error(ErrorCode::ConfigError, "config file: unknown backend role \"" + role + "\"");
          }
        }
      } else if (key == "pipeline") {
        try {
          config.pipeline = apply_overrides(config.pipeline, value);
        } catch (const Error& e) {
          throw Error(ErrorCode::ConfigError, "config file: pipeline " + e.detail());
        }
      } else if (key == "request_timeout_ms") {
        config.request_timeout = std::chrono::milliseconds(value.get<long>());
      } else if (key == "max_concurrent_requests") {
        const auto n = value.get<long>();
        if (n < 1) throw Error(ErrorCode::ConfigError, "config file: max_concurrent_requests must be >= 1");
        config.max_concurrent_requests = static_cast<std::size_t>(n);
      } else {
        throw Error(ErrorCode::ConfigError, "config file: unknown key \"" + key + "\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config file: ") + e.what());
  }
}

void apply_config_file(ServiceConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  apply_config_json(config, j);
}

void apply_settings(ServiceConfig& config, const Settings& settings, const std::string& origin) {
  nlohmann::json pipeline = nlohmann::json::object();
  for (const auto& [key, value] : settings) {
    if (key == "config") {
      continue;
    } else if (key == "listen") {
      set_listen(config, value, origin);
    } else if (key == "relevance") {
      config.relevance = BackendDescriptor::parse(value);
    } else if (key == "nli") {
      config.nli = BackendDescriptor::parse(value);
    } else if (key == "embedding") {
      config.embedding = BackendDescriptor::parse(value);
    } else if (key == "strategy" || key == "aggregation" || key == "claim_template") {
      pipeline[key] = value;
    } else if (key == "top_k") {
      const auto k = parse_number<long>(value);
      if (!k) bad_setting(origin, key, "must be an integer");
      pipeline[key] = *k;
    } else if (key == "top_p") {
      const auto p = parse_double(value);
      if (!p) bad_setting(origin, key, "must be a number");
      pipeline[key] = *p;
    } else if (key == "threshold") {
      if (value.empty() || value == "none") {
        pipeline[key] = nullptr;
      } else {
        const auto t = parse_double(value);
        if (!t) bad_setting(origin, key, "must be a number or \"none\"");
        pipeline[key] = *t;
      }
    } else if (key == "temporal_ordering") {
      const auto b = parse_bool(value);
      if (!b) bad_setting(origin, key, "must be true or false");
      pipeline[key] = *b;
    } else if (key == "request_timeout_ms") {
      const auto ms = parse_number<long>(value);
      if (!ms || *ms <= 0) bad_setting(origin, key, "must be a positive integer");
      config.request_timeout = std::chrono::milliseconds(*ms);
    } else if (key == "max_concurrent_requests") {
      const auto n = parse_number<long>(value);
      if (!n || *n < 1) bad_setting(origin, key, "must be a positive integer");
      config.max_concurrent_requests = static_cast<std::size_t>(*n);
    } else {
      bad_setting(origin, key, "is not a recognised setting");
    }
  }
  try {
    config.pipeline = apply_overrides(config.pipeline, pipeline);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, origin + ": " + e.detail());
  }
}

Settings environment_settings(const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  const auto get = [&](const std::string& name) -> std::optional<std::string> {
    if (lookup) return lookup(name);
    const char* v = std::getenv(name.c_str());
    return v ? std::optional<std::string>(v) : std::nullopt;
  };
  Settings out;
  for (const std::string key : kSettingKeys) {
    std::string name = "PROVENANCE_";
    for (const char c : key) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (auto v = get(name)) out[key] = *v;
  }
  return out;
}

ServiceConfig resolve_config(const std::optional<std::filesystem::path>& config_file, const Settings& flags,
                             const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  ServiceConfig config;
  const auto env = environment_settings(lookup);
  std::optional<std::filesystem::path> file = config_file;
  if (!file) {
    if (const auto it = env.find("config"); it != env.end() && !it->second.empty()) file = it->second;
  }
  if (file) apply_config_file(config, *file);
  apply_settings(config, env, "environment");
  apply_settings(config, flags, "command line");
  config.validate();
  return config;
}

Backends make_backends(const ServiceConfig& config, bool with_embedding) {
  std::map<std::string, std::shared_ptr<const LocalModel>> models;
  const auto model = [&](const std::string& dir) {
    auto& slot = models[dir];
    if (!slot) slot = LocalModel::load(dir);
    return slot;
  };
  const auto endpoint = [&](const BackendDescriptor& d) {
    return HttpEndpoint{d.location, d.timeout.value_or(config.request_timeout), d.batch_size};
  };

  Backends out;
  switch (config.relevance.kind) {
    case BackendDescriptor::Kind::Stub:
      if (config.relevance.mode == "table") {
        out.relevance = std::make_shared<LookupRelevanceBackend>(LookupTable::load(config.relevance.location));
      } else {
        out.relevance = std::make_shared<OverlapRelevanceBackend>();
      }
      break;
    case BackendDescriptor::Kind::Remote:
      out.relevance = std::make_shared<HttpRelevanceBackend>(endpoint(config.relevance));
      break;
    case BackendDescriptor::Kind::Local:
      out.relevance = std::make_shared<LocalRelevanceBackend>(model(config.relevance.location));
      break;
  }
  switch (config.nli.kind) {
    case BackendDescriptor::Kind::Stub:
      if (config.nli.mode == "table") {
        out.nli = std::make_shared<LookupNliBackend>(LookupTable::load(config.nli.location));
      } else {
        out.nli = std::make_shared<OverlapNliBackend>();
      }
      break;
    case BackendDescriptor::Kind::Remote:
      out.nli = std::make_shared<HttpNliBackend>(endpoint(config.nli));
      break;
    case BackendDescriptor::Kind::Local:
      out.nli = std::make_shared<LocalNliBackend>(model(config.nli.location));
      break;
  }
  if (with_embedding) {
    switch (config.embedding.kind) {
      case BackendDescriptor::Kind::Stub:
        out.embedding = std::make_shared<HashedEmbeddingBackend>(config.embedding.dimension,
                                                                 config.embedding.mode == "hash-unit");
        break;
      case BackendDescriptor::Kind::Remote:
        out.embedding = std::make_shared<HttpEmbeddingBackend>(endpoint(config.embedding));
        break;
      case BackendDescriptor::Kind::Local:
        out.embedding = std::make_shared<LocalEmbeddingBackend>(model(config.embedding.location));
        break;
    }
  }
  return out;
}

}  // namespace provenance
