#include "nodemixup/config_json.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nodemixup {
namespace {

using nlohmann::json;

json mixup_json(const MixupConfig& m) {
  return {{"lambda_intra", m.lambda_intra},
          {"lambda_inter", m.lambda_inter},
          {"beta_s", m.beta_s},
          {"beta_d", m.beta_d},
          {"gamma", m.gamma},
          {"tau", m.tau},
          {"alpha", m.alpha},
          {"warmup_epochs", m.warmup_epochs},
          {"refresh_every", m.refresh_every},
          {"pair_resample_every", m.pair_resample_every},
          {"nld_include_self", m.nld_include_self},
          {"soft_nld", m.soft_nld}};
}

json adam_json(const AdamConfig& a) {
  return {{"lr", a.lr},
          {"beta1", a.beta1},
          {"beta2", a.beta2},
          {"eps", a.eps},
          {"weight_decay", a.weight_decay},
          {"decoupled", a.decoupled},
          {"decay_first_layer_only", a.decay_first_layer_only}};
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw Error("config: unknown field '" + where + "." + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string config_to_json(const TrainConfig& c) {
  json j;
  j["schema"] = kConfigSchema;
  j["hidden"] = c.hidden;
  j["dropout"] = c.dropout;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["row_normalize_features"] = c.row_normalize_features;
  j["mixup_enabled"] = c.mixup_enabled;
  j["check_invariants"] = c.check_invariants;
  j["seeds"] = c.seeds;
  j["adam"] = adam_json(c.adam);
  j["mixup"] = mixup_json(c.mixup);
  return j.dump(2) + "\n";
}

TrainConfig config_from_json(std::string_view text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    reject_unknown(j,
                   {"schema", "hidden", "dropout", "max_epochs", "patience", "row_normalize_features",
                    "mixup_enabled", "check_invariants", "seeds", "adam", "mixup"},
                   "config");
    if (j.contains("schema") && j.at("schema").get<std::string>() != kConfigSchema)
      throw Error("config: unsupported schema '" + j.at("schema").get<std::string>() + "'");
    read(j, "hidden", c.hidden);
    read(j, "dropout", c.dropout);
    read(j, "max_epochs", c.max_epochs);
    read(j, "patience", c.patience);
    read(j, "row_normalize_features", c.row_normalize_features);
    read(j, "mixup_enabled", c.mixup_enabled);
    read(j, "check_invariants", c.check_invariants);
    read(j, "seeds", c.seeds);
    if (j.contains("adam")) {
      const json& a = j.at("adam");
      reject_unknown(a, {"lr", "beta1", "beta2", "eps", "weight_decay", "decoupled", "decay_first_layer_only"},
                     "adam");
      read(a, "lr", c.adam.lr);
      read(a, "beta1", c.adam.beta1);
      read(a, "beta2", c.adam.beta2);
      read(a, "eps", c.adam.eps);
      read(a, "weight_decay", c.adam.weight_decay);
      read(a, "decoupled", c.adam.decoupled);
      read(a, "decay_first_layer_only", c.adam.decay_first_layer_only);
    }
    if (j.contains("mixup")) {
      const json& m = j.at("mixup");
      reject_unknown(m,
                     {"lambda_intra", "lambda_inter", "beta_s", "beta_d", "gamma", "tau", "alpha",
                      "warmup_epochs", "refresh_every", "pair_resample_every", "nld_include_self",
                      "soft_nld"},
                     "mixup");
      read(m, "lambda_intra", c.mixup.lambda_intra);
      read(m, "lambda_inter", c.mixup.lambda_inter);
      read(m, "beta_s", c.mixup.beta_s);
      read(m, "beta_d", c.mixup.beta_d);
      read(m, "gamma", c.mixup.gamma);
      read(m, "tau", c.mixup.tau);
      read(m, "alpha", c.mixup.alpha);
      read(m, "warmup_epochs", c.mixup.warmup_epochs);
      read(m, "refresh_every", c.mixup.refresh_every);
      read(m, "pair_resample_every", c.mixup.pair_resample_every);
      read(m, "nld_include_self", c.mixup.nld_include_self);
      read(m, "soft_nld", c.mixup.soft_nld);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot read config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
      throw Error("invalid seed '" + std::string(s) + "'");
    return v;
  };
  std::vector<std::uint64_t> out;
  if (auto dots = text.find(".."); dots != std::string_view::npos) {
    const auto lo = number(text.substr(0, dots));
    const auto hi = number(text.substr(dots + 2));
    if (hi < lo) throw Error("invalid seed range '" + std::string(text) + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(number(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace nodemixup
