#include "trajgan/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "trajgan/error.hpp"

namespace trajgan {

using nlohmann::json;

namespace {

const std::set<std::string>& train_keys() {
  static const std::set<std::string> keys{
      "model",  "batch_size", "epochs",         "label_fraction",  "smoothing_target", "clip_norm",
      "adam",   "seed",       "k_folds",        "validation_fold", "eval_every",       "supervised_loss",
      "generator_objective",  "trip_level_vote"};
  return keys;
}

const std::set<std::string>& synth_keys() {
  static const std::set<std::string> keys{
      "n_trips",       "hz",          "duration_min_s", "duration_max_s",  "profiles",     "gps_noise_m",
      "gps_noise_corr_s", "origin_lat_deg", "origin_lon_deg", "origin_spread_m", "start_epoch_s", "seed"};
  return keys;
}

template <typename V>
void read(const json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
}

json profile_to_json(const synth::ModeProfile& p) {
  return {{"speed_mean", p.speed_mean},
          {"speed_std", p.speed_std},
          {"speed_tau_s", p.speed_tau_s},
          {"max_accel", p.max_accel},
          {"stop_rate_per_min", p.stop_rate_per_min},
          {"periodic_stop_min_s", p.periodic_stop_min_s},
          {"periodic_stop_max_s", p.periodic_stop_max_s},
          {"stop_min_s", p.stop_min_s},
          {"stop_max_s", p.stop_max_s},
          {"heading_std_deg_s", p.heading_std_deg_s}};
}

void profile_from_json(const json& j, synth::ModeProfile& p) {
  require_object(j, "profile");
  const json known = profile_to_json(p);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown profile field '" + key + "'");
  }
  read(j, "speed_mean", p.speed_mean);
  read(j, "speed_std", p.speed_std);
  read(j, "speed_tau_s", p.speed_tau_s);
  read(j, "max_accel", p.max_accel);
  read(j, "stop_rate_per_min", p.stop_rate_per_min);
  read(j, "periodic_stop_min_s", p.periodic_stop_min_s);
  read(j, "periodic_stop_max_s", p.periodic_stop_max_s);
  read(j, "stop_min_s", p.stop_min_s);
  read(j, "stop_max_s", p.stop_max_s);
  read(j, "heading_std_deg_s", p.heading_std_deg_s);
}

Mode mode_key(const std::string& key) {
  const auto m = parse_mode(key);
  if (!m) throw ConfigError("empty mode name");
  return *m;
}

}  // namespace

std::string_view to_string(SupervisedLossKind kind) {
  return kind == SupervisedLossKind::conditional ? "conditional" : "plain";
}

std::string_view to_string(GeneratorObjective objective) {
  return objective == GeneratorObjective::non_saturating ? "non_saturating" : "feature_matching";
}

json to_json(const TrainConfig& c) {
  return {{"model", std::string(to_string(c.model))},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"label_fraction", c.label_fraction},
          {"smoothing_target", c.smoothing_target},
          {"clip_norm", c.clip_norm},
          {"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
          {"seed", c.seed},
          {"k_folds", c.k_folds},
          {"validation_fold", c.validation_fold},
          {"eval_every", c.eval_every},
          {"supervised_loss", std::string(to_string(c.supervised_loss))},
          {"generator_objective", std::string(to_string(c.generator_objective))},
          {"trip_level_vote", c.trip_level_vote}};
}

json to_json(const synth::SynthConfig& c) {
  json trips = json::object();
  json profiles = json::object();
  for (Mode m : kAllModes) {
    const auto i = static_cast<std::size_t>(m);
    trips[std::string(to_string(m))] = c.n_trips[i];
    profiles[std::string(to_string(m))] = profile_to_json(c.profiles[i]);
  }
  return {{"n_trips", trips},
          {"hz", c.hz},
          {"duration_min_s", c.duration_min_s},
          {"duration_max_s", c.duration_max_s},
          {"profiles", profiles},
          {"gps_noise_m", c.gps_noise_m},
          {"gps_noise_corr_s", c.gps_noise_corr_s},
          {"origin_lat_deg", c.origin_lat_deg},
          {"origin_lon_deg", c.origin_lon_deg},
          {"origin_spread_m", c.origin_spread_m},
          {"start_epoch_s", c.start_epoch_s},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  require_object(j, "config");
  if (j.contains("model")) {
    std::string s;
    read(j, "model", s);
    c.model = parse_model_id(s);
  }
  read(j, "batch_size", c.batch_size);
  read(j, "epochs", c.epochs);
  read(j, "label_fraction", c.label_fraction);
  read(j, "smoothing_target", c.smoothing_target);
  read(j, "clip_norm", c.clip_norm);
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    require_object(a, "adam");
    for (const auto& [key, value] : a.items()) {
      if (key != "lr" && key != "beta1" && key != "beta2" && key != "epsilon") {
        throw ConfigError("unknown adam field '" + key + "'");
      }
    }
    read(a, "lr", c.adam.lr);
    read(a, "beta1", c.adam.beta1);
    read(a, "beta2", c.adam.beta2);
    read(a, "epsilon", c.adam.epsilon);
  }
  read(j, "seed", c.seed);
  read(j, "k_folds", c.k_folds);
  read(j, "validation_fold", c.validation_fold);
  read(j, "eval_every", c.eval_every);
  if (j.contains("supervised_loss")) {
    std::string s;
    read(j, "supervised_loss", s);
    if (s == "conditional") c.supervised_loss = SupervisedLossKind::conditional;
    else if (s == "plain") c.supervised_loss = SupervisedLossKind::plain;
    else throw ConfigError("supervised_loss must be 'conditional' or 'plain'");
  }
  if (j.contains("generator_objective")) {
    std::string s;
    read(j, "generator_objective", s);
    if (s == "non_saturating") c.generator_objective = GeneratorObjective::non_saturating;
    else if (s == "feature_matching") c.generator_objective = GeneratorObjective::feature_matching;
    else throw ConfigError("generator_objective must be 'non_saturating' or 'feature_matching'");
  }
  read(j, "trip_level_vote", c.trip_level_vote);
  validate(c);
  return c;
}

synth::SynthConfig synth_config_from_json(const json& j, synth::SynthConfig c) {
  require_object(j, "config");
  if (j.contains("n_trips")) {
    const json& t = j.at("n_trips");
    require_object(t, "n_trips");
    for (const auto& [key, value] : t.items()) {
      read(t, key.c_str(), c.n_trips[static_cast<std::size_t>(mode_key(key))]);
    }
  }
  read(j, "hz", c.hz);
  read(j, "duration_min_s", c.duration_min_s);
  read(j, "duration_max_s", c.duration_max_s);
  if (j.contains("profiles")) {
    const json& p = j.at("profiles");
    require_object(p, "profiles");
    for (const auto& [key, value] : p.items()) profile_from_json(value, c.profiles[static_cast<std::size_t>(mode_key(key))]);
  }
  read(j, "gps_noise_m", c.gps_noise_m);
  read(j, "gps_noise_corr_s", c.gps_noise_corr_s);
  read(j, "origin_lat_deg", c.origin_lat_deg);
  read(j, "origin_lon_deg", c.origin_lon_deg);
  read(j, "origin_spread_m", c.origin_spread_m);
  read(j, "start_epoch_s", c.start_epoch_s);
  read(j, "seed", c.seed);
  synth::validate(c);
  return c;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  require_object(j, "config file");
  for (const auto& [key, value] : j.items()) {
    if (!train_keys().contains(key) && !synth_keys().contains(key)) {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }
  return j;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_digest(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace trajgan
