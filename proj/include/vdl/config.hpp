// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vdl/datasets.hpp"
#include "vdl/errors.hpp"
#include "vdl/json_io.hpp"
#include "vdl/trainers.hpp"
#include "vdl/world.hpp"

namespace vdl {

struct WorldConfig {
  int n_topics = 3;
  int prompts_per_topic = 10;
  int responses_per_prompt = 6;
  StanceMix stance_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  int length_min = 5;
  int length_max = 20;
};

struct SftConfig {
  std::string preset = "wildchat-like";
  bool has_mix = false;
  StanceMix mix{};
  int n = 640;
  TrainerConfig trainer = default_config(Algorithm::sft);

  StanceMix resolved_mix() const { return has_mix ? mix : stance_mix_preset(preset); }
};

struct PrefConfig {
  double gap = 1.0;
  Alignment alignment = Alignment::support_aligned;
  bool flip = false;
  int n = 640;
  TrainerConfig trainer = default_config(Algorithm::dpo);
};

struct EvalConfig {
  bool sampled = false;
  int k = 5;
  double temperature = 0.7;
  int checkpoint_every = 0;  // 0 resolves per phase to max(1, total_steps/20)
};

/// Parsed experiment description. `raw` holds the original document so sweep
/// expansion can re-apply overrides through the same strict validation.
struct ExperimentConfig {
  WorldConfig world;
  SftConfig sft;
  PrefConfig pref;
  EvalConfig eval;
  ojson sweep = ojson::object();  // dotted path -> array of scalar values
  std::string output_dir = "out";
  std::uint64_t master_seed = 0;
  ojson raw = ojson::object();
};

namespace detail {

inline void check_keys(const ojson& obj, const std::string& section,
                       std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError("unknown key '" + key + "' in " + section);
    }
  }
}

inline const ojson* find(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline double get_number(const ojson& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

inline int get_count(const ojson& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
  return j.get<int>();
}

inline bool get_bool(const ojson& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + " must be a boolean");
  return j.get<bool>();
}

inline std::string get_string(const ojson& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

inline StanceMix get_mix(const ojson& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(where + " must be a 3-element array [support, neutral, oppose]");
  }
  StanceMix mix{};
  for (std::size_t i = 0; i < 3; ++i) mix[i] = get_number(j[i], where);
  try {
    validate_stance_mix(mix);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return mix;
}

inline void apply_trainer_keys(TrainerConfig& t, const ojson& obj, const std::string& section) {
  if (const ojson* v = find(obj, "learning_rate")) {
    t.learning_rate = get_number(*v, section + ".learning_rate");
  }
  if (const ojson* v = find(obj, "beta")) t.beta = get_number(*v, section + ".beta");
  if (const ojson* v = find(obj, "gamma")) t.gamma = get_number(*v, section + ".gamma");
  if (const ojson* v = find(obj, "kl_coef")) t.kl_coef = get_number(*v, section + ".kl_coef");
  if (const ojson* v = find(obj, "epochs")) t.epochs = get_count(*v, section + ".epochs");
  if (const ojson* v = find(obj, "batch_size")) {
    t.batch_size = get_count(*v, section + ".batch_size");
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

/// Strict construction from a parsed document; every unknown key is fatal.
inline ExperimentConfig build_config(const ojson& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  check_keys(doc, "the top-level config",
             {"world", "sft", "pref", "eval", "sweep", "output_dir", "master_seed"});
  ExperimentConfig cfg;

  if (const ojson* w = find(doc, "world")) {
    if (!w->is_object()) throw ConfigError("'world' must be an object");
    check_keys(*w, "'world'",
               {"n_topics", "prompts_per_topic", "responses_per_prompt", "stance_weights",
                "length_min", "length_max"});
    if (const ojson* v = find(*w, "n_topics")) cfg.world.n_topics = get_count(*v, "world.n_topics");
    if (const ojson* v = find(*w, "prompts_per_topic")) {
      cfg.world.prompts_per_topic = get_count(*v, "world.prompts_per_topic");
    }
    if (const ojson* v = find(*w, "responses_per_prompt")) {
      cfg.world.responses_per_prompt = get_count(*v, "world.responses_per_prompt");
    }
    if (const ojson* v = find(*w, "stance_weights")) {
      cfg.world.stance_weights = get_mix(*v, "world.stance_weights");
    }
    if (const ojson* v = find(*w, "length_min")) cfg.world.length_min = get_count(*v, "world.length_min");
    if (const ojson* v = find(*w, "length_max")) cfg.world.length_max = get_count(*v, "world.length_max");
    if (cfg.world.n_topics < 1 || cfg.world.prompts_per_topic < 1 ||
        cfg.world.responses_per_prompt < 1) {
      throw ConfigError("world dimensions must be positive");
    }
    if (cfg.world.length_min < 1 || cfg.world.length_max < cfg.world.length_min) {
      throw ConfigError("world token length range is invalid");
    }
  }

  if (const ojson* s = find(doc, "sft")) {
    if (!s->is_object()) throw ConfigError("'sft' must be an object");
    check_keys(*s, "'sft'",
               {"preset", "mix", "n", "algorithm", "learning_rate", "epochs", "batch_size"});
    if (const ojson* v = find(*s, "algorithm")) {
      if (get_string(*v, "sft.algorithm") != "sft") {
        throw ConfigError("sft.algorithm must be \"sft\"");
      }
    }
    const ojson* preset = find(*s, "preset");
    const ojson* mix = find(*s, "mix");
    if (preset && mix) throw ConfigError("'sft' takes either preset or mix, not both");
    if (preset) {
      cfg.sft.preset = get_string(*preset, "sft.preset");
      try {
        stance_mix_preset(cfg.sft.preset);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("sft.preset: ") + e.what());
      }
    }
    if (mix) {
      cfg.sft.has_mix = true;
      cfg.sft.mix = get_mix(*mix, "sft.mix");
    }
    if (const ojson* v = find(*s, "n")) cfg.sft.n = get_count(*v, "sft.n");
    if (cfg.sft.n < 1) throw ConfigError("sft.n must be positive");
    apply_trainer_keys(cfg.sft.trainer, *s, "sft");
  }

  if (const ojson* p = find(doc, "pref")) {
    if (!p->is_object()) throw ConfigError("'pref' must be an object");
    check_keys(*p, "'pref'",
               {"gap", "alignment", "flip", "n", "algorithm", "learning_rate", "beta",
                "gamma", "kl_coef", "epochs", "batch_size"});
    if (const ojson* v = find(*p, "algorithm")) {
      const std::string name = get_string(*v, "pref.algorithm");
      Algorithm algo;
      try {
        algo = algorithm_from_name(name);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("pref.algorithm: ") + e.what());
      }
      if (algo == Algorithm::sft) {
        throw ConfigError("pref.algorithm must be dpo, simpo or rlhf");
      }
      cfg.pref.trainer = default_config(algo);
    }
    if (const ojson* v = find(*p, "gap")) {
      cfg.pref.gap = get_number(*v, "pref.gap");
      if (!(cfg.pref.gap >= 0.0 && cfg.pref.gap <= 1.0)) {
        throw ConfigError("pref.gap must lie in [0, 1]");
      }
    }
    if (const ojson* v = find(*p, "alignment")) {
      try {
        cfg.pref.alignment = alignment_from_name(get_string(*v, "pref.alignment"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("pref.alignment: ") + e.what());
      }
    }
    if (const ojson* v = find(*p, "flip")) cfg.pref.flip = get_bool(*v, "pref.flip");
    if (const ojson* v = find(*p, "n")) cfg.pref.n = get_count(*v, "pref.n");
    if (cfg.pref.n < 1) throw ConfigError("pref.n must be positive");
    apply_trainer_keys(cfg.pref.trainer, *p, "pref");
  }

  if (const ojson* e = find(doc, "eval")) {
    if (!e->is_object()) throw ConfigError("'eval' must be an object");
    check_keys(*e, "'eval'", {"sampled", "k", "temperature", "checkpoint_every"});
    if (const ojson* v = find(*e, "sampled")) cfg.eval.sampled = get_bool(*v, "eval.sampled");
    if (const ojson* v = find(*e, "k")) cfg.eval.k = get_count(*v, "eval.k");
    if (const ojson* v = find(*e, "temperature")) {
      cfg.eval.temperature = get_number(*v, "eval.temperature");
    }
    if (const ojson* v = find(*e, "checkpoint_every")) {
      cfg.eval.checkpoint_every = get_count(*v, "eval.checkpoint_every");
    }
    if (cfg.eval.k < 1) throw ConfigError("eval.k must be positive");
    if (!(cfg.eval.temperature > 0.0)) throw ConfigError("eval.temperature must be positive");
    if (cfg.eval.checkpoint_every < 0) {
      throw ConfigError("eval.checkpoint_every must be nonnegative");
    }
  }

  if (const ojson* o = find(doc, "output_dir")) {
    cfg.output_dir = get_string(*o, "output_dir");
    if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }
  if (const ojson* m = find(doc, "master_seed")) {
    if (!m->is_number_integer() || (m->is_number_integer() && !m->is_number_unsigned() &&
                                    m->get<std::int64_t>() < 0)) {
      throw ConfigError("master_seed must be a nonnegative integer");
    }
    cfg.master_seed = m->get<std::uint64_t>();
  }

  if (const ojson* sw = find(doc, "sweep")) {
    if (!sw->is_object() || sw->empty()) {
      throw ConfigError("'sweep' must be a non-empty object of field -> value list");
    }
    for (const auto& [path, values] : sw->items()) {
      if (path == "sweep" || path == "output_dir" || path.rfind("master_seed", 0) == 0) {
        throw ConfigError("'" + path + "' cannot be swept");
      }
      if (!values.is_array() || values.empty()) {
        throw ConfigError("sweep values for '" + path + "' must be a non-empty array");
      }
      for (const auto& v : values) {
        if (!v.is_primitive() || v.is_null()) {
          throw ConfigError("sweep values for '" + path + "' must be scalars");
        }
      }
    }
    cfg.sweep = *sw;
  }

  return cfg;
}

/// Set a dotted-path scalar inside a config document, creating intermediate
/// objects as needed.
inline ojson apply_override(ojson doc, const std::string& path, const ojson& value) {
  ojson* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("bad sweep path '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return doc;
    }
    ojson& next = (*node)[key];
    if (!next.is_object() && !next.is_null()) {
      throw ConfigError("sweep path '" + path + "' does not name a scalar field");
    }
    if (next.is_null()) next = ojson::object();
    node = &next;
    start = dot + 1;
  }
}

}  // namespace detail

/// Parse and validate an experiment config. Syntax errors carry line/column;
/// schema errors name the offending key. Sweep paths are probe-validated
/// against the schema using each path's first value.
inline ExperimentConfig parse_config(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 1, col = 1;
    const std::size_t stop = e.byte == 0 ? 0 : e.byte - 1;
    for (std::size_t i = 0; i < stop && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(col));
  }

  ExperimentConfig cfg = detail::build_config(doc);
  cfg.raw = doc;

  if (!cfg.sweep.empty()) {
    ojson base = doc;
    base.erase("sweep");
    for (const auto& [path, values] : cfg.sweep.items()) {
      detail::build_config(detail::apply_override(base, path, values[0]));
    }
  }
  return cfg;
}

}  // namespace vdl
