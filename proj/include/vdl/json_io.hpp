// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vdl/datasets.hpp"
#include "vdl/errors.hpp"
#include "vdl/numeric.hpp"
#include "vdl/policy.hpp"
#include "vdl/world.hpp"

namespace vdl {

using ojson = nlohmann::ordered_json;

inline std::string read_text_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || ec) {
    throw IoError("file not found: '" + path.string() + "'");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

namespace detail {

inline ojson parse_json(const std::string& text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("malformed " + what + ": " + e.what());
  }
}

inline StanceVector stance_from_json(const ojson& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("stance must be a 3-element array");
  }
  StanceVector v;
  for (std::size_t i = 0; i < 3; ++i) v.p[i] = j[i].get<double>();
  return v;
}

inline ojson stance_to_json(const StanceVector& v) {
  return ojson::array({v.p[0], v.p[1], v.p[2]});
}

}  // namespace detail

/// World document: {"topics": [name...],
///                  "prompts": [{"id", "topic_id", "responses": [id...]}...],
///                  "responses": {id: {"token_length", "stance": [s,n,o]}...}}.
/// Prompt and candidate order is positional; the responses object is keyed
/// by id in lexicographic order. Serialize-then-parse is the identity.
inline std::string save_world(const World& world) {
  world.validate();
  ojson doc;
  doc["topics"] = world.topics;
  ojson prompts = ojson::array();
  for (const Prompt* p : world.all_prompts()) {
    prompts.push_back({{"id", p->id},
                       {"topic_id", p->topic_id},
                       {"responses", p->response_ids}});
  }
  doc["prompts"] = std::move(prompts);
  ojson responses = ojson::object();
  for (const auto& [rid, r] : world.responses) {
    responses[rid] = {{"token_length", r.token_length},
                      {"stance", detail::stance_to_json(r.stance)}};
  }
  doc["responses"] = std::move(responses);
  return doc.dump(2) + "\n";
}

inline World load_world(const std::string& text) {
  const ojson doc = detail::parse_json(text, "world document");
  if (!doc.contains("topics") || !doc.contains("prompts") || !doc.contains("responses")) {
    throw std::invalid_argument("world document needs topics, prompts and responses");
  }
  World world;
  world.topics = doc["topics"].get<std::vector<std::string>>();
  world.prompts_by_topic.resize(world.topics.size());
  for (const auto& jp : doc["prompts"]) {
    Prompt p;
    p.id = jp.at("id").get<std::string>();
    p.topic_id = jp.at("topic_id").get<int>();
    p.response_ids = jp.at("responses").get<std::vector<std::string>>();
    if (p.topic_id < 0 || p.topic_id >= static_cast<int>(world.topics.size())) {
      throw std::invalid_argument("prompt '" + p.id + "' references a missing topic");
    }
    world.prompts_by_topic[static_cast<std::size_t>(p.topic_id)].push_back(std::move(p));
  }
  for (const auto& [rid, jr] : doc["responses"].items()) {
    Response r;
    r.id = rid;
    r.token_length = jr.at("token_length").get<int>();
    r.stance = detail::stance_from_json(jr.at("stance"));
    world.responses.emplace(rid, std::move(r));
  }
  world.validate();
  return world;
}

/// SFT dataset document: {"sft": {"examples": [{"prompt_id","response_id"}...],
///                                "fallback_count": n}}.
inline std::string save_sft(const SftDataset& data) {
  ojson examples = ojson::array();
  for (const auto& ex : data.examples) {
    examples.push_back({{"prompt_id", ex.prompt_id}, {"response_id", ex.response_id}});
  }
  ojson doc;
  doc["sft"] = {{"examples", std::move(examples)}, {"fallback_count", data.fallback_count}};
  return doc.dump(2) + "\n";
}

inline SftDataset load_sft(const std::string& text) {
  const ojson doc = detail::parse_json(text, "sft dataset");
  if (!doc.contains("sft")) throw std::invalid_argument("document has no \"sft\" key");
  const ojson& j = doc["sft"];
  SftDataset data;
  data.fallback_count = j.at("fallback_count").get<int>();
  for (const auto& je : j.at("examples")) {
    data.examples.push_back(
        {je.at("prompt_id").get<std::string>(), je.at("response_id").get<std::string>()});
  }
  return data;
}

/// Preference dataset document:
/// {"pref": [{"prompt_id","chosen_id","rejected_id"}...]}.
inline std::string save_pref(const PreferenceDataset& pairs) {
  ojson arr = ojson::array();
  for (const auto& p : pairs) {
    arr.push_back({{"prompt_id", p.prompt_id},
                   {"chosen_id", p.chosen_id},
                   {"rejected_id", p.rejected_id}});
  }
  ojson doc;
  doc["pref"] = std::move(arr);
  return doc.dump(2) + "\n";
}

inline PreferenceDataset load_pref(const std::string& text) {
  const ojson doc = detail::parse_json(text, "preference dataset");
  if (!doc.contains("pref")) throw std::invalid_argument("document has no \"pref\" key");
  PreferenceDataset pairs;
  for (const auto& jp : doc["pref"]) {
    pairs.push_back({jp.at("prompt_id").get<std::string>(),
                     jp.at("chosen_id").get<std::string>(),
                     jp.at("rejected_id").get<std::string>()});
  }
  return pairs;
}

namespace detail {

inline void append_json_string(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

}  // namespace detail

/// Policy document: {"logits": {prompt_id: {response_id: number}}}, numbers
/// rendered with 17 significant digits so parsing reproduces every logit
/// bit-exactly. Candidate order inside each prompt follows the policy row.
inline std::string save_policy(const Policy& policy) {
  std::string out = "{\n  \"logits\": {";
  bool first_prompt = true;
  for (const auto& [pid, row] : policy.rows()) {
    for (double v : row.logits) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("policy logit for '" + pid + "' is not finite");
      }
    }
    out += first_prompt ? "\n" : ",\n";
    first_prompt = false;
    out += "    ";
    detail::append_json_string(out, pid);
    out += ": {";
    for (std::size_t i = 0; i < row.ids.size(); ++i) {
      out += i == 0 ? "\n" : ",\n";
      out += "      ";
      detail::append_json_string(out, row.ids[i]);
      out += ": ";
      out += format_g17(row.logits[i]);
    }
    out += "\n    }";
  }
  out += "\n  }\n}\n";
  return out;
}

inline Policy load_policy(const std::string& text) {
  const ojson doc = detail::parse_json(text, "policy document");
  if (!doc.contains("logits")) throw std::invalid_argument("document has no \"logits\" key");
  std::map<std::string, Policy::Row> rows;
  for (const auto& [pid, jrow] : doc["logits"].items()) {
    Policy::Row row;
    for (const auto& [rid, jv] : jrow.items()) {
      row.ids.push_back(rid);
      row.logits.push_back(jv.get<double>());
    }
    rows.emplace(pid, std::move(row));
  }
  return Policy::from_rows(std::move(rows));
}

}  // namespace vdl
