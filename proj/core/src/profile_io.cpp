// Copyright 2026 The oaken-kv Authors
// SPDX-License-Identifier: Apache-2.0

#include "oaken/profile_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "oaken/error.hpp"

namespace oaken {

using nlohmann::ordered_json;

std::string profile_to_text(const ThresholdProfile& profile) {
  const auto& cfg = profile.provenance.group_config;
  ordered_json doc;
  doc["format"] = "oaken-threshold-profile";
  doc["version"] = 1;
  doc["group_config"] = {{"ratio_outer", cfg.ratio_outer},   {"ratio_middle", cfg.ratio_middle},
                         {"ratio_inner", cfg.ratio_inner},   {"bits_middle", cfg.bits_middle},
                         {"bits_outlier", cfg.bits_outlier}, {"segment_len", cfg.segment_len}};
  doc["provenance"] = {{"num_runs", profile.provenance.num_runs},
                       {"source_trace_digest", profile.provenance.source_trace_digest}};
  ordered_json rows = ordered_json::array();
  for (const auto& [key, q] : profile.quads) {
    rows.push_back({{"layer", key.first},
                    {"kind", std::string(to_string(key.second))},
                    {"t_lo_outer", static_cast<double>(q.t_lo_outer)},
                    {"t_lo_inner", static_cast<double>(q.t_lo_inner)},
                    {"t_hi_inner", static_cast<double>(q.t_hi_inner)},
                    {"t_hi_outer", static_cast<double>(q.t_hi_outer)}});
  }
  doc["thresholds"] = std::move(rows);
  return doc.dump(2) + "\n";
}

ThresholdProfile profile_from_text(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("profile is not valid JSON: ") + e.what(), e.byte);
  }
  try {
    if (doc.at("format").get<std::string>() != "oaken-threshold-profile") {
      throw FormatError("not a threshold profile (format field mismatch)");
    }
    if (doc.at("version").get<int>() != 1) throw FormatError("unsupported profile version");
    ThresholdProfile p;
    const auto& g = doc.at("group_config");
    auto& cfg = p.provenance.group_config;
    cfg.ratio_outer = g.at("ratio_outer").get<double>();
    cfg.ratio_middle = g.at("ratio_middle").get<double>();
    cfg.ratio_inner = g.at("ratio_inner").get<double>();
    cfg.bits_middle = g.at("bits_middle").get<unsigned>();
    cfg.bits_outlier = g.at("bits_outlier").get<unsigned>();
    cfg.segment_len = g.at("segment_len").get<std::size_t>();
    cfg.validate();
    const auto& prov = doc.at("provenance");
    p.provenance.num_runs = prov.at("num_runs").get<std::uint32_t>();
    p.provenance.source_trace_digest = prov.at("source_trace_digest").get<std::string>();
    for (const auto& row : doc.at("thresholds")) {
      ThresholdQuad q{static_cast<float>(row.at("t_lo_outer").get<double>()),
                      static_cast<float>(row.at("t_lo_inner").get<double>()),
                      static_cast<float>(row.at("t_hi_inner").get<double>()),
                      static_cast<float>(row.at("t_hi_outer").get<double>())};
      if (!q.is_ordered()) throw FormatError("profile contains an unordered threshold quad");
      const auto layer = row.at("layer").get<std::uint32_t>();
      const auto kind = parse_kind(row.at("kind").get<std::string>());
      p.quads.emplace(std::make_pair(layer, kind), q);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed profile: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed profile: ") + e.what());
  }
}

void save_profile(const ThresholdProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << profile_to_text(profile);
  if (!out) throw FormatError("short write to '" + path.string() + "'");
}

ThresholdProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return profile_from_text(ss.str());
}

}  // namespace oaken
