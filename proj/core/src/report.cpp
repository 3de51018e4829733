#include "fedms/report.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fedms::cli {

namespace {

std::string g9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string joined_ids(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(ids[i]);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

}  // namespace

std::string rounds_csv_text(const ExperimentReport& report) {
  std::ostringstream out;
  out << "round,test_acc";
  for (int c = 0; c < report.num_classes; ++c) out << ",acc_c" << c;
  for (int c = 0; c < report.num_classes; ++c) out << ",beta_c" << c;
  out << ",selected,best_set";
  for (int id : report.client_ids) out << ",r_" << id;
  out << "\n";

  for (const RoundRecord& record : report.rounds) {
    out << record.round << "," << g9(record.test_accuracy);
    for (double acc : record.val_class_accuracy) out << "," << g9(acc);
    for (double b : record.beta) out << "," << g9(b);
    out << "," << joined_ids(record.cohort) << "," << joined_ids(record.best_set);
    for (int id : report.client_ids) {
      out << ",";
      auto it = record.rewards.find(id);
      if (it != record.rewards.end()) out << g9(it->second);
      // non-participants keep an empty cell: "not selected" != "zero reward"
    }
    out << "\n";
  }
  return out.str();
}

void write_rounds_csv(const std::string& path, const ExperimentReport& report) {
  write_text(path, rounds_csv_text(report));
}

std::string summary_json_text(const ExperimentReport& report) {
  nlohmann::json j;
  j["strategy"] = to_string(report.strategy);
  j["seed"] = report.seed;
  j["num_rounds"] = report.rounds.size();
  j["num_classes"] = report.num_classes;
  j["client_ids"] = report.client_ids;
  j["maverick_ids"] = report.maverick_ids;
  j["initial_test_accuracy"] = report.initial_test_accuracy;
  j["final_test_accuracy"] = report.final_test_accuracy;
  nlohmann::json rewards = nlohmann::json::object();
  for (const auto& [id, total] : report.cumulative_rewards)
    rewards[std::to_string(id)] = total;
  j["cumulative_rewards"] = rewards;
  if (std::isfinite(report.maverick_reward_ratio))
    j["maverick_reward_ratio"] = report.maverick_reward_ratio;
  else
    j["maverick_reward_ratio"] = nullptr;
  return j.dump(2) + "\n";
}

void write_summary_json(const std::string& path, const ExperimentReport& report) {
  write_text(path, summary_json_text(report));
}

std::string iso8601_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  nlohmann::json j;
  j["config_path"] = manifest.config_path;
  j["master_seed"] = manifest.master_seed;
  j["artifact_version"] = manifest.artifact_version;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["output_dir"] = manifest.output_dir;
  for (const auto& [key, value] : manifest.extra) j[key] = value;
  write_text(path, j.dump(2) + "\n");
}

}  // namespace fedms::cli
