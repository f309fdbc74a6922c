#include <cmath>
#include <cstdio>
#include <fstream>

#include "mvb/cli.hpp"
#include "mvb/error.hpp"

namespace mvb {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

json artifact_meta(const RunContext& ctx) {
  return {{"config_hash", ctx.cfg.hash()},
          {"seed", ctx.cfg.mc.seed},
          {"tool_version", kToolVersion},
          {"schema_version", kSchemaVersion},
          {"command", ctx.command}};
}

namespace {
std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}
}  // namespace

void write_json(const std::filesystem::path& path, const json& body, const RunContext& ctx) {
  json j = body;
  j["meta"] = artifact_meta(ctx);
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, const RunContext& ctx) {
  auto out = open_out(path);
  out << "# config_hash=" << ctx.cfg.hash() << " seed=" << ctx.cfg.mc.seed << " tool_version=" << kToolVersion
      << " (wall-clock: run_info.json)\n";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
    out << "\n";
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void write_run_info(const RunContext& ctx, double wall_seconds, int exit_code) {
  // one entry per command, merged into the existing manifest
  const auto path = ctx.out / "run_info.json";
  json all = json::object();
  if (std::ifstream in(path); in) {
    try {
      all = json::parse(in);
    } catch (const json::parse_error&) {
      all = json::object();
    }
  }
  json j = artifact_meta(ctx);
  j["wall_clock_seconds"] = wall_seconds;
  j["exit_code"] = exit_code;
  j["threads"] = ctx.threads;
  all[ctx.command] = j;
  auto out = open_out(path);
  j = all;
  out << j.dump(2) << "\n";
}

}  // namespace mvb
