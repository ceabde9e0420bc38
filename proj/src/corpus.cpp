#include "objsample/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <system_error>

#include "objsample/errors.hpp"
#include "objsample/io.hpp"
#include "objsample/rng.hpp"

namespace objsample {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path labels_for(const fs::path& cloud) {
  fs::path p = cloud;
  p.replace_extension(".labels.json");
  return p;
}

}  // namespace

std::vector<CorpusEntry> list_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a corpus directory: " + dir.string());
  std::vector<CorpusEntry> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".bin") continue;
    CorpusEntry c{e.path(), labels_for(e.path())};
    if (!fs::exists(c.labels)) c.labels.clear();
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const CorpusEntry& a, const CorpusEntry& b) { return a.cloud < b.cloud; });
  return out;
}

std::vector<LabeledCloud> load_corpus(const fs::path& dir, FormatTag format) {
  const auto entries = list_corpus(dir);
  if (entries.empty()) throw EmptyInput("no .bin clouds in " + dir.string());
  std::vector<LabeledCloud> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.labels.empty()) throw Error("missing labels for " + e.cloud.string());
    LabeledCloud lc;
    try {
      lc.cloud = read_point_cloud_file(e.cloud.string(), format);
    } catch (const Error& err) {
      throw Error(e.cloud.string() + ": " + err.what());
    }
    try {
      lc.labels = read_labels(io::read_text(e.labels));
    } catch (const Error& err) {
      throw Error(e.labels.string() + ": " + err.what());
    }
    out.push_back(std::move(lc));
  }
  return out;
}

void write_synth_corpus(const fs::path& dir, const SynthConfig& config, std::size_t count, std::uint64_t seed,
                        FormatTag format, const std::string& extra_manifest_json) {
  config.validate();
  if (count == 0) throw InvalidConfig("corpus needs at least one cloud");
  record_size(format);  // rejects formats without a binary layout
  if (fs::exists(dir) && !fs::is_empty(dir)) throw Error("output directory is not empty: " + dir.string());

  fs::path tmp = dir;
  tmp += ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);
  try {
    json manifest = extra_manifest_json.empty() ? json::object() : json::parse(extra_manifest_json);
    manifest["format"] = format_name(format);
    manifest["seed"] = seed;
    manifest["count"] = count;
    manifest["synth_config"] = json::parse(synth_config_to_json(config));
    json clouds = json::array();
    for (std::size_t i = 0; i < count; ++i) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "%04zu", i);
      const std::uint64_t s = partition_seed(seed, i + 1);
      const SynthScene scene = synth_scene(config, s);
      const fs::path cloud = tmp / (std::string(stem) + ".bin");
      write_point_cloud_file(cloud.string(), scene.cloud, format);
      io::write_text_atomic(labels_for(cloud), write_labels(scene.labels));
      clouds.push_back({{"cloud", cloud.filename().string()},
                        {"labels", labels_for(cloud).filename().string()},
                        {"seed", s}});
    }
    manifest["clouds"] = std::move(clouds);
    io::write_text_atomic(tmp / "manifest.json", manifest.dump(2) + "\n");
    if (fs::exists(dir)) fs::remove(dir);
    fs::rename(tmp, dir);
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
}

}  // namespace objsample
