#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "objsample/bayes.hpp"
#include "objsample/synth.hpp"

namespace objsample {

/// A corpus directory holds NNNN.bin clouds, each with a NNNN.labels.json
/// next to it, plus an optional manifest.json describing how it was made.
struct CorpusEntry {
  std::filesystem::path cloud;
  std::filesystem::path labels;  // empty when the label file is missing
};

/// Cloud files (*.bin) in `dir`, sorted by path.
std::vector<CorpusEntry> list_corpus(const std::filesystem::path& dir);

/// Throws Error when a label file is missing or a file fails to parse; the
/// message names the file.
std::vector<LabeledCloud> load_corpus(const std::filesystem::path& dir, FormatTag format);

/// Writes `count` scenes drawn with per-scene seeds derived from `seed`.
/// The corpus is assembled in a sibling temp directory and renamed into
/// place, so a failed run leaves nothing behind. `dir` must not exist or be
/// empty. `extra_manifest_json`, when non-empty, is merged into the manifest.
void write_synth_corpus(const std::filesystem::path& dir, const SynthConfig& config, std::size_t count,
                        std::uint64_t seed, FormatTag format, const std::string& extra_manifest_json = {});

}  // namespace objsample
