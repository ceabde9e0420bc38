#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "objsample/bayes.hpp"
#include "objsample/eval.hpp"
#include "objsample/peak.hpp"
#include "objsample/point_cloud.hpp"

namespace objsample {

std::string_view tool_version();

enum class Command { sample, train_bayes, eval, bench, synth };

std::string_view command_name(Command c);

/// Fully resolved options for one invocation. Defaults match the library
/// defaults; parse_command_line fills in flags, then environment overrides.
struct RunConfig {
  Command command = Command::sample;
  std::vector<std::string> inputs;  // cloud file (sample), corpus dirs or a cloud (train-bayes), corpus dir (eval, bench)
  std::string output;
  std::string labels;  // train-bayes on a single cloud
  FormatTag format = FormatTag::kitti4;

  Method method = Method::sta_peak;  // sample
  std::vector<Method> methods;       // eval, bench; empty means every runnable method
  double rate = 0.3;
  std::vector<double> rates{0.3};  // eval, bench
  double obj_ratio = 0.7;
  std::vector<double> obj_ratios;  // eval, bench sweep for object-aware methods; empty means {obj_ratio}
  std::uint64_t seed = 0;

  std::string model;  // sta_bayes
  double threshold = 0.5;
  PeakConfig peak;
  bool z_ablation = false;  // eval, bench: add a sta_peak row with the Z filter off

  GridConfig grid;  // train-bayes
  std::uint32_t buckets = 12;
  std::uint32_t tau = 1;
  double alpha = 1.0;

  double cell = 10.0;
  std::size_t leaf_capacity = 64;
  std::size_t theta = 5;
  std::size_t repetitions = 3;
  int jobs = 1;
  std::string expectations;

  std::string preset = "standard";  // synth
  std::size_t count = 50;

  /// Throws ConfigError naming the flag at fault.
  void validate() const;
};

/// JSON echo of every resolved option, embedded in each artifact.
std::string run_config_to_json(const RunConfig& cfg);

/// Lowest rate studied for each dataset layout; 0 when there is none.
double rate_floor(FormatTag format);

/// Executes a validated config. Returns the process exit status: 0 on
/// success, 3 when an acceptance-tagged expectation is violated. Library
/// errors propagate.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// argv in, exit status out: 0 ok, 1 runtime failure, 2 bad usage,
/// 3 expectation violated.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace objsample
