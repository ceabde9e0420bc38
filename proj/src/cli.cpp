#include "objsample/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <system_error>

#include "objsample/corpus.hpp"
#include "objsample/errors.hpp"
#include "objsample/io.hpp"
#include "objsample/synth.hpp"

#ifndef OBJSAMPLE_VERSION
#define OBJSAMPLE_VERSION "0.0.0"
#endif

namespace objsample {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view tool_version() { return OBJSAMPLE_VERSION; }

std::string_view command_name(Command c) {
  switch (c) {
    case Command::sample: return "sample";
    case Command::train_bayes: return "train-bayes";
    case Command::eval: return "eval";
    case Command::bench: return "bench";
    case Command::synth: return "synth";
  }
  return "unknown";
}

double rate_floor(FormatTag format) {
  switch (format) {
    case FormatTag::kitti4: return 0.10;
    case FormatTag::nuscenes5: return 0.07;
    default: return 0.0;
  }
}

namespace {

bool uses_methods(Command c) { return c == Command::eval || c == Command::bench; }

bool needs_model(const RunConfig& cfg) {
  if (cfg.command == Command::sample) return cfg.method == Method::sta_bayes;
  if (uses_methods(cfg.command)) {
    for (auto m : cfg.methods) {
      if (m == Method::sta_bayes) return true;
    }
  }
  return false;
}

void check_fraction(double v, const char* flag, bool allow_zero) {
  const bool ok = allow_zero ? (v >= 0.0 && v <= 1.0) : (v > 0.0 && v <= 1.0);
  if (!ok) throw ConfigError(flag, std::string(flag) + " must be in " + (allow_zero ? "[0, 1]" : "(0, 1]"));
}

}  // namespace

void RunConfig::validate() const {
  if (output.empty()) throw ConfigError("--output", "--output is required");
  switch (command) {
    case Command::sample:
      if (inputs.size() != 1) throw ConfigError("input", "sample takes exactly one input cloud");
      break;
    case Command::train_bayes: {
      if (inputs.empty()) throw ConfigError("input", "train-bayes needs at least one corpus directory or cloud");
      bool any_file = false;
      for (const auto& in : inputs) any_file = any_file || !fs::is_directory(in);
      if (any_file && inputs.size() != 1) {
        throw ConfigError("input", "train-bayes takes either corpus directories or a single cloud");
      }
      if (any_file && labels.empty()) throw ConfigError("--labels", "train-bayes on a single cloud requires --labels");
      break;
    }
    case Command::eval:
    case Command::bench:
      if (inputs.size() != 1) throw ConfigError("input", std::string(command_name(command)) + " takes one corpus directory");
      break;
    case Command::synth:
      if (count == 0) throw ConfigError("--count", "--count must be >= 1");
      break;
  }
  for (const auto& in : inputs) {
    if (!fs::exists(in)) throw ConfigError("input", "no such file or directory: " + in);
  }
  if (!labels.empty() && !fs::exists(labels)) throw ConfigError("--labels", "no such file: " + labels);
  if (format == FormatTag::synthetic) {
    throw ConfigError("--format", "--format must be kitti4 or nuscenes5 for on-disk clouds");
  }
  if (needs_model(*this)) {
    if (model.empty()) throw ConfigError("--model", "sta_bayes requires --model");
    if (!fs::exists(model)) throw ConfigError("--model", "no such model file: " + model);
  }
  check_fraction(rate, "--rate", false);
  for (double r : rates) check_fraction(r, "--rates", false);
  if (uses_methods(command) && rates.empty()) throw ConfigError("--rates", "--rates must list at least one rate");
  check_fraction(obj_ratio, "--obj-ratio", true);
  for (double r : obj_ratios) check_fraction(r, "--obj-ratios", true);
  check_fraction(threshold, "--threshold", false);
  try {
    peak.validate();
  } catch (const InvalidConfig& e) {
    throw ConfigError("--peak-config", e.what());
  }
  try {
    grid.validate();
  } catch (const InvalidConfig& e) {
    throw ConfigError("--grid-bounds", e.what());
  }
  if (buckets < 1 || buckets > 32) throw ConfigError("--buckets", "--buckets must be in [1, 32]");
  if (!(alpha > 0.0)) throw ConfigError("--alpha", "--alpha must be > 0");
  if (!(cell > 0.0)) throw ConfigError("--cell", "--cell must be > 0");
  if (leaf_capacity < 1) throw ConfigError("--leaf-capacity", "--leaf-capacity must be >= 1");
  if (theta < 1) throw ConfigError("--theta", "--theta must be >= 1");
  if (command == Command::bench && repetitions < 3) throw ConfigError("--repetitions", "--repetitions must be >= 3");
  if (jobs < 1) throw ConfigError("--jobs", "--jobs must be >= 1");
  if (!expectations.empty() && !fs::exists(expectations)) {
    throw ConfigError("--expectations", "no such file: " + expectations);
  }
}

std::string run_config_to_json(const RunConfig& c) {
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(method_name(m));
  json j = {
      {"command", command_name(c.command)},
      {"inputs", c.inputs},
      {"output", c.output},
      {"format", format_name(c.format)},
      {"seed", c.seed},
      {"jobs", c.jobs},
  };
  switch (c.command) {
    case Command::sample:
      j["method"] = method_name(c.method);
      j["rate"] = c.rate;
      j["obj_ratio"] = c.obj_ratio;
      break;
    case Command::eval:
    case Command::bench:
      j["methods"] = methods;
      j["rates"] = c.rates;
      j["obj_ratios"] = c.obj_ratios.empty() ? std::vector<double>{c.obj_ratio} : c.obj_ratios;
      j["theta"] = c.theta;
      j["z_ablation"] = c.z_ablation;
      if (c.command == Command::bench) j["repetitions"] = c.repetitions;
      break;
    case Command::train_bayes:
      j["labels"] = c.labels;
      j["grid"] = {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"y_min", c.grid.y_min},
                   {"y_max", c.grid.y_max}, {"m", c.grid.m},         {"n", c.grid.n}};
      j["buckets"] = c.buckets;
      j["tau"] = c.tau;
      j["alpha"] = c.alpha;
      break;
    case Command::synth:
      j["preset"] = c.preset;
      j["count"] = c.count;
      break;
  }
  if (c.command != Command::synth && c.command != Command::train_bayes) {
    j["model"] = c.model;
    j["threshold"] = c.threshold;
    j["peak"] = json::parse(peak_config_to_json(c.peak));
    j["cell"] = c.cell;
    j["leaf_capacity"] = c.leaf_capacity;
  }
  return j.dump();
}

namespace {

std::string provenance(const RunConfig& cfg) {
  json p = {{"tool", "objsample"}, {"version", tool_version()}, {"config", json::parse(run_config_to_json(cfg))}};
  return p.dump();
}

void warn_rate(double rate, FormatTag format, std::ostream& err) {
  const double floor = rate_floor(format);
  if (rate < floor) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "warning: rate %.4g is below the %.2f floor studied for %s data; continuing\n", rate, floor,
                  std::string(format_name(format)).c_str());
    err << buf;
  }
}

std::shared_ptr<const BayesModel> load_model_file(const std::string& path) {
  try {
    return std::make_shared<const BayesModel>(load_model(io::read_text(path)));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

MethodSpec base_spec(const RunConfig& cfg, Method m, std::shared_ptr<const BayesModel> model) {
  MethodSpec s;
  s.method = m;
  s.obj_ratio = cfg.obj_ratio;
  s.peak = cfg.peak;
  s.model = m == Method::sta_bayes ? std::move(model) : nullptr;
  s.threshold = cfg.threshold;
  s.cell = cfg.cell;
  s.leaf_capacity = cfg.leaf_capacity;
  return s;
}

int run_sample(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  warn_rate(cfg.rate, cfg.format, err);
  const PointCloud cloud = read_point_cloud_file(cfg.inputs[0], cfg.format);
  std::shared_ptr<const BayesModel> model;
  if (cfg.method == Method::sta_bayes) model = load_model_file(cfg.model);
  MethodSpec spec = base_spec(cfg, cfg.method, model);
  spec.validate();
  const SampleResult r = run_method(cloud, spec, cfg.rate, cfg.seed);

  json extra = json::parse(provenance(cfg));
  extra["input"] = cfg.inputs[0];
  extra["n_input"] = cloud.size();
  const std::string record = sample_result_to_json(r, SampleSpec{cfg.rate, cfg.obj_ratio, cfg.seed}, extra.dump());

  const PointCloud kept = select_points(cloud, r.indices);
  write_point_cloud_file(cfg.output, kept, cfg.format);
  try {
    io::write_text_atomic(cfg.output + ".json", record);
  } catch (...) {
    std::error_code ec;
    fs::remove(cfg.output, ec);
    throw;
  }
  out << "kept " << r.indices.size() << " of " << cloud.size() << " points";
  if (is_object_aware(cfg.method)) {
    out << " (" << r.n_object_selected << " object, " << r.n_background_selected << " background)";
  }
  out << " -> " << cfg.output << "\n";
  return 0;
}

int run_train(const RunConfig& cfg, std::ostream& out) {
  std::vector<LabeledCloud> training;
  if (fs::is_directory(cfg.inputs[0])) {
    for (const auto& dir : cfg.inputs) {
      auto part = load_corpus(dir, cfg.format);
      for (auto& lc : part) training.push_back(std::move(lc));
    }
  } else {
    LabeledCloud lc;
    lc.cloud = read_point_cloud_file(cfg.inputs[0], cfg.format);
    lc.labels = read_labels(io::read_text(cfg.labels));
    training.push_back(std::move(lc));
  }
  const BayesModel model =
      train_bayes(training, cfg.grid, BucketScheme::power_of_two(cfg.buckets), cfg.tau, cfg.alpha);
  io::write_text_atomic(cfg.output, save_model(model, provenance(cfg)));
  std::size_t seen = 0;
  for (std::size_t r = 0; r < model.grid.region_count(); ++r) seen += model.positive_seen(r) ? 1 : 0;
  out << "trained on " << training.size() << " clouds; " << seen << " of " << model.grid.region_count()
      << " regions saw an object -> " << cfg.output << "\n";
  return 0;
}

std::vector<MethodSpec> expand_methods(const RunConfig& cfg) {
  std::shared_ptr<const BayesModel> model;
  std::vector<Method> methods = cfg.methods;
  if (methods.empty()) {
    methods = {Method::random, Method::fps, Method::grid_fps, Method::octree, Method::sta_peak};
    if (!cfg.model.empty()) methods.push_back(Method::sta_bayes);
  }
  for (auto m : methods) {
    if (m == Method::sta_bayes && !model) model = load_model_file(cfg.model);
  }
  const std::vector<double> ratios = cfg.obj_ratios.empty() ? std::vector<double>{cfg.obj_ratio} : cfg.obj_ratios;
  std::vector<MethodSpec> specs;
  for (auto m : methods) {
    if (!is_object_aware(m)) {
      specs.push_back(base_spec(cfg, m, model));
      continue;
    }
    for (double ratio : ratios) {
      MethodSpec s = base_spec(cfg, m, model);
      s.obj_ratio = ratio;
      specs.push_back(s);
      if (m == Method::sta_peak && cfg.z_ablation) {
        s.peak.z_filter = !cfg.peak.z_filter;
        s.label = s.peak.z_filter ? "sta_peak_zfilter" : "sta_peak_nozfilter";
        specs.push_back(s);
      }
    }
  }
  return specs;
}

int run_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  for (double r : cfg.rates) warn_rate(r, cfg.format, err);
  const auto specs = expand_methods(cfg);
  const auto corpus = load_corpus(cfg.inputs[0], cfg.format);

  EvalOptions opts;
  opts.rates = cfg.rates;
  opts.base_seed = cfg.seed;
  opts.theta = cfg.theta;
  opts.repetitions = cfg.repetitions;
  opts.jobs = cfg.jobs;
  const auto rows = cfg.command == Command::bench ? bench(specs, corpus, opts) : evaluate(specs, corpus, opts);

  const std::string summary = emit_summary(rows);
  json meta = json::parse(provenance(cfg));
  meta["note"] = kReportDisclaimer;
  meta["clouds"] = corpus.size();
  io::write_text_atomic(cfg.output, emit_csv(rows));
  io::write_text_atomic(cfg.output + ".summary.txt", summary);
  io::write_text_atomic(cfg.output + ".meta.json", meta.dump(2) + "\n");
  out << summary;

  if (cfg.expectations.empty()) return 0;
  const auto results = check_expectations(rows, io::read_text(cfg.expectations));
  bool violated = false;
  out << "\nexpectations:\n";
  for (const auto& r : results) {
    out << "  " << (r.passed ? "PASS" : "FAIL") << (r.acceptance ? " [acceptance] " : " ") << r.name << ": "
        << r.detail << "\n";
    violated = violated || (r.acceptance && !r.passed);
  }
  return violated ? 3 : 0;
}

int run_synth(const RunConfig& cfg, std::ostream& out) {
  const SynthConfig sc = SynthConfig::preset(cfg.preset);
  write_synth_corpus(cfg.output, sc, cfg.count, cfg.seed, cfg.format, provenance(cfg));
  out << "wrote " << cfg.count << " '" << cfg.preset << "' clouds -> " << cfg.output << "\n";
  return 0;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  switch (cfg.command) {
    case Command::sample: return run_sample(cfg, out, err);
    case Command::train_bayes: return run_train(cfg, out);
    case Command::eval:
    case Command::bench: return run_eval(cfg, out, err);
    case Command::synth: return run_synth(cfg, out);
  }
  return 2;
}

namespace {

struct PeakFlags {
  CLI::Option* config = nullptr;
  CLI::Option* slice_width = nullptr;
  CLI::Option* stride = nullptr;
  CLI::Option* peak_ratio = nullptr;
  CLI::Option* min_count = nullptr;
  CLI::Option* z_bin_width = nullptr;
  CLI::Option* no_z = nullptr;
  std::string config_path;
  PeakConfig values;
};

struct Flags {
  RunConfig cfg;
  std::string format = "kitti4";
  std::string method = "sta_peak";
  std::vector<std::string> methods;
  std::vector<double> grid_bounds;
  std::vector<std::uint32_t> grid_cells;
  PeakFlags peak;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--output,-o", f.cfg.output, "Output path")->required();
  sub->add_option("--format", f.format, "On-disk layout: kitti4 or nuscenes5")->capture_default_str();
  sub->add_option("--seed", f.cfg.seed, "Base seed")->envname("OBJSAMPLE_SEED")->capture_default_str();
  sub->add_option("--jobs,-j", f.cfg.jobs, "Worker threads")->envname("OBJSAMPLE_JOBS")->capture_default_str();
}

void add_sampling(CLI::App* sub, Flags& f) {
  sub->add_option("--obj-ratio", f.cfg.obj_ratio, "Share of the budget for object points")->capture_default_str();
  sub->add_option("--model", f.cfg.model, "Trained Bayes model (sta_bayes)");
  sub->add_option("--threshold", f.cfg.threshold, "Bayes posterior threshold")->capture_default_str();
  sub->add_option("--cell", f.cfg.cell, "grid_fps cell size in meters")->capture_default_str();
  sub->add_option("--leaf-capacity", f.cfg.leaf_capacity, "octree leaf capacity")->capture_default_str();
  auto& p = f.peak;
  p.config = sub->add_option("--peak-config", p.config_path, "Density-peak config file (JSON)");
  p.slice_width = sub->add_option("--slice-width", p.values.slice_width, "Histogram slice width (m)");
  p.stride = sub->add_option("--stride", p.values.stride, "Slices per peak-search window");
  p.peak_ratio = sub->add_option("--peak-ratio", p.values.peak_ratio, "Peak must reach ratio x window mean");
  p.min_count = sub->add_option("--min-count", p.values.min_count, "Minimum points in a peak slice");
  p.z_bin_width = sub->add_option("--z-bin-width", p.values.z_bin_width, "Z filter bin width (m)");
  p.no_z = sub->add_flag("--no-z-filter", "Disable the ground-bin Z filter");
}

void resolve_peak(Flags& f) {
  auto& p = f.peak;
  if (!p.config) return;
  PeakConfig cfg;
  if (p.config->count() > 0) cfg = peak_config_from_json(io::read_text(p.config_path));
  if (p.slice_width->count() > 0) cfg.slice_width = p.values.slice_width;
  if (p.stride->count() > 0) cfg.stride = p.values.stride;
  if (p.peak_ratio->count() > 0) cfg.peak_ratio = p.values.peak_ratio;
  if (p.min_count->count() > 0) cfg.min_count = p.values.min_count;
  if (p.z_bin_width->count() > 0) cfg.z_bin_width = p.values.z_bin_width;
  if (p.no_z->count() > 0) cfg.z_filter = false;
  f.cfg.peak = cfg;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Object-aware point cloud downsampling"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);
  Flags f;

  auto* sample = app.add_subcommand("sample", "Downsample one cloud");
  sample->add_option("input", f.cfg.inputs, "Input cloud")->required();
  add_common(sample, f);
  sample->add_option("--method,-m", f.method, "random, fps, grid_fps, octree, sta_peak or sta_bayes")
      ->capture_default_str();
  sample->add_option("--rate,-r", f.cfg.rate, "Fraction of points kept")->capture_default_str();
  add_sampling(sample, f);

  auto* train = app.add_subcommand("train-bayes", "Train the per-region Bayes model");
  train->add_option("input", f.cfg.inputs, "Corpus directories, or one cloud with --labels")->required();
  add_common(train, f);
  train->add_option("--labels", f.cfg.labels, "Label file for a single input cloud");
  train->add_option("--grid-bounds", f.grid_bounds, "x_min,x_max,y_min,y_max")->delimiter(',')->expected(4);
  train->add_option("--grid-cells", f.grid_cells, "m,n regions")->delimiter(',')->expected(2);
  train->add_option("--buckets", f.cfg.buckets, "Power-of-two density buckets")->capture_default_str();
  train->add_option("--tau", f.cfg.tau, "In-box points needed to label a region positive")->capture_default_str();
  train->add_option("--alpha", f.cfg.alpha, "Laplace smoothing")->capture_default_str();

  CLI::App* evals[2] = {app.add_subcommand("eval", "Retention and recall over a corpus"),
                        app.add_subcommand("bench", "Latency, retention and recall over a corpus")};
  for (auto* sub : evals) {
    sub->add_option("input", f.cfg.inputs, "Corpus directory")->required();
    add_common(sub, f);
    sub->add_option("--methods", f.methods, "Comma-separated methods (default: all runnable)")->delimiter(',');
    sub->add_option("--rates", f.cfg.rates, "Comma-separated rates")->delimiter(',')->capture_default_str();
    sub->add_option("--obj-ratios", f.cfg.obj_ratios, "Object-ratio sweep for sta_* methods")->delimiter(',');
    sub->add_flag("--z-ablation", f.cfg.z_ablation, "Also run sta_peak with the Z filter toggled");
    sub->add_option("--theta", f.cfg.theta, "Selected points for a box to count as recalled")->capture_default_str();
    sub->add_option("--expectations", f.cfg.expectations, "JSON expectations checked against the rows");
    add_sampling(sub, f);
  }
  evals[1]->add_option("--repetitions", f.cfg.repetitions, "Timed passes per cell")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Write a synthetic labeled corpus");
  add_common(synth, f);
  synth->add_option("--preset", f.cfg.preset, "desk, standard or sparse")->capture_default_str();
  synth->add_option("--count", f.cfg.count, "Number of clouds")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    auto& c = f.cfg;
    if (*sample) c.command = Command::sample;
    else if (*train) c.command = Command::train_bayes;
    else if (*evals[0]) c.command = Command::eval;
    else if (*evals[1]) c.command = Command::bench;
    else c.command = Command::synth;

    try {
      c.format = parse_format(f.format);
    } catch (const InvalidConfig& e) {
      throw ConfigError("--format", e.what());
    }
    try {
      c.method = parse_method(f.method);
      for (const auto& m : f.methods) c.methods.push_back(parse_method(m));
    } catch (const InvalidConfig& e) {
      throw ConfigError(c.command == Command::sample ? "--method" : "--methods", e.what());
    }
    if (!f.grid_bounds.empty()) {
      c.grid.x_min = f.grid_bounds[0];
      c.grid.x_max = f.grid_bounds[1];
      c.grid.y_min = f.grid_bounds[2];
      c.grid.y_max = f.grid_bounds[3];
    }
    if (!f.grid_cells.empty()) {
      c.grid.m = f.grid_cells[0];
      c.grid.n = f.grid_cells[1];
    }
    try {
      resolve_peak(f);
    } catch (const Error& e) {
      throw ConfigError("--peak-config", e.what());
    }
    if (c.command == Command::synth) {
      try {
        SynthConfig::preset(c.preset);
      } catch (const InvalidConfig& e) {
        throw ConfigError("--preset", e.what());
      }
    }
    c.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << " [" << e.flag << "]\n";
    return 2;
  }

  try {
    return run(f.cfg, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << " [" << e.flag << "]\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace objsample
