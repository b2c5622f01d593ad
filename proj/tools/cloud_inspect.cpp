// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

// cloud-inspect: align, compare and inspect point clouds; generate synthetic
// inspection cases.
//
// Exit codes: 0 pass, 2 input error, 3 non-convergence, 4 defect,
// 5 registration failure.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cloud_inspect/comparison.hpp"
#include "cloud_inspect/parallel.hpp"
#include "cloud_inspect/pipeline.hpp"
#include "cloud_inspect/ply.hpp"
#include "cloud_inspect/report.hpp"
#include "cloud_inspect/scene_config.hpp"
#include "cloud_inspect/synth.hpp"

namespace ci = cloud_inspect;

namespace {

enum ExitCode : int {
  kPass = 0,
  kInputError = 2,
  kNotConverged = 3,
  kDefect = 4,
  kRegistrationFailed = 5,
};

/// Input problem (bad file, bad flag value); maps to exit 2.
struct InputError : ci::Error {
  using ci::Error::Error;
};

struct RegistrationFailure : ci::Error {
  using ci::Error::Error;
};

struct Globals {
  bool json = false;
  bool quiet = false;
  std::optional<unsigned> threads;
  bool timing = false;
};

struct PlyOutput {
  std::string format = "binary";
  std::string precision = "f64";

  void add(CLI::App* cmd) {
    cmd->add_option("--ply-format", format, "PLY encoding of written clouds")
        ->check(CLI::IsMember({"ascii", "binary"}))
        ->capture_default_str();
    cmd->add_option("--ply-precision", precision, "Coordinate type of written clouds")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();
  }

  void write(const std::string& path, const ci::PointCloud& cloud) const {
    ci::write_ply_file(path, cloud,
                       format == "ascii" ? ci::PlyFormat::Ascii : ci::PlyFormat::BinaryLittleEndian,
                       precision == "f32" ? ci::CoordinateKind::F32 : ci::CoordinateKind::F64);
  }
};

struct AlignFlags {
  int max_iterations = 50;
  std::optional<double> tolerance;
  std::string max_correspondence;
  bool no_scale = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--max-iterations", max_iterations, "ICP iteration cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--tolerance", tolerance,
                    "Convergence tolerance on bbox-corner displacement (default 1e-6 x diagonal)");
    cmd->add_option("--max-correspondence", max_correspondence,
                    "Correspondence distance bound, or 'unbounded' (default 5% of diagonal)");
    cmd->add_flag("--no-scale", no_scale, "Rigid registration (scale fixed to 1)");
  }

  ci::AlignSettings settings(unsigned threads) const {
    ci::AlignSettings s;
    s.max_iterations = max_iterations;
    s.tolerance = tolerance;
    if (tolerance && !(*tolerance > 0.0)) throw InputError("--tolerance must be positive");
    if (max_correspondence == "unbounded") {
      s.unbounded = true;
    } else if (!max_correspondence.empty()) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(max_correspondence, &used);
        if (used != max_correspondence.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InputError("--max-correspondence expects a number or 'unbounded'");
      }
      if (!(v > 0.0)) throw InputError("--max-correspondence must be positive");
      s.max_correspondence_distance = v;
    }
    s.with_scaling = !no_scale;
    s.threads = threads;
    return s;
  }
};

struct CompareFlags {
  std::optional<double> threshold;
  std::optional<double> volume_voxel;
  double volume_limit = 0.0;
  std::string palette = "red-green";

  void add(CLI::App* cmd) {
    cmd->add_option("--threshold", threshold,
                    "Match distance (default 3 x median reference spacing)");
    cmd->add_option("--volume-voxel", volume_voxel, "Voxel edge for volumes (default threshold)");
    cmd->add_option("--volume-limit", volume_limit, "Largest unmatched volume still passing")
        ->capture_default_str();
    cmd->add_option("--palette", palette, "Diff colors")
        ->check(CLI::IsMember({"red-green", "pink"}))
        ->capture_default_str();
  }

  ci::CompareSettings settings(unsigned threads) const {
    if (threshold && !(*threshold > 0.0)) throw InputError("threshold must be positive");
    if (volume_voxel && !(*volume_voxel > 0.0)) throw InputError("--volume-voxel must be positive");
    if (!(volume_limit >= 0.0)) throw InputError("--volume-limit must be non-negative");
    ci::CompareSettings s;
    s.threshold = threshold;
    s.voxel_size = volume_voxel;
    s.volume_limit = volume_limit;
    s.palette = palette_value();
    s.threads = threads;
    return s;
  }

  ci::Palette palette_value() const {
    return palette == "pink" ? ci::Palette::Pink : ci::Palette::RedGreen;
  }
};

unsigned thread_count(const Globals& g) {
  if (g.threads) return ci::resolve_threads(*g.threads);
  if (const char* env = std::getenv("CLOUD_INSPECT_THREADS"); env && *env) {
    try {
      std::size_t used = 0;
      const long v = std::stol(env, &used);
      if (used != std::string(env).size() || v < 0) throw std::invalid_argument("bad");
      return ci::resolve_threads(static_cast<unsigned>(v));
    } catch (const std::exception&) {
      throw InputError("CLOUD_INSPECT_THREADS must be a non-negative integer");
    }
  }
  return ci::resolve_threads(0);
}

ci::PlyData load(const std::string& path) {
  try {
    ci::PlyData d = ci::read_ply_file(path);
    ci::validate_cloud(d.cloud);
    return d;
  } catch (const std::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("cannot write '" + path + "'");
}

std::string dump(const ci::Json& j) { return j.dump(2) + "\n"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ci::AlignOutcome run_alignment(const ci::PointCloud& field, const ci::PointCloud& reference,
                               const ci::AlignSettings& s) {
  try {
    return ci::align_clouds(field, reference, s);
  } catch (const ci::CorrespondenceStarvation&) {
    throw RegistrationFailure("registration failed: correspondence starvation");
  } catch (const std::exception& e) {
    throw RegistrationFailure(std::string("registration failed: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

struct AlignCommand {
  std::string reference, field, out;
  AlignFlags align;
  PlyOutput ply;

  void add(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("align", "Register the field cloud onto the reference");
    cmd->add_option("reference", reference, "Reference PLY")->required();
    cmd->add_option("field", field, "Field PLY (moved onto the reference)")->required();
    cmd->add_option("--out", out, "Write the aligned field cloud here");
    align.add(cmd);
    ply.add(cmd);
  }

  int run(const Globals& g) const {
    const auto t0 = std::chrono::steady_clock::now();
    const unsigned threads = thread_count(g);
    const ci::AlignSettings settings = align.settings(threads);
    const ci::PlyData ref = load(reference);
    const ci::PlyData fld = load(field);
    const ci::AlignOutcome a = run_alignment(fld.cloud, ref.cloud, settings);
    if (!out.empty()) ply.write(out, ci::apply(a.icp.transform, fld.cloud));

    if (g.json) {
      ci::Json j;
      j["version"] = ci::kVersion;
      j["command"] = "align";
      j["reference_path"] = reference;
      j["field_path"] = field;
      j["registration"] = ci::registration_json(a);
      if (g.timing) j["timing"] = {{"total_seconds", seconds_since(t0)}};
      std::cout << dump(j);
    } else if (!g.quiet) {
      const auto& t = a.icp.transform;
      std::cout << "scale " << t.scale() << "\n"
                << "rotation\n" << t.rotation() << "\n"
                << "translation " << t.translation().transpose() << "\n"
                << "final_rmse " << a.icp.final_rmse << "\n"
                << "iterations " << a.icp.iterations_run
                << (a.icp.converged ? " (converged)" : " (not converged)") << "\n";
    }
    return a.icp.converged ? kPass : kNotConverged;
  }
};

struct ReportOutput {
  std::string out, report;

  void add(CLI::App* cmd) {
    cmd->add_option("--out", out, "Write the colorized diff cloud here");
    cmd->add_option("--report", report, "Write the JSON report here (default stdout)");
  }

  void emit(const Globals& g, ci::Json j, const ci::CompareOutcome& c, const PlyOutput& ply,
            std::chrono::steady_clock::time_point t0) const {
    if (!out.empty()) ply.write(out, c.diff);
    if (g.timing) j["timing"] = {{"total_seconds", seconds_since(t0)}};
    const std::string text = dump(j);
    if (!report.empty()) write_text(report, text);
    if (report.empty() || g.json) {
      if (!g.quiet || g.json) std::cout << text;
    } else if (!g.quiet) {
      std::cout << ci::to_string(c.verdict) << ": unmatched volume field "
                << c.result.unmatched_volume_field << ", reference "
                << c.result.unmatched_volume_reference << " (threshold " << c.result.threshold
                << ")\n";
    }
  }
};

struct CompareCommand {
  std::string reference, field;
  CompareFlags compare;
  ReportOutput output;
  PlyOutput ply;

  void add(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("compare", "Compare two clouds already in one frame");
    cmd->add_option("reference", reference, "Reference PLY")->required();
    cmd->add_option("field", field, "Field PLY")->required();
    compare.add(cmd);
    output.add(cmd);
    ply.add(cmd);
  }

  int run(const Globals& g) const {
    const auto t0 = std::chrono::steady_clock::now();
    const unsigned threads = thread_count(g);
    const ci::CompareSettings settings = compare.settings(threads);
    const ci::PlyData ref = load(reference);
    const ci::PlyData fld = load(field);
    ci::CompareOutcome c;
    try {
      c = ci::compare_clouds(fld.cloud, ref.cloud, settings);
    } catch (const std::exception& e) {
      throw InputError(std::string("comparison: ") + e.what());
    }
    ci::ReportInputs in;
    in.reference_path = reference;
    in.field_path = field;
    in.reference_points = in.reference_points_used = ref.cloud.size();
    in.field_points = in.field_points_used = fld.cloud.size();
    output.emit(g, ci::inspection_report("compare", in, nullptr, c, settings.palette), c, ply, t0);
    return c.verdict == ci::Verdict::Pass ? kPass : kDefect;
  }
};

struct InspectCommand {
  std::string reference, field, aligned_out;
  AlignFlags align;
  CompareFlags compare;
  ReportOutput output;
  PlyOutput ply;
  bool no_downsample = false;
  std::optional<double> voxel;

  void add(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("inspect", "Downsample, register and compare");
    cmd->add_option("reference", reference, "Reference PLY")->required();
    cmd->add_option("field", field, "Field PLY")->required();
    cmd->add_option("--aligned-out", aligned_out, "Write the aligned field cloud here");
    cmd->add_flag("--no-downsample", no_downsample, "Use every input point");
    cmd->add_option("--voxel", voxel,
                    "Downsampling voxel for both clouds (default: own median spacing above 200k points)");
    align.add(cmd);
    compare.add(cmd);
    output.add(cmd);
    ply.add(cmd);
  }

  int run(const Globals& g) const {
    const auto t0 = std::chrono::steady_clock::now();
    const unsigned threads = thread_count(g);
    ci::InspectSettings s;
    s.align = align.settings(threads);
    s.compare = compare.settings(threads);
    s.downsample = !no_downsample;
    if (voxel && !(*voxel > 0.0)) throw InputError("--voxel must be positive");
    s.voxel = voxel;
    const ci::PlyData ref = load(reference);
    const ci::PlyData fld = load(field);

    ci::InspectOutcome o;
    try {
      o = ci::inspect_clouds(fld.cloud, ref.cloud, s);
    } catch (const ci::StageError& e) {
      if (e.stage() != "registration") throw InputError(e.what());
      const bool starved = e.cause().find("correspondence starvation") != std::string::npos;
      throw RegistrationFailure(std::string("registration failed: ") +
                                (starved ? "correspondence starvation" : e.cause()));
    }
    if (!aligned_out.empty()) ply.write(aligned_out, o.field_aligned);

    ci::ReportInputs in;
    in.reference_path = reference;
    in.field_path = field;
    in.reference_points = ref.cloud.size();
    in.field_points = fld.cloud.size();
    in.reference_points_used = o.reference.size();
    in.field_points_used = o.field.size();
    in.reference_voxel = o.reference_voxel;
    in.field_voxel = o.field_voxel;
    output.emit(g, ci::inspection_report("inspect", in, &o.align, o.compare, s.compare.palette),
                o.compare, ply, t0);
    if (o.compare.verdict == ci::Verdict::Defect) return kDefect;
    return o.align.icp.converged ? kPass : kNotConverged;
  }
};

std::vector<std::size_t> unmatched_indices(const std::vector<ci::MatchLabel>& labels) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == ci::MatchLabel::Unmatched) out.push_back(i);
  return out;
}

std::string preset_list() {
  std::string s;
  for (const auto& n : ci::preset_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

struct SynthCommand {
  std::string preset, config, out_dir, defect = "remove", dump_config;
  std::uint64_t seed = 0;
  std::optional<double> points;
  double rotation_max = 180.0;
  double translation_max = 0.2;
  double scale_min = 0.8;
  double scale_max = 1.25;
  double noise = 0.0;
  bool independent = false;
  PlyOutput ply;
  CLI::Option* defect_opt = nullptr;

  void add(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("synth", "Generate a synthetic reference/field pair");
    cmd->add_option("preset", preset, "Scene preset (" + preset_list() + ")");
    cmd->add_option("--config", config, "Scene config JSON instead of a preset");
    cmd->add_option("--out-dir", out_dir, "Output directory")->required();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    defect_opt = cmd->add_option("--defect", defect, "Preset defect set")
                     ->check(CLI::IsMember({"none", "remove", "move"}))
                     ->capture_default_str();
    cmd->add_option("--points", points, "Approximate points per cloud (preset default 50000)");
    cmd->add_option("--rotation-max", rotation_max, "Perturbation rotation bound, degrees")
        ->capture_default_str();
    cmd->add_option("--translation-max", translation_max,
                    "Perturbation translation bound, fraction of bbox diagonal")
        ->capture_default_str();
    cmd->add_option("--scale-min", scale_min, "Perturbation scale lower bound")
        ->capture_default_str();
    cmd->add_option("--scale-max", scale_max, "Perturbation scale upper bound")
        ->capture_default_str();
    cmd->add_option("--noise", noise, "Gaussian coordinate noise sigma, scene units")
        ->capture_default_str();
    cmd->add_flag("--independent-field", independent,
                  "Sample the field independently of the reference");
    cmd->add_option("--dump-config", dump_config, "Also write the scene as a config file");
    ply.add(cmd);
  }

  int run(const Globals& g) const {
    if (preset.empty() == config.empty())
      throw InputError("give exactly one of a preset name or --config (presets: " +
                       preset_list() + ")");
    ci::SceneConfig cfg;
    std::string source;
    if (!preset.empty()) {
      const auto p = ci::find_preset(preset);
      if (!p) throw InputError("unknown preset '" + preset + "' (available: " + preset_list() + ")");
      cfg.scene = p->scene;
      if (defect == "remove") cfg.defects = p->remove_defects;
      if (defect == "move") cfg.defects = p->move_defects;
      cfg.points = points.value_or(50000.0);
      source = "preset:" + preset;
    } else {
      try {
        cfg = ci::scene_config_from_json(ci::Json::parse(ci::read_file_bytes(config)));
      } catch (const std::exception& e) {
        throw InputError(config + ": " + e.what());
      }
      if (defect_opt->count() > 0 && defect == "none") cfg.defects.clear();
      if (points) cfg.points = points;
      source = "config:" + config;
    }
    if (points && !(*points > 0.0)) throw InputError("--points must be positive");
    cfg.scene.seed = seed;

    ci::CaseOptions opt;
    opt.seed = seed;
    opt.independent_field = independent;
    opt.perturbation = {rotation_max, translation_max, scale_min, scale_max, noise};
    ci::SynthCase c;
    try {
      c = ci::make_case(ci::effective_scene(cfg), cfg.defects, opt);
    } catch (const std::exception& e) {
      throw InputError(std::string("synth: ") + e.what());
    }

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    ply.write((dir / "reference.ply").string(), c.reference);
    ply.write((dir / "field.ply").string(), c.field);

    ci::Json t;
    t["schema"] = "cloud-inspect/truth/1";
    t["version"] = ci::kVersion;
    t["source"] = source;
    t["seed"] = seed;
    t["defect_count"] = cfg.defects.size();
    t["perturbation"] = {{"rotation_max_deg", rotation_max},
                         {"translation_max_frac", translation_max},
                         {"scale_min", scale_min},
                         {"scale_max", scale_max},
                         {"noise_sigma", noise},
                         {"independent_field", independent}};
    t["true_transform"] = ci::transform_json(c.true_transform);
    t["expected_registration"] = ci::transform_json(c.true_transform.inverse());
    t["voxel_size"] = c.voxel_size;
    t["defect_volume"] = c.defect_volume_truth;
    t["reference_points"] = c.reference.size();
    t["field_points"] = c.field.size();
    const auto ref_un = unmatched_indices(c.reference_truth);
    const auto fld_un = unmatched_indices(c.field_truth);
    t["reference_unmatched_count"] = ref_un.size();
    t["field_unmatched_count"] = fld_un.size();
    t["reference_unmatched_indices"] = ref_un;
    t["field_unmatched_indices"] = fld_un;
    write_text((dir / "truth.json").string(), dump(t));
    if (!dump_config.empty()) write_text(dump_config, dump(ci::scene_config_to_json(cfg)));

    if (g.json) {
      std::cout << dump({{"out_dir", out_dir},
                         {"reference_points", c.reference.size()},
                         {"field_points", c.field.size()},
                         {"defect_volume", c.defect_volume_truth}});
    } else if (!g.quiet) {
      std::cout << "wrote " << c.reference.size() << " reference and " << c.field.size()
                << " field points to " << out_dir << "\n";
    }
    return kPass;
  }
};

struct InfoCommand {
  std::string path;

  void add(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("info", "Describe a PLY file");
    cmd->add_option("path", path, "PLY file")->required();
  }

  int run(const Globals& g) const {
    const unsigned threads = thread_count(g);
    const ci::PlyData d = load(path);
    const ci::Aabb box = ci::bounding_box(d.cloud);
    ci::Json j;
    j["path"] = path;
    j["format"] = ci::to_string(d.header.format);
    j["points"] = d.cloud.size();
    j["has_color"] = d.cloud.has_colors();
    j["bbox"] = {{"min", ci::point_json(box.min)}, {"max", ci::point_json(box.max)}};
    try {
      j["median_spacing"] = ci::median_spacing(d.cloud, threads);
    } catch (const ci::Error& e) {
      j["median_spacing"] = nullptr;
      j["spacing_error"] = e.what();
    }
    ci::Json props = ci::Json::array();
    for (const auto& p : d.header.property_order) props.push_back(p.name);
    j["property_order"] = props;
    std::cout << dump(j);
    return kPass;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud registration and change inspection", "cloud-inspect"};
  app.set_version_flag("--version", std::string(ci::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  unsigned threads = 0;
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_flag("--quiet", g.quiet, "Suppress human-readable output");
  CLI::Option* threads_opt =
      app.add_option("--threads", threads, "Worker threads (0 = auto; env CLOUD_INSPECT_THREADS)");
  app.add_flag("--timing", g.timing, "Add wall-clock timing to reports");

  AlignCommand align;
  CompareCommand compare;
  InspectCommand inspect;
  SynthCommand synth;
  InfoCommand info;
  align.add(app);
  compare.add(app);
  inspect.add(app);
  synth.add(app);
  info.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kInputError;
  }
  if (threads_opt->count() > 0) g.threads = threads;

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "align") return align.run(g);
    if (name == "compare") return compare.run(g);
    if (name == "inspect") return inspect.run(g);
    if (name == "synth") return synth.run(g);
    return info.run(g);
  } catch (const RegistrationFailure& e) {
    std::cerr << "cloud-inspect: " << e.what() << "\n";
    return kRegistrationFailed;
  } catch (const std::exception& e) {
    std::cerr << "cloud-inspect: error: " << e.what() << "\n";
    return kInputError;
  }
}
