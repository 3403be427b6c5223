#include "stagehand/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stagehand/compositor.hpp"
#include "stagehand/io.hpp"
#include "stagehand/json_codec.hpp"
#include "stagehand/occupancy.hpp"

namespace stagehand {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ParseError(where, where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ParseError(where + "." + key, "unknown config key '" + where + "." + key + "'");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where, where + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where, where + ": expected an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ParseError(where, where + ": expected true or false");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError(where, where + ": expected a string");
  return j.get<std::string>();
}

Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ParseError(where, where + ": expected [x, y, z]");
  return {number(j[0], where + "[0]"), number(j[1], where + "[1]"), number(j[2], where + "[2]")};
}

fs::path existing(const fs::path& base, const std::string& rel, const std::string& where) {
  const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
  if (!fs::exists(p)) throw ValidationError(where + ": file not found: " + p.string());
  return p;
}

std::vector<fs::path> expand_glob(const fs::path& base, const std::string& pattern) {
  const fs::path full = fs::path(pattern).is_absolute() ? fs::path(pattern) : base / pattern;
  const std::string name = full.filename().string();
  const auto star = name.find('*');
  if (name.find('*', star + 1) != std::string::npos)
    throw ValidationError("human_frames: at most one '*' is supported");
  const std::string prefix = name.substr(0, star);
  const std::string suffix = name.substr(star + 1);
  const fs::path dir = full.parent_path();
  if (!fs::is_directory(dir)) throw ValidationError("human_frames: directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string f = entry.path().filename().string();
    if (f.size() >= prefix.size() + suffix.size() && f.starts_with(prefix) && f.ends_with(suffix))
      out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

TrajectorySpec parse_spec(const json& j) {
  reject_unknown(j, "trajectory", {"kind", "frames", "magnitude", "look_at", "base", "intrinsics", "rise", "up"});
  TrajectorySpec spec;
  if (!j.contains("kind")) throw ParseError("trajectory.kind", "trajectory: missing 'kind'");
  const std::string kind = text(j["kind"], "trajectory.kind");
  const auto parsed = parse_trajectory_kind(kind);
  if (!parsed) throw ParseError("trajectory.kind", "trajectory: unknown kind '" + kind + "'");
  spec.kind = *parsed;
  if (!j.contains("intrinsics")) throw ParseError("trajectory.intrinsics", "trajectory: missing 'intrinsics'");
  spec.intrinsics = parse_intrinsics_json(j["intrinsics"], "trajectory.intrinsics");
  if (j.contains("frames")) spec.frames = integer(j["frames"], "trajectory.frames");
  if (j.contains("magnitude")) spec.magnitude = number(j["magnitude"], "trajectory.magnitude");
  if (j.contains("look_at")) spec.look_at = vec3(j["look_at"], "trajectory.look_at");
  if (j.contains("base")) spec.base = parse_pose_json(j["base"], "trajectory.base");
  if (j.contains("rise")) spec.rise = number(j["rise"], "trajectory.rise");
  if (j.contains("up")) spec.up = vec3(j["up"], "trajectory.up");
  spec.validate();
  return spec;
}

class StageClock {
 public:
  explicit StageClock(MetricsReport& report) : report_(report) {}

  template <typename F>
  auto run(const std::string& stage, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    current_ = stage;
    frame_ = -1;
    try {
      if constexpr (std::is_void_v<decltype(body())>) {
        body();
        finish(stage, start);
      } else {
        auto result = body();
        finish(stage, start);
        return result;
      }
    } catch (const StageError&) {
      throw;
    } catch (const ValidationError& e) {
      throw StageError(stage, frame_, e.what(), true);
    } catch (const std::exception& e) {
      throw StageError(stage, frame_, e.what(), false);
    }
  }

  void set_frame(int frame) { frame_ = frame; }

 private:
  void finish(const std::string& stage, std::chrono::steady_clock::time_point start) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    report_.stages.push_back({stage, dt.count()});
  }

  MetricsReport& report_;
  std::string current_;
  int frame_ = -1;
};

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& source, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ParseError("config", std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(j, "config", {"scene", "human_frames", "bbox", "depth", "trajectory", "placement", "occupancy",
                               "render", "postfill", "output_dir", "seed"});
  PipelineConfig cfg;

  if (!j.contains("scene")) throw ParseError("scene", "config: missing 'scene'");
  cfg.scene_path = existing(base_dir, text(j["scene"], "scene"), "scene");

  if (!j.contains("human_frames")) throw ParseError("human_frames", "config: missing 'human_frames'");
  const json& hf = j["human_frames"];
  if (hf.is_string()) {
    const std::string s = hf.get<std::string>();
    if (fs::path(s).filename().string().find('*') != std::string::npos)
      cfg.human_frames = expand_glob(base_dir, s);
    else
      cfg.human_frames.push_back(existing(base_dir, s, "human_frames"));
  } else if (hf.is_array()) {
    for (std::size_t i = 0; i < hf.size(); ++i) {
      const std::string where = "human_frames[" + std::to_string(i) + "]";
      cfg.human_frames.push_back(existing(base_dir, text(hf[i], where), where));
    }
  } else {
    throw ParseError("human_frames", "human_frames: expected a path pattern or a list of paths");
  }
  if (cfg.human_frames.empty()) throw ValidationError("human_frames: no human frames given");

  if (j.contains("bbox")) {
    const json& b = j["bbox"];
    if (b.is_string()) {
      if (b.get<std::string>() != "heuristic")
        throw ParseError("bbox", "bbox: expected \"heuristic\" or {x, y, w, h}");
    } else {
      reject_unknown(b, "bbox", {"x", "y", "w", "h"});
      for (const char* k : {"x", "y", "w", "h"})
        if (!b.contains(k)) throw ParseError(std::string("bbox.") + k, std::string("bbox: missing '") + k + "'");
      cfg.bbox = BBox2D{number(b["x"], "bbox.x"), number(b["y"], "bbox.y"), number(b["w"], "bbox.w"),
                        number(b["h"], "bbox.h")};
    }
  }

  if (j.contains("depth")) cfg.depth_path = existing(base_dir, text(j["depth"], "depth"), "depth");

  if (!j.contains("trajectory")) throw ParseError("trajectory", "config: missing 'trajectory'");
  if (j["trajectory"].is_string())
    cfg.trajectory = existing(base_dir, j["trajectory"].get<std::string>(), "trajectory");
  else
    cfg.trajectory = parse_spec(j["trajectory"]);

  if (j.contains("placement")) {
    const json& p = j["placement"];
    reject_unknown(p, "placement", {"baseline_samples", "smoothing_weight", "smoothing_iterations", "up"});
    if (p.contains("baseline_samples")) cfg.placement.baseline_samples = integer(p["baseline_samples"], "placement.baseline_samples");
    if (p.contains("smoothing_weight")) cfg.placement.smoothing_weight = number(p["smoothing_weight"], "placement.smoothing_weight");
    if (p.contains("smoothing_iterations"))
      cfg.placement.smoothing_iterations = integer(p["smoothing_iterations"], "placement.smoothing_iterations");
    if (p.contains("up")) cfg.placement.up = vec3(p["up"], "placement.up");
  }
  cfg.placement.validate();

  if (j.contains("occupancy")) {
    const json& o = j["occupancy"];
    reject_unknown(o, "occupancy", {"cell_size", "padding", "threshold", "max_voxels"});
    if (o.contains("cell_size")) cfg.occupancy.cell_size = number(o["cell_size"], "occupancy.cell_size");
    if (o.contains("padding")) cfg.occupancy.padding = number(o["padding"], "occupancy.padding");
    if (o.contains("threshold")) cfg.occupancy.threshold = number(o["threshold"], "occupancy.threshold");
    if (o.contains("max_voxels")) {
      if (!o["max_voxels"].is_number_unsigned()) throw ParseError("occupancy.max_voxels", "occupancy.max_voxels: expected a positive integer");
      cfg.occupancy.max_voxels = o["max_voxels"].get<std::size_t>();
    }
  }
  if (!(cfg.occupancy.cell_size > 0.0) || !(cfg.occupancy.padding >= 0.0) || !(cfg.occupancy.threshold > 0.0))
    throw ValidationError("occupancy: cell_size and threshold must be positive, padding non-negative");

  if (j.contains("render")) {
    const json& r = j["render"];
    reject_unknown(r, "render", {"background", "alpha_cutoff", "extent_sigmas", "tile_size", "threads"});
    if (r.contains("background")) cfg.render.background_color = vec3(r["background"], "render.background");
    if (r.contains("alpha_cutoff")) cfg.render.alpha_cutoff = number(r["alpha_cutoff"], "render.alpha_cutoff");
    if (r.contains("extent_sigmas")) cfg.render.gaussian_extent_sigmas = number(r["extent_sigmas"], "render.extent_sigmas");
    if (r.contains("tile_size")) cfg.render.tile_size = integer(r["tile_size"], "render.tile_size");
    if (r.contains("threads")) cfg.render.threads = integer(r["threads"], "render.threads");
  }
  cfg.render.validate();

  if (j.contains("postfill")) {
    const json& p = j["postfill"];
    reject_unknown(p, "postfill", {"contrast_background", "alpha_hole_threshold", "dilation_radius", "inpaint",
                                   "external_command", "lift_to_3d", "lift_stride"});
    if (p.contains("contrast_background")) {
      const json& c = p["contrast_background"];
      if (c.is_string()) {
        if (c.get<std::string>() != "auto")
          throw ParseError("postfill.contrast_background", "postfill.contrast_background: expected \"auto\" or [r, g, b]");
      } else {
        cfg.postfill.contrast_background = vec3(c, "postfill.contrast_background");
      }
    }
    if (p.contains("alpha_hole_threshold"))
      cfg.postfill.alpha_hole_threshold = number(p["alpha_hole_threshold"], "postfill.alpha_hole_threshold");
    if (p.contains("dilation_radius")) cfg.postfill.dilation_radius = integer(p["dilation_radius"], "postfill.dilation_radius");
    if (p.contains("inpaint")) {
      const std::string m = text(p["inpaint"], "postfill.inpaint");
      if (m == "harmonic")
        cfg.postfill.inpaint_method = InpaintMethod::harmonic;
      else if (m == "external")
        cfg.postfill.inpaint_method = InpaintMethod::external;
      else
        throw ParseError("postfill.inpaint", "postfill.inpaint: expected \"harmonic\" or \"external\"");
    }
    if (p.contains("external_command")) cfg.postfill.external_command = text(p["external_command"], "postfill.external_command");
    if (p.contains("lift_to_3d")) cfg.postfill.lift_to_3d = boolean(p["lift_to_3d"], "postfill.lift_to_3d");
    if (p.contains("lift_stride")) cfg.postfill.lift_stride = integer(p["lift_stride"], "postfill.lift_stride");
  }
  cfg.postfill.validate();

  if (j.contains("output_dir")) {
    const fs::path out = text(j["output_dir"], "output_dir");
    cfg.output_dir = out.is_absolute() ? out : base_dir / out;
  } else {
    cfg.output_dir = base_dir / "out";
  }
  if (j.contains("seed")) cfg.seed = integer(j["seed"], "seed");
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return parse_pipeline_config(read_text_file(path), base);
}

std::string format_metrics(const MetricsReport& report) {
  json stages = json::array();
  for (const auto& s : report.stages) stages.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
  const json j = {{"scale", report.scale},
                  {"bbox", {{"x", report.bbox.x}, {"y", report.bbox.y}, {"w", report.bbox.w}, {"h", report.bbox.h}}},
                  {"avatar_pixel_height", report.avatar_pixel_height},
                  {"hole_fraction_before", report.hole_fraction_before},
                  {"hole_fraction_after", report.hole_fraction_after},
                  {"collision_resolutions", report.collision_resolutions},
                  {"stages", stages}};
  return j.dump(2) + "\n";
}

int alpha_row_extent(const ImageBuffer& frame, float threshold) {
  int top = -1;
  int bottom = -1;
  for (int v = 0; v < frame.height; ++v)
    for (int u = 0; u < frame.width; ++u)
      if (frame.alpha[frame.index(u, v)] > threshold) {
        if (top < 0) top = v;
        bottom = v;
        break;
      }
  return top < 0 ? 0 : bottom - top + 1;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  PipelineResult result;
  MetricsReport& metrics = result.metrics;
  StageClock clock(metrics);

  struct Inputs {
    GaussianField scene;
    std::vector<GaussianField> human;
    Trajectory trajectory;
    DepthMap depth;
  };
  Inputs in = clock.run("load", [&] {
    if (cfg.human_frames.empty()) throw ValidationError("no human frames given");
    GaussianField scene = load_ply(cfg.scene_path);
    std::vector<GaussianField> human;
    for (std::size_t i = 0; i < cfg.human_frames.size(); ++i) {
      clock.set_frame(static_cast<int>(i));
      human.push_back(load_ply(cfg.human_frames[i]));
    }
    clock.set_frame(-1);
    Trajectory traj = std::holds_alternative<fs::path>(cfg.trajectory)
                          ? load_trajectory(std::get<fs::path>(cfg.trajectory))
                          : generate(std::get<TrajectorySpec>(cfg.trajectory));
    const Camera& ref = traj[0];
    DepthMap depth = cfg.depth_path ? load_depth(*cfg.depth_path)
                                    : render_depth_map(scene, ref.intrinsics, ref.pose, cfg.render);
    if (depth.width() != ref.intrinsics.width || depth.height() != ref.intrinsics.height)
      throw ValidationError("depth map size does not match the reference camera");
    return Inputs{std::move(scene), std::move(human), std::move(traj), std::move(depth)};
  });
  const Camera& ref = in.trajectory[0];

  metrics.bbox = clock.run("bbox", [&] {
    if (cfg.bbox) {
      cfg.bbox->validate(ref.intrinsics.width, ref.intrinsics.height);
      return *cfg.bbox;
    }
    return heuristic_bbox(ref.intrinsics.width, ref.intrinsics.height, in.depth);
  });

  const OccupancyGrid grid = clock.run("occupancy", [&] {
    return build_grid(in.scene, cfg.occupancy.cell_size, cfg.occupancy.padding, cfg.occupancy.threshold,
                      cfg.occupancy.max_voxels);
  });

  result.placement = clock.run("placement", [&] {
    return place_sequence(in.human, grid, ref.intrinsics, ref.pose, metrics.bbox, in.depth, cfg.placement);
  });
  metrics.scale = result.placement.scale;
  metrics.collision_resolutions = result.placement.resolution_counts;
  {
    const GaussianField placed = transform_human(in.human[0], result.placement.scale,
                                                 result.placement.anchor_points[0], result.placement.roots[0]);
    metrics.avatar_pixel_height = alpha_row_extent(render(placed, ref, cfg.render));
  }

  const std::vector<FusedFrame> fused = clock.run("fuse", [&] {
    std::vector<FusedFrame> out;
    for (std::size_t t = 0; t < in.trajectory.size(); ++t) {
      clock.set_frame(static_cast<int>(t));
      out.push_back(compose_frame(in.scene, in.human, result.placement, static_cast<int>(t)));
    }
    return out;
  });

  PostFillResult filled = clock.run("postfill", [&] {
    return postfill_sequence(fused, in.trajectory, cfg.postfill, cfg.render);
  });
  for (const auto& r : filled.reports) {
    metrics.hole_fraction_before.push_back(r.hole_fraction_before);
    metrics.hole_fraction_after.push_back(r.hole_fraction_after);
  }
  result.frames = std::move(filled.frames);

  clock.run("write", [&] {
    fs::create_directories(cfg.output_dir);
    write_frames(result.frames, cfg.output_dir / "frames");
    if (cfg.write_masks) {
      fs::create_directories(cfg.output_dir / "masks");
      for (std::size_t t = 0; t < filled.masks.size(); ++t) {
        clock.set_frame(static_cast<int>(t));
        std::ostringstream name;
        name << "mask_" << std::setw(4) << std::setfill('0') << t << ".png";
        write_mask(filled.masks[t], cfg.output_dir / "masks" / name.str());
      }
      clock.set_frame(-1);
    }
    write_placement(result.placement, cfg.output_dir / "placement.json");
    write_depth(in.depth, cfg.output_dir / "depth.pfm");
  });

  std::ofstream out(cfg.output_dir / "metrics.json");
  if (!out) throw StageError("write", -1, "cannot write metrics.json", false);
  out << format_metrics(metrics);
  return result;
}

}  // namespace stagehand
