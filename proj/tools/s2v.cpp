// Command-line front end: phantom generation, single registrations and the
// two benchmark protocols.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "s2v/s2v.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%03zu.mhd", t);
  return buf;
}

std::vector<s2v::Volume3> load_frames(const fs::path& dir) {
  std::vector<s2v::Volume3> frames;
  for (std::size_t t = 0; fs::exists(dir / frame_name(t)); ++t)
    frames.push_back(s2v::load_volume(dir / frame_name(t)));
  if (frames.empty()) throw s2v::Error("no frame_000.mhd found in " + dir.string());
  return frames;
}

// Schedule flags shared by register and the bench subcommands.
struct ScheduleFlags {
  std::size_t levels = 4;
  std::size_t kappa = 2;
  std::vector<double> omega_rot, omega_trans, alpha;
  std::vector<std::size_t> max_iters;
  bool desk = false;
  std::size_t threads = 1;

  void add(CLI::App* app) {
    app->add_option("--levels", levels, "Pyramid levels")->check(CLI::PositiveNumber);
    app->add_option("--kappa", kappa, "Quantisation factor (labels = 2*kappa+1)")
        ->check(CLI::PositiveNumber);
    app->add_option("--omega-rot", omega_rot, "Per-level max rotation label (rad), coarse to fine")
        ->delimiter(',');
    app->add_option("--omega-trans", omega_trans, "Per-level max translation label (mm)")
        ->delimiter(',');
    app->add_option("--alpha", alpha, "Per-level omega decay factors")->delimiter(',');
    app->add_option("--max-iters", max_iters, "Per-level discrete iteration budgets")
        ->delimiter(',');
    app->add_flag("--desk", desk, "Use the reduced iteration budgets 50,25,40,100");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  s2v::Schedule build() const {
    s2v::Schedule base = desk ? s2v::Schedule::desk() : s2v::Schedule{};
    s2v::Schedule s = levels <= base.num_levels ? base.with_levels(levels) : base;
    s.num_levels = levels;
    s.kappa = kappa;
    if (!omega_rot.empty()) s.omega_rot = omega_rot;
    if (!omega_trans.empty()) s.omega_trans = omega_trans;
    if (!alpha.empty()) s.alpha = alpha;
    if (!max_iters.empty()) s.max_iters = max_iters;
    s.threads = threads;
    s.validate();
    return s;
  }
};

std::vector<s2v::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<s2v::Method> methods;
  for (const auto& n : names) methods.push_back(s2v::parse_method(n));
  return methods;
}

void put_params(json& j, const std::string& prefix, const s2v::RigidParams& p) {
  const char* names[] = {"rx", "ry", "rz", "tx", "ty", "tz"};
  for (std::size_t i = 0; i < s2v::kNumParams; ++i) j[prefix + names[i]] = p[i];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigid slice-to-volume registration toolkit"};
  app.require_subcommand(1);

  // phantom
  auto* phantom = app.add_subcommand("phantom", "Write a synthetic beating-heart sequence");
  std::string phantom_out;
  s2v::PhantomSpec spec;
  std::vector<std::size_t> dims;
  std::vector<double> spacing;
  phantom->add_option("--out", phantom_out, "Output directory")->required();
  phantom->add_option("--frames", spec.num_frames, "Number of frames")->check(CLI::PositiveNumber);
  phantom->add_option("--dims", dims, "NX,NY,NZ")->delimiter(',')->expected(3);
  phantom->add_option("--spacing", spacing, "SX,SY,SZ in mm")->delimiter(',')->expected(3);
  phantom->add_option("--beat", spec.beat_amplitude, "Fractional radius modulation");
  phantom->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma");
  phantom->add_option("--seed", spec.seed, "Random seed");

  // register
  auto* reg = app.add_subcommand("register", "Register one 2D slice to a volume");
  std::string moving, fixed, method_name = "refined", criterion_name = "ssd", reg_out;
  std::vector<double> init_values;
  std::uint64_t reg_seed = 0;
  ScheduleFlags reg_sched;
  reg->add_option("--moving", moving, "2D slice (.mhd)")->required();
  reg->add_option("--fixed", fixed, "3D volume (.mhd)")->required();
  reg->add_option("--method", method_name, "simplex | discrete | refined")->required();
  reg->add_option("--init", init_values, "RX,RY,RZ,TX,TY,TZ (rad, mm)")->delimiter(',')->expected(6);
  reg->add_option("--criterion", criterion_name, "ssd | sad");
  reg->add_option("--seed", reg_seed, "Accepted for interface symmetry; registration is deterministic");
  reg->add_option("--out", reg_out, "Result JSON")->required();
  reg_sched.add(reg);

  // slice
  auto* slice = app.add_subcommand("slice", "Extract a 2D slice from a volume");
  std::string slice_volume, slice_out;
  std::vector<double> slice_params;
  std::vector<std::size_t> slice_dims;
  std::vector<double> slice_spacing;
  slice->add_option("--volume", slice_volume, "3D volume (.mhd)")->required();
  slice->add_option("--params", slice_params, "RX,RY,RZ,TX,TY,TZ (rad, mm)")
      ->delimiter(',')
      ->expected(6);
  slice->add_option("--dims", slice_dims, "W,H (default: volume in-plane lattice)")
      ->delimiter(',')
      ->expected(2);
  slice->add_option("--spacing", slice_spacing, "SU,SV in mm")->delimiter(',')->expected(2);
  slice->add_option("--out", slice_out, "Output 2D image (.mhd)")->required();

  // benches
  auto* indiv = app.add_subcommand("bench-individual", "Individual-slice protocol");
  auto* temporal = app.add_subcommand("bench-temporal", "Temporal-series protocol");
  std::string phantom_dir, bench_out;
  std::vector<std::string> method_names{"simplex", "discrete", "refined"};
  s2v::BenchConfig bench;
  ScheduleFlags bench_sched;
  double sigma_rot_deg = 3.0;
  for (auto* sub : {indiv, temporal}) {
    sub->add_option("--phantom", phantom_dir, "Directory with frame_%03d.mhd")->required();
    sub->add_option("--out", bench_out, "Results CSV")->required();
    sub->add_option("--methods", method_names, "Comma-separated methods")->delimiter(',');
    sub->add_option("--seed", bench.seed, "Run seed");
    sub->add_option("--criterion", criterion_name, "ssd | sad");
    sub->add_flag("--record-timing", bench.record_timing,
                  "Store wall time (makes the CSV run-dependent)");
    bench_sched.add(sub);
  }
  indiv->add_option("--slices", bench.num_slices, "Number of random slices");
  temporal->add_option("--sigma-rot-deg", sigma_rot_deg, "Per-step rotation noise (degrees)");
  temporal->add_option("--sigma-trans", bench.sigma_trans, "Per-step translation noise (mm)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*phantom) {
      if (!dims.empty()) spec.dims = {dims[0], dims[1], dims[2]};
      if (!spacing.empty()) spec.spacing = {spacing[0], spacing[1], spacing[2]};
      const auto frames = s2v::generate_phantom(spec);
      fs::create_directories(phantom_out);
      for (std::size_t t = 0; t < frames.size(); ++t)
        s2v::save_metaimage(frames[t], fs::path(phantom_out) / frame_name(t));
      std::cout << "wrote " << frames.size() << " frames to " << phantom_out << "\n";
    } else if (*slice) {
      const auto volume = s2v::load_volume(slice_volume);
      auto geom = s2v::SliceGeometry::in_plane(volume);
      if (!slice_dims.empty()) geom.dims = {slice_dims[0], slice_dims[1]};
      if (!slice_spacing.empty()) geom.spacing = {slice_spacing[0], slice_spacing[1]};
      s2v::RigidParams params;
      if (!slice_params.empty()) params = s2v::RigidParams::from(slice_params);
      const auto image = s2v::resample_slice(volume, params, geom);
      s2v::save_metaimage(image, slice_out);
      std::cout << "wrote " << image.valid_count() << " valid pixels to " << slice_out << "\n";
    } else if (*reg) {
      const auto image = s2v::load_image2(moving);
      const auto volume = s2v::load_volume(fixed);
      const auto method = s2v::parse_method(method_name);
      const auto criterion = s2v::parse_criterion(criterion_name);
      const auto schedule = reg_sched.build();
      s2v::RigidParams init;
      if (!init_values.empty()) init = s2v::RigidParams::from(init_values);

      const auto r = s2v::register_slice(method, image, volume, init, schedule, criterion);
      const auto geom = s2v::SliceGeometry::of(image);
      json out;
      out["method"] = std::string(s2v::to_string(method));
      out["criterion"] = std::string(s2v::to_string(criterion));
      put_params(out, "init_", r.init_params);
      put_params(out, "final_", r.final_params);
      out["init_cost"] = r.init_cost;
      out["final_cost"] = r.final_cost;
      out["init_mad"] = s2v::detail::validation_mad(image, s2v::resample_slice(volume, init, geom));
      out["final_mad"] =
          s2v::detail::validation_mad(image, s2v::resample_slice(volume, r.final_params, geom));
      out["cost_evals"] = r.num_cost_evaluations;
      out["wall_time_s"] = r.wall_time;
      json trace = json::array();
      for (const auto& t : r.cost_trace) trace.push_back({t.level, t.iteration, t.cost});
      out["trace"] = trace;
      std::ofstream(reg_out) << out.dump(2) << "\n";
      std::cout << "final cost " << r.final_cost << " after " << r.num_cost_evaluations
                << " evaluations\n";
    } else {
      const auto frames = load_frames(phantom_dir);
      bench.schedule = bench_sched.build();
      bench.threads = bench_sched.threads;
      bench.schedule.threads = 1;
      bench.criterion = s2v::parse_criterion(criterion_name);
      bench.methods = parse_methods(method_names);
      bench.sigma_rot = sigma_rot_deg * std::numbers::pi / 180.0;
      const auto records =
          *indiv ? s2v::run_individual(frames, bench) : s2v::run_temporal(frames, bench);
      s2v::write_csv(records, bench_out);
      std::cout << "wrote " << records.size() << " records to " << bench_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
