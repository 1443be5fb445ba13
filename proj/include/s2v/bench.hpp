#pragma once

// Benchmark protocols on phantom sequences: independent slices registered from
// perturbed starts ("individual") and a chained series where each solution
// initialises the next slice ("temporal"). Both emit one CaseRecord per
// (case, method).

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "s2v/error.hpp"
#include "s2v/image.hpp"
#include "s2v/matching.hpp"
#include "s2v/parallel.hpp"
#include "s2v/pyramid.hpp"
#include "s2v/random.hpp"
#include "s2v/registration.hpp"
#include "s2v/rigid.hpp"

namespace s2v {

struct CaseRecord {
  std::size_t case_id = 0;
  Method method = Method::discrete;
  std::size_t bucket = 0;
  std::uint64_t seed = 0;
  RigidParams gt_params;
  RigidParams init_params;
  RigidParams final_params;
  double init_mad = 0.0;
  double final_mad = 0.0;
  std::array<double, kNumParams> error{};
  std::size_t cost_evals = 0;
  double wall_time = 0.0;
  // Not part of the CSV.
  double init_cost = 0.0;
  double final_cost = 0.0;

  double rot_error_mean() const { return (error[kRx] + error[kRy] + error[kRz]) / 3.0; }
  double trans_error_mean() const { return (error[kTx] + error[kTy] + error[kTz]) / 3.0; }
};

/// A perturbation bucket: rotation and translation magnitude ranges drawn
/// together.
struct Bucket {
  Range rot;
  Range trans;
};

inline std::vector<Bucket> default_buckets() {
  return {{{0.1, 0.2}, {5.0, 12.0}}, {{0.2, 0.3}, {12.0, 18.0}}, {{0.3, 0.4}, {18.0, 25.0}}};
}

struct BenchConfig {
  Schedule schedule;
  Criterion criterion = Criterion::ssd;
  std::vector<Method> methods{Method::simplex, Method::discrete, Method::refined};
  std::uint64_t seed = 0;
  /// Case-level workers (0 = hardware concurrency).
  std::size_t threads = 1;
  /// Store measured wall time; off keeps the CSV byte-reproducible.
  bool record_timing = false;
  /// Extracted slice lattice; empty dims means the volume's in-plane lattice.
  SliceGeometry geometry{{0, 0}, {1.0, 1.0}};
  /// Ground-truth sampling half-widths around the volume centre.
  double gt_rot_bound = 0.4;
  double gt_trans_bound = 12.0;

  // individual protocol
  std::size_t num_slices = 100;
  std::vector<Bucket> buckets = default_buckets();

  // temporal protocol
  double sigma_rot = 3.0 * std::numbers::pi / 180.0;
  double sigma_trans = 5.0;
  /// Chain length; 0 means one slice per frame.
  std::size_t num_temporal_slices = 0;
};

namespace detail {

inline SliceGeometry bench_geometry(const BenchConfig& cfg, const Volume3& vol) {
  if (cfg.geometry.dims[0] > 0 && cfg.geometry.dims[1] > 0) return cfg.geometry;
  return SliceGeometry::in_plane(vol);
}

inline RigidParams sample_ground_truth(const BenchConfig& cfg, Rng& rng) {
  RigidParams p;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const double bound = i < kTx ? cfg.gt_rot_bound : cfg.gt_trans_bound;
    p[i] = uniform(rng, -bound, bound);
  }
  return p;
}

// MAD over jointly valid pixels; with no overlap at all, over every pixel
// with invalid samples at their zero value.
inline double validation_mad(const ImageGrid2& image, const ImageGrid2& slice) {
  for (std::size_t i = 0; i < image.size(); ++i)
    if (image.validity()[i] && slice.validity()[i]) return mad(image, slice);
  double sum = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i)
    sum += std::abs(image.data()[i] - slice.data()[i]);
  return sum / static_cast<double>(image.size());
}

inline CaseRecord make_record(const RegistrationResult& r, const ImageGrid2& image,
                              const Volume3& reference, const SliceGeometry& geom,
                              const RigidParams& gt, bool record_timing) {
  CaseRecord rec;
  rec.method = r.method;
  rec.gt_params = gt;
  rec.init_params = r.init_params;
  rec.final_params = r.final_params;
  rec.init_mad = validation_mad(image, resample_slice(reference, r.init_params, geom));
  rec.final_mad = validation_mad(image, resample_slice(reference, r.final_params, geom));
  rec.error = param_error(r.final_params, gt);
  rec.cost_evals = r.num_cost_evaluations;
  rec.wall_time = record_timing ? r.wall_time : 0.0;
  rec.init_cost = r.init_cost;
  rec.final_cost = r.final_cost;
  return rec;
}

inline void sort_records(std::vector<CaseRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const CaseRecord& a, const CaseRecord& b) {
    return std::make_tuple(a.case_id, to_string(a.method)) <
           std::make_tuple(b.case_id, to_string(b.method));
  });
}

inline bool wants(const BenchConfig& cfg, Method m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

inline constexpr std::uint64_t kSliceStream = 0x534C494345ULL;
inline constexpr std::uint64_t kBucketStream = 0x4255434B4554ULL;
inline constexpr std::uint64_t kChainStream = 0x434841494EULL;

}  // namespace detail

/// One (slice, bucket) case of the individual protocol, run for every
/// configured method. Depends only on (cfg.seed, slice, bucket), so a case
/// re-run in isolation reproduces its records.
inline std::vector<CaseRecord> run_individual_case(const std::vector<Volume3>& frames,
                                                   const Pyramid<Volume3>& reference,
                                                   const BenchConfig& cfg, std::size_t slice,
                                                   std::size_t bucket) {
  require(!frames.empty(), "no phantom frames");
  require(bucket < cfg.buckets.size(), "bucket index out of range");
  const SliceGeometry geom = detail::bench_geometry(cfg, frames.front());

  Rng slice_rng(substream_seed(cfg.seed, {detail::kSliceStream, slice}));
  const RigidParams gt = detail::sample_ground_truth(cfg, slice_rng);
  const auto frame = static_cast<std::size_t>(uniform01(slice_rng) * static_cast<double>(frames.size()));
  const ImageGrid2 image = resample_slice(frames[std::min(frame, frames.size() - 1)], gt, geom);

  const std::uint64_t case_seed = substream_seed(cfg.seed, {detail::kBucketStream, slice, bucket});
  Rng case_rng(case_seed);
  const RigidParams init =
      perturb_params(gt, cfg.buckets[bucket].rot, cfg.buckets[bucket].trans, case_rng);

  const auto images = build_pyramid(image, cfg.schedule.num_levels);
  std::vector<CaseRecord> records;
  auto emit = [&](const RegistrationResult& r) {
    CaseRecord rec = detail::make_record(r, image, reference.finest(), geom, gt, cfg.record_timing);
    rec.case_id = slice * cfg.buckets.size() + bucket;
    rec.bucket = bucket;
    rec.seed = case_seed;
    records.push_back(rec);
  };

  if (detail::wants(cfg, Method::simplex))
    emit(register_slice(Method::simplex, images, reference, init, cfg.schedule, cfg.criterion));
  if (detail::wants(cfg, Method::discrete) || detail::wants(cfg, Method::refined)) {
    const auto discrete =
        register_slice(Method::discrete, images, reference, init, cfg.schedule, cfg.criterion);
    if (detail::wants(cfg, Method::discrete)) emit(discrete);
    if (detail::wants(cfg, Method::refined))
      emit(refine_discrete(discrete, images, reference, cfg.schedule, cfg.criterion));
  }
  return records;
}

/// Individual protocol: num_slices random slices from random frames, each
/// registered to frame 0 from one perturbed start per bucket.
inline std::vector<CaseRecord> run_individual(const std::vector<Volume3>& frames,
                                              const BenchConfig& cfg) {
  require(!frames.empty(), "no phantom frames");
  cfg.schedule.validate();
  const auto reference = build_pyramid(frames.front(), cfg.schedule.num_levels);
  const std::size_t n_cases = cfg.num_slices * cfg.buckets.size();
  std::vector<std::vector<CaseRecord>> per_case(n_cases);
  parallel_for(n_cases, cfg.threads, [&](std::size_t c, std::size_t) {
    per_case[c] = run_individual_case(frames, reference, cfg, c / cfg.buckets.size(),
                                      c % cfg.buckets.size());
  });
  std::vector<CaseRecord> records;
  for (auto& v : per_case) records.insert(records.end(), v.begin(), v.end());
  detail::sort_records(records);
  return records;
}

/// Ground truth of the temporal chain: a random start followed by Gaussian
/// steps. Steps leaving the sampling bounds are redrawn (up to 100 times,
/// then clamped) so the chain stays inside the thin volume.
inline std::vector<RigidParams> temporal_ground_truth(const BenchConfig& cfg, std::size_t n) {
  Rng rng(substream_seed(cfg.seed, {detail::kChainStream, 0}));
  std::vector<RigidParams> chain;
  chain.push_back(detail::sample_ground_truth(cfg, rng));
  while (chain.size() < n) {
    RigidParams next = chain.back();
    for (std::size_t i = 0; i < kNumParams; ++i) {
      const double sigma = i < kTx ? cfg.sigma_rot : cfg.sigma_trans;
      const double bound = i < kTx ? cfg.gt_rot_bound : cfg.gt_trans_bound;
      double v = chain.back()[i] + normal(rng, 0.0, sigma);
      for (int tries = 0; std::abs(v) > bound && tries < 100; ++tries)
        v = chain.back()[i] + normal(rng, 0.0, sigma);
      next[i] = std::clamp(v, -bound, bound);
    }
    chain.push_back(next);
  }
  return chain;
}

/// Temporal protocol: slice i is cut from frame i at the chained ground truth
/// and registered to frame 0, initialised with the method's solution for
/// slice i-1 (slice 0: ground truth plus the same Gaussian noise).
inline std::vector<CaseRecord> run_temporal(const std::vector<Volume3>& frames,
                                            const BenchConfig& cfg) {
  require(frames.size() >= 2, "temporal protocol needs at least two frames");
  cfg.schedule.validate();
  const std::size_t n = cfg.num_temporal_slices ? cfg.num_temporal_slices : frames.size();
  const SliceGeometry geom = detail::bench_geometry(cfg, frames.front());
  const auto reference = build_pyramid(frames.front(), cfg.schedule.num_levels);
  const auto gt = temporal_ground_truth(cfg, n);

  std::vector<ImageGrid2> images;
  std::vector<Pyramid<ImageGrid2>> pyramids;
  for (std::size_t i = 0; i < n; ++i) {
    images.push_back(resample_slice(frames[i % frames.size()], gt[i], geom));
    pyramids.push_back(build_pyramid(images.back(), cfg.schedule.num_levels));
  }

  const std::uint64_t init_seed = substream_seed(cfg.seed, {detail::kChainStream, 1});
  Rng init_rng(init_seed);
  RigidParams init0 = gt[0];
  for (std::size_t i = 0; i < kNumParams; ++i)
    init0[i] += normal(init_rng, 0.0, i < kTx ? cfg.sigma_rot : cfg.sigma_trans);

  std::vector<std::vector<CaseRecord>> per_method(cfg.methods.size());
  parallel_for(cfg.methods.size(), cfg.threads, [&](std::size_t m, std::size_t) {
    RigidParams init = init0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r =
          register_slice(cfg.methods[m], pyramids[i], reference, init, cfg.schedule, cfg.criterion);
      CaseRecord rec =
          detail::make_record(r, images[i], reference.finest(), geom, gt[i], cfg.record_timing);
      rec.case_id = i;
      rec.bucket = 0;
      rec.seed = init_seed;
      per_method[m].push_back(rec);
      init = r.final_params;
    }
  });
  std::vector<CaseRecord> records;
  for (auto& v : per_method) records.insert(records.end(), v.begin(), v.end());
  detail::sort_records(records);
  return records;
}

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c{"case_id", "method", "bucket", "seed"};
    const char* names[] = {"rx", "ry", "rz", "tx", "ty", "tz"};
    for (const char* prefix : {"gt_", "init_", "final_"})
      for (const char* n : names) c.push_back(std::string(prefix) + n);
    c.push_back("init_mad");
    c.push_back("final_mad");
    for (const char* n : names) c.push_back(std::string("err_") + n);
    c.push_back("cost_evals");
    c.push_back("wall_time_s");
    return c;
  }();
  return columns;
}

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
T parse_number(const std::string& field) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw Error("malformed CSV field '" + field + "'");
  return value;
}

}  // namespace detail

inline std::string to_csv(const std::vector<CaseRecord>& records) {
  std::ostringstream out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : records) {
    out << r.case_id << ',' << to_string(r.method) << ',' << r.bucket << ',' << r.seed;
    for (const RigidParams* p : {&r.gt_params, &r.init_params, &r.final_params})
      for (double v : p->values) out << ',' << detail::format_number(v);
    out << ',' << detail::format_number(r.init_mad) << ',' << detail::format_number(r.final_mad);
    for (double e : r.error) out << ',' << detail::format_number(e);
    out << ',' << r.cost_evals << ',' << detail::format_number(r.wall_time) << '\n';
  }
  return out.str();
}

inline void write_csv(const std::vector<CaseRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << to_csv(records);
  if (!out) throw Error("failed writing " + path.string());
}

/// Parses a file written by write_csv. Fields not stored in the CSV
/// (init_cost, final_cost) are left at zero.
inline std::vector<CaseRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV " + path.string());
  std::vector<CaseRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    require(f.size() == csv_columns().size(), "CSV row has wrong number of fields");
    CaseRecord r;
    std::size_t k = 0;
    r.case_id = detail::parse_number<std::size_t>(f[k++]);
    r.method = parse_method(f[k++]);
    r.bucket = detail::parse_number<std::size_t>(f[k++]);
    r.seed = detail::parse_number<std::uint64_t>(f[k++]);
    for (RigidParams* p : {&r.gt_params, &r.init_params, &r.final_params})
      for (double& v : p->values) v = detail::parse_number<double>(f[k++]);
    r.init_mad = detail::parse_number<double>(f[k++]);
    r.final_mad = detail::parse_number<double>(f[k++]);
    for (double& e : r.error) e = detail::parse_number<double>(f[k++]);
    r.cost_evals = detail::parse_number<std::size_t>(f[k++]);
    r.wall_time = detail::parse_number<double>(f[k++]);
    records.push_back(r);
  }
  return records;
}

}  // namespace s2v
