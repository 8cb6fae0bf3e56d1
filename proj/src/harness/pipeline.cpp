#include "nbv/harness/pipeline.hpp"

#include "nbv/core/binary_io.hpp"
#include "nbv/core/error.hpp"
#include "nbv/core/parallel.hpp"
#include "nbv/core/random.hpp"
#include "nbv/geom/io.hpp"
#include "nbv/scenes/catalog.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#ifndef NBV_VERSION
#define NBV_VERSION "dev"
#endif

namespace nbv::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return NBV_VERSION; }

std::string SceneSpec::tag() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu_%s", split == Split::train ? "train" : "eval", index,
                std::string(scenes::to_string(category)).c_str());
  return buf;
}

std::vector<SceneSpec> scene_specs(const ExperimentConfig& cfg, Split split) {
  const SceneSet& set = split == Split::train ? cfg.train_scenes : cfg.eval_scenes;
  const char* name = split == Split::train ? "scene-train" : "scene-eval";
  std::vector<SceneSpec> out;
  for (std::size_t i = 0; i < set.count; ++i) {
    out.push_back({split, i, set.categories[i % set.categories.size()], derive_seed(cfg.seed, name, i)});
  }
  return out;
}

std::unique_ptr<policy::SceneContext> build_context(const ExperimentConfig& cfg, const SceneSpec& spec) {
  auto mesh = scenes::generate_scene(spec.category, spec.seed, cfg.scene_size);
  auto gt = scenes::sample_gt_cloud(mesh, cfg.recon.gt_points, derive_seed(spec.seed, "gt-samples"));
  const double half = 0.5 * mesh.bounds.diagonal();
  const auto& f = cfg.catalog.radius_factors;
  auto catalog = scenes::sample_view_catalog(mesh.bounds.center(), {f[0] * half, f[1] * half, f[2] * half},
                                             cfg.catalog.per_shell, cfg.catalog.resolution, cfg.catalog.resolution,
                                             cfg.catalog.fov_deg);
  return std::make_unique<policy::SceneContext>(std::move(mesh), std::move(catalog), std::move(gt), cfg.recon);
}

std::uint64_t label_init_seed(const ExperimentConfig& cfg, std::size_t scene_index) {
  return derive_seed(cfg.seed, "label-init", scene_index);
}

std::uint64_t rollout_seed(const ExperimentConfig& cfg, std::size_t scene_index, std::size_t repeat) {
  return derive_seed(cfg.seed, "rollout-init", scene_index * 1000 + repeat);
}

// --- labels ---------------------------------------------------------------

std::vector<LabelRecord> label_scene(const policy::SceneContext& ctx, const ExperimentConfig& cfg,
                                     std::uint32_t scene_index) {
  const auto profile = cfg.vin_profile();
  policy::FitnessCriterion oracle{policy::CriterionKind::oracle_rri, nullptr, 0};
  auto state = policy::init_state(ctx, label_init_seed(cfg, scene_index));
  std::vector<LabelRecord> out;
  for (int stage = 2; stage <= cfg.max_stage; ++stage) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < ctx.catalog().size(); ++i) {
      if (!state.is_visited(i)) candidates.push_back(i);
    }
    if (candidates.empty()) break;
    const auto rri = policy::score_candidates(state, ctx, candidates, oracle, state.stage());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      LabelRecord r;
      r.scene = scene_index;
      r.stage = static_cast<std::uint32_t>(stage);
      r.view = static_cast<std::int32_t>(candidates[i]);
      r.rri = rri[i];
      r.bundle = features::make_bundle(state, ctx.catalog().views[candidates[i]], profile.grid_res,
                                       cfg.recon.splat_radius_128);
      out.push_back(std::move(r));
    }
    if (stage < cfg.max_stage) policy::capture_view(state, ctx, *policy::argmax_candidate(candidates, rri),
                                                    policy::kDefaultSpeed);
  }
  return out;
}

namespace {
constexpr std::uint32_t kDatasetVersion = 1;

void put_floats(std::ostream& out, const std::vector<float>& v) {
  for (float x : v) io::put<float>(out, x);
}

std::vector<float> get_floats(std::istream& in, std::size_t n) {
  std::vector<float> v(n);
  for (auto& x : v) x = io::get<float>(in);
  return v;
}
}  // namespace

void write_records(const fs::path& path, const std::vector<LabelRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  io::put_magic(out, "NBVD");
  io::put<std::uint32_t>(out, kDatasetVersion);
  io::put<std::uint64_t>(out, records.size());
  for (const auto& r : records) {
    io::put<std::uint32_t>(out, r.scene);
    io::put<std::uint32_t>(out, r.stage);
    io::put<std::int32_t>(out, r.view);
    io::put<double>(out, r.rri);
    const auto& b = r.bundle;
    io::put<std::uint32_t>(out, static_cast<std::uint32_t>(b.pooled_size));
    io::put<std::uint32_t>(out, b.inside);
    io::put<std::uint32_t>(out, b.outside);
    io::put<std::uint32_t>(out, b.f_base);
    io::put<std::uint32_t>(out, b.total_pixels);
    put_floats(out, b.f_p);
    put_floats(out, b.f_v);
  }
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path.string());
}

std::vector<LabelRecord> read_records(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "missing label dataset " + path.string());
  try {
    io::expect_magic(in, "NBVD", path.string());
    require(io::get<std::uint32_t>(in) == kDatasetVersion, ErrorKind::io, "unsupported dataset version");
    const auto n = io::get<std::uint64_t>(in);
    std::vector<LabelRecord> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::uint64_t i = 0; i < n; ++i) {
      LabelRecord r;
      r.scene = io::get<std::uint32_t>(in);
      r.stage = io::get<std::uint32_t>(in);
      r.view = io::get<std::int32_t>(in);
      r.rri = io::get<double>(in);
      auto& b = r.bundle;
      b.pooled_size = static_cast<int>(io::get<std::uint32_t>(in));
      require(b.pooled_size > 0 && b.pooled_size <= 4096, ErrorKind::io, "bad bundle size");
      b.inside = io::get<std::uint32_t>(in);
      b.outside = io::get<std::uint32_t>(in);
      b.f_base = io::get<std::uint32_t>(in);
      b.total_pixels = io::get<std::uint32_t>(in);
      const std::size_t cells = static_cast<std::size_t>(b.pooled_size) * b.pooled_size * features::kChannels;
      b.f_p = get_floats(in, cells);
      b.f_v = get_floats(in, cells);
      out.push_back(std::move(r));
    }
    return out;
  } catch (const Error& e) {
    fail(ErrorKind::io, path.string() + ": " + e.what());
  }
}

std::vector<vin::TrainingSample> to_training_samples(std::vector<LabelRecord> records) {
  std::vector<vin::StageRri> raw;
  raw.reserve(records.size());
  for (const auto& r : records) raw.push_back({static_cast<int>(r.stage), r.rri});
  const auto labels = vin::make_labels(raw);
  std::vector<vin::TrainingSample> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    vin::TrainingSample s;
    s.bundle = std::move(records[i].bundle);
    s.label = labels[i];
    s.stage = static_cast<int>(records[i].stage);
    s.raw_rri = records[i].rri;
    s.group = (static_cast<std::uint64_t>(records[i].scene) << 16) | records[i].stage;
    out.push_back(std::move(s));
  }
  return out;
}

// --- aggregation ----------------------------------------------------------

std::vector<AggregateRow> aggregate(const std::string& criterion, const std::vector<policy::RolloutRecord>& records) {
  std::map<std::size_t, AggregateRow> rows;
  for (const auto& rec : records) {
    for (const auto& s : rec.steps) {
      auto& row = rows[s.step];
      row.criterion = criterion;
      row.step = s.step;
      ++row.n_scenes;
      row.mean_cd_cm += s.cd_cm;
      row.mean_coverage_pct += s.coverage_pct;
      row.mean_f1 += s.f1;
      row.mean_path_m += s.path_m;
    }
  }
  std::vector<AggregateRow> out;
  for (auto& [step, row] : rows) {
    const double n = static_cast<double>(row.n_scenes);
    row.mean_cd_cm /= n;
    row.mean_coverage_pct /= n;
    row.mean_f1 /= n;
    row.mean_path_m /= n;
    out.push_back(row);
  }
  return out;
}

// --- csv ------------------------------------------------------------------

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  fail(ErrorKind::io, "csv has no column " + name);
}

const std::string& CsvTable::text(std::size_t row, const std::string& name) const {
  const auto c = column(name);
  require(row < rows.size() && c < rows[row].size(), ErrorKind::io, "csv row too short");
  return rows[row][c];
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const auto& t = text(row, name);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  require(end != t.c_str() && *end == '\0', ErrorKind::io, "csv field '" + t + "' is not a number");
  return v;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot read " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!l.empty() && l.back() == ',') f.emplace_back();
    return f;
  };
  if (std::getline(in, line)) t.header = split(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split(line));
  }
  return t;
}

// --- commands -------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Manifest {
  std::string command;
  json scenes = json::array();
  json files = json::array();
  json timings = json::object();

  void add_file(const fs::path& root, const fs::path& p) { files.push_back(fs::relative(p, root).generic_string()); }

  void write(const ExperimentConfig& cfg, const fs::path& root) const {
    for (const auto& f : files) {
      require(fs::exists(root / f.get<std::string>()), ErrorKind::io, "manifest references missing file " +
                                                                          f.get<std::string>());
    }
    json j;
    j["command"] = command;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash()));
    j["config_hash"] = hash;
    j["config"] = json::parse(cfg.canonical_json());
    j["code_version"] = code_version();
    j["scenes"] = scenes;
    j["files"] = files;
    j["timings_s"] = timings;
    std::ofstream out(root / ("manifest_" + command + ".json"));
    require(static_cast<bool>(out), ErrorKind::io, "cannot write manifest in " + root.string());
    out << j.dump(2) << '\n';
  }
};

void log(const RunOptions& opt, const std::string& msg) {
  if (!opt.quiet) std::cerr << msg << '\n';
}

void make_dirs(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  require(!ec, ErrorKind::io, "cannot create directory " + p.string() + ": " + ec.message());
}

std::string fmt17(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

void cmd_gen_scenes(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto t0 = Clock::now();
  const Paths paths{cfg.output_dir};
  make_dirs(paths.scenes());
  Manifest m;
  m.command = "gen-scenes";
  std::vector<SceneSpec> specs = scene_specs(cfg, Split::train);
  for (const auto& s : scene_specs(cfg, Split::eval)) specs.push_back(s);
  std::vector<std::size_t> tri_counts(specs.size());
  parallel_for(specs.size(), opt.workers, [&](std::size_t i) {
    const auto ctx = build_context(cfg, specs[i]);
    scenes::write_obj(paths.scenes() / (specs[i].tag() + ".obj"), ctx->mesh());
    geom::write_ply(paths.scenes() / (specs[i].tag() + "_gt.ply"), ctx->gt());
    tri_counts[i] = ctx->mesh().triangles.size();
  });
  std::ofstream csv(paths.scenes() / "scenes.csv");
  require(static_cast<bool>(csv), ErrorKind::io, "cannot write scenes.csv");
  csv << "split,index,category,seed,triangles\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    csv << (s.split == Split::train ? "train" : "eval") << ',' << s.index << ',' << scenes::to_string(s.category)
        << ',' << s.seed << ',' << tri_counts[i] << '\n';
    m.scenes.push_back({{"tag", s.tag()}, {"seed", s.seed}, {"category", std::string(scenes::to_string(s.category))}});
    m.add_file(cfg.output_dir, paths.scenes() / (s.tag() + ".obj"));
    m.add_file(cfg.output_dir, paths.scenes() / (s.tag() + "_gt.ply"));
  }
  csv.close();
  m.add_file(cfg.output_dir, paths.scenes() / "scenes.csv");
  m.timings["total"] = seconds_since(t0);
  m.write(cfg, cfg.output_dir);
  log(opt, "generated " + std::to_string(specs.size()) + " scenes");
}

void cmd_gen_labels(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto t0 = Clock::now();
  const Paths paths{cfg.output_dir};
  make_dirs(paths.labels());
  const auto specs = scene_specs(cfg, Split::train);
  std::vector<double> scene_time(specs.size());
  parallel_for(specs.size(), opt.workers, [&](std::size_t i) {
    const auto ts = Clock::now();
    const auto ctx = build_context(cfg, specs[i]);
    const auto records = label_scene(*ctx, cfg, static_cast<std::uint32_t>(i));
    write_records(paths.labels() / (specs[i].tag() + ".bin"), records);
    scene_time[i] = seconds_since(ts);
    log(opt, "labelled " + specs[i].tag() + ": " + std::to_string(records.size()) + " records");
  });

  // Merge per-scene files in scene order.
  std::vector<LabelRecord> all;
  Manifest m;
  m.command = "gen-labels";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto part = paths.labels() / (specs[i].tag() + ".bin");
    auto recs = read_records(part);
    fs::remove(part);
    m.scenes.push_back({{"tag", specs[i].tag()}, {"seed", specs[i].seed}, {"records", recs.size()}});
    m.timings[specs[i].tag()] = scene_time[i];
    for (auto& r : recs) all.push_back(std::move(r));
  }
  write_records(paths.dataset(), all);
  std::ofstream csv(paths.labels() / "records.csv");
  require(static_cast<bool>(csv), ErrorKind::io, "cannot write records.csv");
  csv << "scene,stage,view,rri,inside,outside,f_base\n";
  for (const auto& r : all) {
    csv << r.scene << ',' << r.stage << ',' << r.view << ',' << fmt17(r.rri) << ',' << r.bundle.inside << ','
        << r.bundle.outside << ',' << r.bundle.f_base << '\n';
  }
  csv.close();
  m.add_file(cfg.output_dir, paths.dataset());
  m.add_file(cfg.output_dir, paths.labels() / "records.csv");
  m.timings["total"] = seconds_since(t0);
  m.write(cfg, cfg.output_dir);
  log(opt, "wrote " + std::to_string(all.size()) + " label records");
}

void cmd_train(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto t0 = Clock::now();
  const Paths paths{cfg.output_dir};
  require(fs::exists(paths.dataset()), ErrorKind::io,
          "label dataset " + paths.dataset().string() + " not found; run gen-labels first");
  const auto samples = to_training_samples(read_records(paths.dataset()));
  make_dirs(paths.model());
  vin::TrainConfig tc = cfg.training;
  tc.seed = derive_seed(cfg.seed, "vin-train");
  std::vector<vin::EpochStats> stats;
  const auto model = vin::train(samples, cfg.vin_profile(), tc, &stats, [&](const vin::EpochStats& s) {
    std::ostringstream ss;
    ss << "epoch " << s.epoch << " loss " << s.mean_loss << " within1 " << s.within1_acc;
    log(opt, ss.str());
  });
  model.save(paths.checkpoint());
  vin::write_epoch_csv(paths.model() / "train_log.csv", stats);
  Manifest m;
  m.command = "train";
  m.add_file(cfg.output_dir, paths.checkpoint());
  m.add_file(cfg.output_dir, paths.model() / "train_log.csv");
  m.timings["total"] = seconds_since(t0);
  m.write(cfg, cfg.output_dir);
}

void cmd_rollout(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto t0 = Clock::now();
  const Paths paths{cfg.output_dir};
  std::shared_ptr<const vin::VinModel> model;
  for (auto k : cfg.criteria) {
    if (k == policy::CriterionKind::vin) {
      require(fs::exists(paths.checkpoint()), ErrorKind::io,
              "checkpoint " + paths.checkpoint().string() + " not found; run train first");
      model = std::make_shared<const vin::VinModel>(vin::VinModel::load(paths.checkpoint()));
      require(model->profile == cfg.vin_profile(), ErrorKind::config, "checkpoint profile does not match config");
    }
  }
  const auto specs = scene_specs(cfg, Split::eval);
  const std::size_t nc = cfg.constraints.size();
  const std::size_t nk = cfg.criteria.size();
  const std::size_t ns = cfg.rollout_seeds;
  for (const auto& cell : cfg.constraints) {
    for (auto k : cfg.criteria) make_dirs(paths.rollouts() / cell.name / policy::to_string(k));
  }

  // results[scene][cell][criterion][seed]
  std::vector<std::vector<policy::RolloutRecord>> results(specs.size());
  std::vector<double> scene_time(specs.size());
  auto file_stem = [&](std::size_t c, std::size_t k, std::size_t scene, std::size_t r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%03zu_s%zu", scene, r);
    return paths.rollouts() / cfg.constraints[c].name / policy::to_string(cfg.criteria[k]) / buf;
  };
  parallel_for(specs.size(), opt.workers, [&](std::size_t i) {
    const auto ts = Clock::now();
    const auto ctx = build_context(cfg, specs[i]);
    auto& out = results[i];
    out.resize(nc * nk * ns);
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t k = 0; k < nk; ++k) {
        policy::FitnessCriterion crit{cfg.criteria[k], model, derive_seed(cfg.seed, "random-criterion")};
        for (std::size_t r = 0; r < ns; ++r) {
          auto rec = policy::run_policy(*ctx, crit, cfg.constraints[c].term, rollout_seed(cfg, i, r));
          const auto stem = file_stem(c, k, i, r);
          policy::write_rollout_csv(stem.string() + ".csv", rec);
          geom::write_ply(stem.string() + ".ply", rec.final_reconstruction);
          rec.final_reconstruction = {};
          out[(c * nk + k) * ns + r] = std::move(rec);
        }
      }
    }
    scene_time[i] = seconds_since(ts);
    log(opt, "rolled out " + specs[i].tag());
  });

  Manifest m;
  m.command = "rollout";
  std::ofstream per(paths.per_scene());
  require(static_cast<bool>(per), ErrorKind::io, "cannot write " + paths.per_scene().string());
  per << "constraint,criterion,scene,repeat,captures,final_cd_cm,final_coverage_pct,final_f1,path_m,time_s,stop\n";
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& cell = cfg.constraints[c];
    std::ofstream agg(paths.aggregate(cell.name));
    require(static_cast<bool>(agg), ErrorKind::io, "cannot write aggregate for " + cell.name);
    agg << "criterion,step,n_scenes,mean_cd_cm,mean_coverage_pct,mean_f1,mean_path_m\n";
    for (std::size_t k = 0; k < nk; ++k) {
      const auto name = policy::to_string(cfg.criteria[k]);
      std::vector<policy::RolloutRecord> recs;
      for (std::size_t i = 0; i < specs.size(); ++i) {
        for (std::size_t r = 0; r < ns; ++r) {
          const auto& rec = results[i][(c * nk + k) * ns + r];
          const auto& last = rec.steps.back();
          per << cell.name << ',' << name << ',' << i << ',' << r << ',' << last.step << ',' << fmt17(last.cd_cm)
              << ',' << fmt17(last.coverage_pct) << ',' << fmt17(last.f1) << ',' << fmt17(last.path_m) << ','
              << fmt17(last.time_s) << ',' << (rec.stop == policy::StopReason::max_captures ? "max_captures" : "exhausted")
              << '\n';
          const auto stem = file_stem(c, k, i, r);
          m.add_file(cfg.output_dir, stem.string() + ".csv");
          m.add_file(cfg.output_dir, stem.string() + ".ply");
          recs.push_back(rec);
        }
      }
      for (const auto& row : aggregate(name, recs)) {
        agg << row.criterion << ',' << row.step << ',' << row.n_scenes << ',' << fmt17(row.mean_cd_cm) << ','
            << fmt17(row.mean_coverage_pct) << ',' << fmt17(row.mean_f1) << ',' << fmt17(row.mean_path_m) << '\n';
      }
    }
    agg.close();
    m.add_file(cfg.output_dir, paths.aggregate(cell.name));
  }
  per.close();
  m.add_file(cfg.output_dir, paths.per_scene());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    m.scenes.push_back({{"tag", specs[i].tag()},
                        {"seed", specs[i].seed},
                        {"category", std::string(scenes::to_string(specs[i].category))}});
    m.timings[specs[i].tag()] = scene_time[i];
  }
  m.timings["total"] = seconds_since(t0);
  m.write(cfg, cfg.output_dir);
}

void cmd_report(const fs::path& run_dir, const RunOptions& opt) {
  const Paths paths{run_dir};
  const auto t = read_csv(paths.per_scene());
  // (constraint, criterion) -> mean terminal CD, in first-seen order
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> sums;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto key = std::make_pair(t.text(r, "constraint"), t.text(r, "criterion"));
    if (!sums.count(key)) order.push_back(key);
    auto& s = sums[key];
    s.first += t.number(r, "final_cd_cm");
    ++s.second;
  }
  auto mean_of = [&](const std::string& cell, const std::string& crit) -> std::optional<double> {
    const auto it = sums.find({cell, crit});
    if (it == sums.end()) return std::nullopt;
    return it->second.first / static_cast<double>(it->second.second);
  };
  auto rel = [](double cd, std::optional<double> ref) -> std::string {
    if (!ref || *ref == 0.0) return "";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(2) << 100.0 * (*ref - cd) / *ref;
    return ss.str();
  };
  std::ofstream csv(run_dir / "report.csv");
  require(static_cast<bool>(csv), ErrorKind::io, "cannot write report.csv");
  csv << "constraint,criterion,rollouts,final_cd_cm,improvement_vs_coverage_pct,improvement_vs_random_pct\n";
  std::ostringstream text;
  text << std::left << std::setw(12) << "constraint" << std::setw(10) << "criterion" << std::right << std::setw(14)
       << "final CD (cm)" << std::setw(14) << "vs cov (%)" << std::setw(14) << "vs rand (%)" << '\n';
  for (const auto& key : order) {
    const double cd = *mean_of(key.first, key.second);
    const auto vc = rel(cd, mean_of(key.first, "coverage"));
    const auto vr = rel(cd, mean_of(key.first, "random"));
    csv << key.first << ',' << key.second << ',' << sums[key].second << ',' << fmt17(cd) << ',' << vc << ',' << vr
        << '\n';
    text << std::left << std::setw(12) << key.first << std::setw(10) << key.second << std::right << std::setw(14)
         << std::fixed << std::setprecision(3) << cd << std::setw(14) << vc << std::setw(14) << vr << '\n';
  }
  require(static_cast<bool>(csv), ErrorKind::io, "failed writing report.csv");
  std::ofstream txt(run_dir / "report.txt");
  txt << text.str();
  if (!opt.quiet) std::cout << text.str();
}

}  // namespace nbv::harness
