#include "nbv/harness/config.hpp"

#include "nbv/core/error.hpp"
#include "nbv/core/random.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace nbv::harness {

using nlohmann::json;

namespace {

// Tracks which keys of one object were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j_.is_object(), ErrorKind::config, where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void opt(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorKind::config, where(key) + ": " + e.what());
    }
  }

  Reader child(const std::string& key) {
    used_.insert(key);
    return Reader(j_.at(key), where(key));
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(ErrorKind::config, "unknown key " + where(it.key()));
    }
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_scene_set(Reader r, SceneSet& s) {
  if (r.has("categories")) {
    std::vector<std::string> names;
    r.opt("categories", names);
    s.categories.clear();
    for (const auto& n : names) {
      try {
        s.categories.push_back(scenes::parse_category(n));
      } catch (const Error& e) {
        fail(ErrorKind::config, r.where("categories") + ": " + e.what());
      }
    }
  }
  r.opt("count", s.count);
  r.finish();
}

void read_termination(Reader& r, policy::TerminationCriteria& t) {
  if (r.has("max_captures")) {
    std::size_t v = 0;
    r.opt("max_captures", v);
    t.max_captures = v;
  }
  if (r.has("time_budget_s")) {
    double v = 0;
    r.opt("time_budget_s", v);
    t.time_budget = v;
  }
  if (r.has("min_clearance_m")) {
    double v = 0;
    r.opt("min_clearance_m", v);
    t.min_clearance = v;
  }
  r.opt("speed_mps", t.speed);
}

json scene_set_json(const SceneSet& s) {
  json cats = json::array();
  for (auto c : s.categories) cats.push_back(std::string(scenes::to_string(c)));
  return json{{"categories", cats}, {"count", s.count}};
}

}  // namespace

ExperimentConfig default_config(const std::string& profile) {
  ExperimentConfig c;
  c.profile = profile;
  c.output_dir = "runs/" + profile;
  (void)vin::Profile::by_name(profile);
  ConstraintCell captures{"captures", {}};
  captures.term.max_captures = 10;
  ConstraintCell timed{"time15", {}};
  timed.term.time_budget = 15.0;
  ConstraintCell clear{"clearance", {}};
  clear.term.max_captures = 10;
  clear.term.min_clearance = 1.0;
  c.constraints = {captures, timed, clear};
  if (profile == "paper") {
    c.training.epochs = 60;
    c.catalog.resolution = 512;
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("malformed config: ") + e.what());
  }
  Reader root(j, "");
  std::string profile = "desk";
  root.opt("profile", profile);
  ExperimentConfig c;
  try {
    c = default_config(profile);
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("profile: ") + e.what());
  }
  root.opt("seed", c.seed);
  std::string out = c.output_dir.string();
  root.opt("output_dir", out);
  c.output_dir = out;
  root.opt("scene_size_m", c.scene_size);
  if (root.has("train_scenes")) read_scene_set(root.child("train_scenes"), c.train_scenes);
  if (root.has("eval_scenes")) read_scene_set(root.child("eval_scenes"), c.eval_scenes);
  if (root.has("catalog")) {
    auto r = root.child("catalog");
    r.opt("per_shell", c.catalog.per_shell);
    r.opt("radius_factors", c.catalog.radius_factors);
    r.opt("resolution", c.catalog.resolution);
    r.opt("fov_deg", c.catalog.fov_deg);
    r.finish();
  }
  if (root.has("reconstruction")) {
    auto r = root.child("reconstruction");
    r.opt("voxel_size_m", c.recon.voxel_size);
    r.opt("normal_k", c.recon.normal_k);
    r.opt("splat_radius_px", c.recon.splat_radius_128);
    r.opt("gt_points", c.recon.gt_points);
    r.finish();
  }
  if (root.has("labels")) {
    auto r = root.child("labels");
    r.opt("max_stage", c.max_stage);
    r.finish();
  }
  if (root.has("training")) {
    auto r = root.child("training");
    r.opt("epochs", c.training.epochs);
    r.opt("lr", c.training.lr);
    r.opt("weight_decay", c.training.weight_decay);
    r.opt("max_batch", c.training.max_batch);
    r.finish();
  }
  if (root.has("criteria")) {
    std::vector<std::string> names;
    root.opt("criteria", names);
    c.criteria.clear();
    for (const auto& n : names) c.criteria.push_back(policy::parse_criterion(n));
  }
  if (root.has("constraints")) {
    const json& arr = root.raw("constraints");
    require(arr.is_array(), ErrorKind::config, "constraints must be an array");
    c.constraints.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader r(arr[i], "constraints[" + std::to_string(i) + "]");
      ConstraintCell cell;
      r.opt("name", cell.name);
      read_termination(r, cell.term);
      r.finish();
      c.constraints.push_back(cell);
    }
  }
  root.opt("rollout_seeds", c.rollout_seeds);
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_json_text(ss.str());
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::config, msg); };
  try {
    (void)vin::Profile::by_name(profile);
  } catch (const Error&) {
    fail(ErrorKind::config, "unknown profile '" + profile + "'");
  }
  check(scene_size > 0.0, "scene_size_m must be positive");
  check(!train_scenes.categories.empty() && !eval_scenes.categories.empty(), "scene categories must not be empty");
  check(catalog.per_shell >= 1 && catalog.resolution >= 16 && catalog.fov_deg > 0.0 && catalog.fov_deg < 180.0,
        "invalid catalog parameters");
  check(catalog.radius_factors[0] > 1.0 && catalog.radius_factors[0] < catalog.radius_factors[1] &&
            catalog.radius_factors[1] < catalog.radius_factors[2],
        "radius_factors must be increasing and above 1");
  check(recon.voxel_size > 0.0 && recon.normal_k >= 2 && recon.splat_radius_128 >= 0.5 && recon.gt_points >= 100,
        "invalid reconstruction parameters");
  check(max_stage >= 2, "labels.max_stage must be at least 2");
  check(training.epochs >= 1 && training.lr > 0.0 && training.weight_decay >= 0.0 && training.max_batch >= 1,
        "invalid training parameters");
  check(!criteria.empty(), "criteria must not be empty");
  check(rollout_seeds >= 1, "rollout_seeds must be at least 1");
  std::set<std::string> names;
  for (const auto& cell : constraints) {
    check(!cell.name.empty() && cell.name.find_first_of("/\\. ") == std::string::npos,
          "constraint names must be non-empty plain words");
    check(names.insert(cell.name).second, "duplicate constraint name " + cell.name);
    try {
      cell.term.validate();
    } catch (const Error& e) {
      fail(ErrorKind::config, "constraint " + cell.name + ": " + e.what());
    }
  }
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["profile"] = profile;
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["scene_size_m"] = scene_size;
  j["train_scenes"] = scene_set_json(train_scenes);
  j["eval_scenes"] = scene_set_json(eval_scenes);
  j["catalog"] = {{"per_shell", catalog.per_shell},
                  {"radius_factors", catalog.radius_factors},
                  {"resolution", catalog.resolution},
                  {"fov_deg", catalog.fov_deg}};
  j["reconstruction"] = {{"voxel_size_m", recon.voxel_size},
                         {"normal_k", recon.normal_k},
                         {"splat_radius_px", recon.splat_radius_128},
                         {"gt_points", recon.gt_points}};
  j["labels"] = {{"max_stage", max_stage}};
  j["training"] = {{"epochs", training.epochs},
                   {"lr", training.lr},
                   {"weight_decay", training.weight_decay},
                   {"max_batch", training.max_batch}};
  json crit = json::array();
  for (auto k : criteria) crit.push_back(policy::to_string(k));
  j["criteria"] = crit;
  json cells = json::array();
  for (const auto& cell : constraints) {
    json cj{{"name", cell.name}, {"speed_mps", cell.term.speed}};
    if (cell.term.max_captures) cj["max_captures"] = *cell.term.max_captures;
    if (cell.term.time_budget) cj["time_budget_s"] = *cell.term.time_budget;
    if (cell.term.min_clearance) cj["min_clearance_m"] = *cell.term.min_clearance;
    cells.push_back(cj);
  }
  j["constraints"] = cells;
  j["rollout_seeds"] = rollout_seeds;
  return j.dump(2);
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical_json()); }

}  // namespace nbv::harness
