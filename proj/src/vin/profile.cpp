#include "nbv/vin/profile.hpp"

#include "nbv/core/error.hpp"

#include <sstream>

namespace nbv::vin {

Profile Profile::desk() { return Profile{}; }

Profile Profile::paper() {
  Profile p;
  p.name = "paper";
  p.grid_res = 512;
  p.widths = {32, 64, 128, 256};
  return p;
}

Profile Profile::micro() {
  Profile p;
  p.name = "micro";
  p.grid_res = 16;  // encoder input 8x8
  p.widths = {3, 4, 4, 5};
  p.view_dim = 6;
  p.hidden = 5;
  return p;
}

Profile Profile::by_name(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  if (name == "micro") return micro();
  fail(ErrorKind::parameter, "unknown profile '" + name + "'");
}

std::string Profile::id() const {
  std::ostringstream os;
  os << name << "/g" << grid_res << "/c" << widths[0] << '-' << widths[1] << '-' << widths[2] << '-' << widths[3]
     << "/v" << view_dim << "/h" << hidden << "/fb" << f_base_scale << "/relu-k3s2p1-gap";
  return os.str();
}

Profile Profile::from_id(const std::string& id) {
  std::vector<std::string> parts;
  std::stringstream ss(id);
  for (std::string part; std::getline(ss, part, '/');) parts.push_back(part);
  require(parts.size() == 7 && parts[6] == "relu-k3s2p1-gap", ErrorKind::io, "unrecognized profile id '" + id + "'");
  Profile p;
  try {
    p.name = parts[0];
    require(parts[1][0] == 'g' && parts[2][0] == 'c' && parts[3][0] == 'v' && parts[4][0] == 'h' &&
                parts[5].rfind("fb", 0) == 0,
            ErrorKind::io, "malformed profile id '" + id + "'");
    p.grid_res = std::stoi(parts[1].substr(1));
    std::stringstream ws(parts[2].substr(1));
    std::string w;
    for (int i = 0; i < 4; ++i) {
      require(static_cast<bool>(std::getline(ws, w, '-')), ErrorKind::io, "malformed widths in profile id");
      p.widths[static_cast<std::size_t>(i)] = std::stoi(w);
    }
    p.view_dim = std::stoi(parts[3].substr(1));
    p.hidden = std::stoi(parts[4].substr(1));
    p.f_base_scale = std::stod(parts[5].substr(2));
  } catch (const std::logic_error&) {
    fail(ErrorKind::io, "malformed profile id '" + id + "'");
  }
  return p;
}

std::vector<TensorSlot> parameter_layout(const Profile& p) {
  std::vector<TensorSlot> slots;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    std::size_t size = 1;
    for (int d : shape) size *= static_cast<std::size_t>(d);
    slots.push_back({std::move(name), std::move(shape), offset, size});
    offset += size;
  };
  int in = kGridChannels;
  for (int l = 0; l < 4; ++l) {
    const int out = p.widths[static_cast<std::size_t>(l)];
    add("conv" + std::to_string(l) + ".weight", {out, in * 9});
    add("conv" + std::to_string(l) + ".bias", {out});
    in = out;
  }
  add("proj.weight", {p.view_dim, in});
  add("proj.bias", {p.view_dim});
  add("fc1.weight", {p.hidden, p.view_dim + kExtraInputs});
  add("fc1.bias", {p.hidden});
  add("fc2.weight", {p.hidden, p.hidden});
  add("fc2.bias", {p.hidden});
  add("coral.weight", {p.hidden});
  add("coral.bias", {kNumRanks});
  return slots;
}

}  // namespace nbv::vin
