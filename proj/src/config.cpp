#include "sofic/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

namespace sofic {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
  const auto mark = node.Mark();
  if (mark.line >= 0) throw ConfigError(fmt::format("line {}: {}", mark.line + 1, what));
  throw ConfigError(what);
}

void check_keys(const YAML::Node& node, const std::string& block, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) fail(node, fmt::format("'{}' must be a table", block));
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      fail(kv.first, fmt::format("unknown key '{}' in '{}'", key, block));
    }
  }
}

YAML::Node require(const YAML::Node& parent, const char* key) {
  const auto node = parent[key];
  if (!node) fail(parent, fmt::format("missing key '{}'", key));
  return node;
}

template <class T>
T as(const YAML::Node& node, const char* what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, fmt::format("'{}' has the wrong type", what));
  }
}

template <class T>
std::vector<T> list(const YAML::Node& node, const char* what) {
  if (!node.IsSequence()) fail(node, fmt::format("'{}' must be a list", what));
  std::vector<T> out;
  for (const auto& item : node) out.push_back(as<T>(item, what));
  return out;
}

template <class T>
T optional_value(const YAML::Node& parent, const char* key, T fallback) {
  const auto node = parent[key];
  return node ? as<T>(node, key) : fallback;
}

GroupElement parse_element(const GroupModel& G, const YAML::Node& node) {
  try {
    switch (G.kind()) {
      case GroupKind::integer_lattice:
        if (node.IsSequence()) return G.lattice(list<std::int64_t>(node, "window element"));
        return G.lattice({as<std::int64_t>(node, "window element")});
      case GroupKind::free_group:
        return G.word(as<std::string>(node, "window element"));
      case GroupKind::real_line:
        return G.real(as<double>(node, "window element"));
    }
  } catch (const std::invalid_argument& e) {
    fail(node, e.what());
  }
  fail(node, "unknown group");
}

GroupModel parse_group(const YAML::Node& node) {
  check_keys(node, "group", {"kind", "dim", "rank", "step"});
  const auto kind_node = require(node, "kind");
  const auto kind = as<std::string>(kind_node, "kind");
  try {
    if (kind == "lattice") return GroupModel::integer_lattice(optional_value<int>(node, "dim", 1));
    if (kind == "free") return GroupModel::free_group(optional_value<int>(node, "rank", 2));
    if (kind == "real") return GroupModel::real_line(as<double>(require(node, "step"), "step"));
  } catch (const std::invalid_argument& e) {
    fail(node, e.what());
  }
  fail(kind_node, fmt::format("group kind '{}' is not one of lattice, free, real", kind));
}

void parse_model(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "model", {"kind", "perm_seed", "size", "radii"});
  const auto kind_node = require(node, "kind");
  const auto kind = as<std::string>(kind_node, "kind");
  const auto& G = cfg.group;
  auto& f = cfg.family;
  auto need = [&](bool ok, const char* what) {
    if (!ok) fail(kind_node, fmt::format("model kind '{}' needs {}", kind, what));
  };
  if (kind == "cyclic" || kind == "interval") {
    need(G.kind() == GroupKind::integer_lattice && G.dim() == 1, "the group Z (lattice, dim 1)");
    f.kind = kind == "cyclic" ? ModelKind::cyclic : ModelKind::interval;
  } else if (kind == "torus") {
    need(G.kind() == GroupKind::integer_lattice, "a lattice group");
    f.kind = ModelKind::torus;
    f.dim = G.dim();
  } else if (kind == "schreier") {
    need(G.kind() == GroupKind::free_group, "a free group");
    f.kind = ModelKind::schreier;
    f.rank = G.rank();
  } else if (kind == "circle") {
    need(G.kind() == GroupKind::real_line, "the real line");
    f.kind = ModelKind::circle;
    f.step = G.step();
  } else {
    fail(kind_node, fmt::format("model kind '{}' is not one of cyclic, torus, schreier, circle, interval", kind));
  }
  f.perm_seed = optional_value<std::uint64_t>(node, "perm_seed", cfg.seed);
  if (node["size"]) {
    const auto size = as<std::int64_t>(node["size"], "size");
    if (size <= 0) fail(node["size"], "model size must be positive");
    cfg.model_size = static_cast<std::size_t>(size);
  }
  if (node["radii"]) cfg.quality_radii = list<double>(node["radii"], "radii");
}

ShiftSystem parse_system(const YAML::Node& node, const GroupModel& G) {
  check_keys(node, "system", {"preset", "alphabet", "period", "forbidden", "name"});
  try {
    if (const auto preset = node["preset"]) {
      const auto name = as<std::string>(preset, "preset");
      if (name == "full_shift") return ShiftSystem::full_shift(G, optional_value<int>(node, "alphabet", 2));
      if (name == "golden_mean") return ShiftSystem::golden_mean(G);
      if (name == "rotation") return ShiftSystem::rotation(G, as<int>(require(node, "period"), "period"));
      fail(preset, fmt::format("preset '{}' is not one of full_shift, golden_mean, rotation", name));
    }
    const auto alphabet = as<int>(require(node, "alphabet"), "alphabet");
    std::vector<Pattern> forbidden;
    if (const auto list_node = node["forbidden"]) {
      if (!list_node.IsSequence()) fail(list_node, "'forbidden' must be a list");
      for (const auto& item : list_node) {
        check_keys(item, "forbidden pattern", {"window", "symbols"});
        Pattern q;
        const auto window = require(item, "window");
        if (!window.IsSequence()) fail(window, "'window' must be a list");
        for (const auto& w : window) q.window.push_back(parse_element(G, w));
        q.symbols = list<int>(require(item, "symbols"), "symbols");
        forbidden.push_back(std::move(q));
      }
    }
    return ShiftSystem(G, Alphabet::of_size(alphabet), std::move(forbidden), optional_value<std::string>(node, "name", "custom"));
  } catch (const std::invalid_argument& e) {
    fail(node, e.what());
  }
}

InvariantMeasure parse_measure(const YAML::Node& node, const std::optional<ShiftSystem>& system) {
  check_keys(node, "measure", {"kind", "p", "transition"});
  const auto kind_node = require(node, "kind");
  const auto kind = as<std::string>(kind_node, "kind");
  try {
    if (kind == "bernoulli") return InvariantMeasure::bernoulli(list<double>(require(node, "p"), "p"));
    if (kind == "markov") {
      const auto rows_node = require(node, "transition");
      if (!rows_node.IsSequence()) fail(rows_node, "'transition' must be a list of rows");
      const auto k = static_cast<Eigen::Index>(rows_node.size());
      Eigen::MatrixXd P(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        const auto row = list<double>(rows_node[static_cast<std::size_t>(i)], "transition");
        if (static_cast<Eigen::Index>(row.size()) != k) fail(rows_node, "transition matrix must be square");
        for (Eigen::Index j = 0; j < k; ++j) P(i, j) = row[static_cast<std::size_t>(j)];
      }
      return InvariantMeasure::markov(P);
    }
    if (kind == "parry") {
      if (!system) fail(kind_node, "a Parry measure needs a system block");
      return parry_measure(*system);
    }
  } catch (const std::invalid_argument& e) {
    fail(node, e.what());
  }
  fail(kind_node, fmt::format("measure kind '{}' is not one of bernoulli, markov, parry", kind));
}

Schedule parse_schedule(const YAML::Node& node, const GroupModel& G) {
  check_keys(node, "schedule", {"sizes", "radii", "deltas", "epsilons", "etas", "window"});
  Schedule s;
  for (auto v : list<std::int64_t>(require(node, "sizes"), "sizes")) {
    if (v <= 0) fail(node["sizes"], "model sizes must be positive");
    s.sizes.push_back(static_cast<std::size_t>(v));
  }
  s.radii = list<double>(require(node, "radii"), "radii");
  s.deltas = list<double>(require(node, "deltas"), "deltas");
  s.epsilons = list<double>(require(node, "epsilons"), "epsilons");
  if (node["etas"]) s.etas = list<double>(node["etas"], "etas");
  if (const auto window = node["window"]) {
    if (!window.IsSequence()) fail(window, "'window' must be a list");
    for (const auto& w : window) s.window.push_back(parse_element(G, w));
  }
  try {
    s.validate(false);
  } catch (const std::invalid_argument& e) {
    fail(node, e.what());
  }
  return s;
}

std::vector<MarginalBox> parse_boxes(const YAML::Node& node) {
  check_keys(node, "relative", {"boxes"});
  const auto boxes = require(node, "boxes");
  if (!boxes.IsSequence() || boxes.size() == 0) fail(boxes, "'boxes' must be a nonempty list");
  std::vector<MarginalBox> out;
  for (const auto& b : boxes) {
    check_keys(b, "box", {"lower", "upper"});
    MarginalBox box{list<double>(require(b, "lower"), "lower"), list<double>(require(b, "upper"), "upper")};
    if (box.lower.size() != box.upper.size()) fail(b, "box bounds differ in size");
    out.push_back(std::move(box));
  }
  return out;
}

}  // namespace

std::string ExperimentConfig::hash() const {
  const std::string payload = text + "\nseed=" + std::to_string(seed);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

ExperimentConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("line {}: {}", e.mark.line + 1, e.msg));
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("config must be a table of blocks");
  check_keys(root, "config",
             {"seed", "group", "model", "system", "measure", "relative", "spec", "schedule", "scan", "verify", "output"});

  ExperimentConfig cfg;
  cfg.text = text;
  cfg.seed = seed ? *seed : optional_value<std::uint64_t>(root, "seed", 0);
  if (root["group"]) cfg.group = parse_group(root["group"]);
  if (root["model"]) {
    parse_model(root["model"], cfg);
  } else {
    if (!(cfg.group == GroupModel::integer_lattice(1))) fail(root["group"], "a model block is needed for this group");
    cfg.family.perm_seed = cfg.seed;
  }
  if (root["system"]) cfg.system = parse_system(root["system"], cfg.group);
  if (root["measure"]) {
    cfg.measure = parse_measure(root["measure"], cfg.system);
    if (cfg.system && cfg.measure->alphabet_size() != cfg.system->alphabet().size()) {
      fail(root["measure"], "measure and system use different alphabets");
    }
  }
  if (root["relative"]) cfg.boxes = parse_boxes(root["relative"]);
  if (const auto spec = root["spec"]) {
    check_keys(spec, "spec", {"engines"});
    if (spec["engines"]) {
      cfg.engines.clear();
      for (const auto& e : spec["engines"]) {
        const auto name = as<std::string>(e, "engines");
        if (name == "strict") {
          cfg.engines.push_back(Engine::strict);
        } else if (name == "soft") {
          cfg.engines.push_back(Engine::soft);
        } else {
          fail(e, fmt::format("engine '{}' is not one of strict, soft", name));
        }
      }
      if (cfg.engines.empty()) fail(spec, "at least one engine is needed");
    }
  }
  if (root["schedule"]) cfg.schedule = parse_schedule(root["schedule"], cfg.group);
  if (const auto scan = root["scan"]) {
    check_keys(scan, "scan", {"family", "step"});
    MeasureGrid grid;
    const auto family = as<std::string>(require(scan, "family"), "family");
    if (family == "bernoulli") {
      grid.kind = MeasureGrid::Kind::bernoulli;
    } else if (family == "markov") {
      grid.kind = MeasureGrid::Kind::markov;
    } else {
      fail(scan["family"], fmt::format("scan family '{}' is not one of bernoulli, markov", family));
    }
    grid.step = optional_value<double>(scan, "step", 0.05);
    cfg.grid = grid;
  }
  if (const auto verify = root["verify"]) {
    check_keys(verify, "verify", {"trials", "corrupt_action_table"});
    const auto trials = optional_value<std::int64_t>(verify, "trials", 200);
    if (trials <= 0) fail(verify, "trials must be positive");
    cfg.verify.trials = static_cast<std::size_t>(trials);
    cfg.verify.corrupt_action_table = optional_value<bool>(verify, "corrupt_action_table", false);
  }
  if (const auto output = root["output"]) {
    check_keys(output, "output", {"dir"});
    cfg.output_dir = optional_value<std::string>(output, "dir", cfg.output_dir);
  }
  if (cfg.system && !(cfg.system->group() == cfg.group)) fail(root["system"], "system group differs from the group block");
  return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), seed);
}

}  // namespace sofic
