#pragma once

// JSON network specs and task configs, CSV tensors, PGM images, parameter
// bundles and text dumps of groups.

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "eqnn/capsule.hpp"
#include "eqnn/error.hpp"
#include "eqnn/feature_map.hpp"
#include "eqnn/group.hpp"
#include "eqnn/network.hpp"
#include "eqnn/rep_spec.hpp"
#include "eqnn/train.hpp"

namespace eqnn {

using json = nlohmann::json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

/// "name:line:col: message", the offending line and a caret.
inline std::string line_context(const std::string& text, std::size_t byte, const std::string& source, const std::string& msg) {
  std::size_t line = 1, line_start = 0;
  const std::size_t stop = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < stop; ++i)
    if (text[i] == '\n') {
      ++line;
      line_start = i + 1;
    }
  std::size_t line_end = text.find('\n', line_start);
  if (line_end == std::string::npos) line_end = text.size();
  const std::size_t col = stop - line_start + 1;
  std::ostringstream os;
  os << source << ":" << line << ":" << col << ": " << msg << "\n  " << text.substr(line_start, line_end - line_start)
     << "\n  " << std::string(col > 0 ? col - 1 : 0, ' ') << "^";
  return os.str();
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    if (const auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw SpecError(line_context(text, e.byte, source, msg));
  }
}

/// Wraps errors raised while reading one JSON node with its pointer path.
template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw SpecError("at " + path + ": " + e.what());
  } catch (const SpecError& e) {
    const std::string what = e.what();
    if (what.rfind("at /", 0) == 0) throw;
    throw SpecError("at " + path + ": " + what);
  } catch (const Error& e) {
    throw SpecError("at " + path + ": " + e.what());
  }
}

inline std::string capsule_text(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "irrep") return "irrep:" + j.at("irrep").get<std::string>();
  if (kind == "quotient") return "quotient:" + j.at("subgroup").get<std::string>();
  if (kind == "crelu") return "crelu(" + capsule_text(j.at("of")) + ")";
  return kind;
}

inline FiberType parse_fiber_json(const GroupPtr& g, const json& j, const std::string& path) {
  if (j.is_string()) return at_path(path, [&] { return parse_fiber(g, j.get<std::string>()); });
  if (!j.is_array()) throw SpecError("at " + path + ": fiber must be a string or an array of {kind, mult}");
  FiberType f;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    at_path(p, [&] {
      const int mult = j[i].is_object() ? j[i].value("mult", 1) : 1;
      if (mult < 0) throw SpecError("negative multiplicity");
      if (mult > 0) f.entries.push_back({parse_capsule(g, capsule_text(j[i])), mult});
    });
  }
  return f;
}

inline PoolSpec parse_pool_json(const GroupPtr& g, const json& j, const std::string& path) {
  PoolSpec p;
  return at_path(path, [&] {
    std::string kind = j.is_null() ? "none" : j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
    if (kind == "none") return p;
    if (kind == "fiber_max" || kind == "fiber") {
      p.kind = PoolSpec::Kind::FiberMax;
      return p;
    }
    if (kind == "quotient") {
      p.kind = PoolSpec::Kind::Quotient;
      p.subgroup_text = j.is_object() ? j.at("subgroup").get<std::string>() : std::string("H");
      p.subgroup = parse_subgroup(*g, p.subgroup_text);
      return p;
    }
    throw SpecError("unknown pooling '" + kind + "' (expected none, fiber_max or quotient)");
  });
}

}  // namespace detail

/// Network spec:
///   { "group": "D4", "window": 9, "boundary": "cyclic", "classes": 2,
///     "input": [{"kind": "trivial", "mult": 1}],
///     "layers": [{ "window": 3, "in_fiber": [...], "out_fiber": [...],
///                  "nonlin": "relu", "pool": "fiber_max" }],
///     "perturb": {"layer": 0, "index": 4, "delta": 0.1} }
/// Fibers are arrays of {kind, mult} (kind trivial, regular, irrep + "irrep",
/// quotient + "subgroup", crelu + "of") or strings such as "2xregular+irrep:E".
inline NetworkSpec parse_network_spec(const std::string& text, const std::string& source = "<spec>") {
  const json j = detail::parse_json(text, source);
  if (!j.is_object()) throw SpecError(source + ": top level must be an object");
  NetworkSpec spec;
  spec.group = detail::at_path("/group", [&] { return build_stabilizer(j.at("group").get<std::string>()); });
  spec.input_window = detail::at_path("/window", [&] { return j.value("window", 9); });
  detail::at_path("/window", [&] { Box(spec.input_window, spec.group->dim()); });
  spec.boundary = detail::at_path("/boundary", [&] { return parse_boundary(j.value("boundary", std::string("cyclic"))); });
  spec.classes = detail::at_path("/classes", [&] { return j.value("classes", 2); });
  if (j.contains("input")) spec.input = detail::parse_fiber_json(spec.group, j.at("input"), "/input");
  if (j.contains("layers")) {
    const json& layers = j.at("layers");
    if (!layers.is_array()) throw SpecError("at /layers: expected an array");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string p = "/layers/" + std::to_string(i);
      const json& lj = layers[i];
      if (!lj.is_object()) throw SpecError("at " + p + ": expected an object");
      LayerSpec l;
      detail::at_path(p, [&] {
        if (lj.contains("group") && lj.at("group").get<std::string>() != spec.group->name())
          throw SpecError("layer group " + lj.at("group").get<std::string>() + " differs from network group " +
                          spec.group->name());
        l.filter_size = lj.value("window", 3);
        Box(l.filter_size, spec.group->dim());
      });
      for (const char* key : {"in_fiber", "out_fiber"})
        if (!lj.contains(key)) throw SpecError("at " + p + ": missing \"" + key + "\"");
      l.in = detail::parse_fiber_json(spec.group, lj.at("in_fiber"), p + "/in_fiber");
      l.out = detail::parse_fiber_json(spec.group, lj.at("out_fiber"), p + "/out_fiber");
      l.nonlin = detail::at_path(p + "/nonlin", [&] { return parse_nonlin(lj.value("nonlin", std::string("none"))); });
      l.pool = detail::parse_pool_json(spec.group, lj.contains("pool") ? lj.at("pool") : json(), p + "/pool");
      spec.layers.push_back(std::move(l));
    }
  }
  if (j.contains("perturb")) {
    spec.perturbation = detail::at_path("/perturb", [&] {
      const json& pj = j.at("perturb");
      return KernelPerturbation{pj.at("layer").get<int>(), pj.at("index").get<int>(), pj.at("delta").get<double>()};
    });
  }
  return spec;
}

inline NetworkSpec load_network_spec(const std::string& path) { return parse_network_spec(read_text_file(path), path); }

/// Task config: {"group", "window", "classes", "motifs": [[[x, y], ...], ...],
/// "train_samples", "test_samples", "noise", "learning_rate", "batch", "epochs", "seed"}.
inline TaskConfig parse_task_config(const std::string& text, const std::string& source = "<task>") {
  const json j = detail::parse_json(text, source);
  TaskConfig c;
  detail::at_path("/", [&] {
    c.group = j.value("group", c.group);
    c.window = j.value("window", c.window);
    c.classes = j.value("classes", c.classes);
    c.train_samples = j.value("train_samples", c.train_samples);
    c.test_samples = j.value("test_samples", c.test_samples);
    c.noise = j.value("noise", c.noise);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch = j.value("batch", c.batch);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    if (j.contains("motifs"))
      for (const auto& m : j.at("motifs")) {
        std::vector<IntVec> pts;
        for (const auto& p : m) pts.push_back(p.get<IntVec>());
        c.motifs.push_back(pts);
      }
  });
  if (c.classes <= 0) throw SpecError(source + ": classes must be positive");
  return c;
}

inline TaskConfig load_task_config(const std::string& path) { return parse_task_config(read_text_file(path), path); }

// ---------------------------------------------------------------------------
// Files.

inline void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error("cannot create directory '" + dir + "'");
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << std::setprecision(17);
  return out;
}

/// Header "W,n,K", the values, then one row per cell (window order) with K values.
inline void write_feature_map_csv(const std::string& path, const FeatureMap& f) {
  auto out = open_output(path);
  out << "W,n,K\n" << f.window.size << "," << f.window.dim << "," << f.channels() << "\n";
  for (int x = 0; x < f.cells(); ++x) {
    for (int k = 0; k < f.channels(); ++k) out << (k ? "," : "") << f.at(k, x);
    out << "\n";
  }
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  auto out = open_output(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << "\n";
  }
}

/// Plain (P2) PGM, values mapped linearly from [lo, hi] to 0..255.
inline void write_pgm(const std::string& path, const Eigen::MatrixXd& img, double lo, double hi) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "P2\n" << img.cols() << " " << img.rows() << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (Eigen::Index i = 0; i < img.rows(); ++i) {
    for (Eigen::Index j = 0; j < img.cols(); ++j) {
      const long v = std::lround(255.0 * (img(i, j) - lo) / span);
      out << (j ? " " : "") << std::clamp(v, 0L, 255L);
    }
    out << "\n";
  }
}

/// Values on an s^n box as an image: x0 runs left to right, x1 bottom to top;
/// for n = 3 the x2 slices are stacked top to bottom in increasing order.
inline Eigen::MatrixXd box_image(const Box& box, const Eigen::VectorXd& values) {
  const int s = box.size, r = box.radius();
  const int slices = box.dim == 3 ? s : 1;
  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(box.dim == 1 ? 1 : s * slices, s);
  for (int i = 0; i < box.count(); ++i) {
    const IntVec p = box.offset(i);
    const int col = static_cast<int>(p[0]) + r;
    const int row = box.dim == 1 ? 0 : static_cast<int>(r - p[1]) + (box.dim == 3 ? static_cast<int>(p[2] + r) * s : 0);
    img(row, col) = values(i);
  }
  return img;
}

/// Parameter bundle: layer<l>_phi<p>.csv, layer<l>_bias.csv, head_w.csv, head_b.csv.
inline void save_params(const std::string& dir, const NetworkParams& p) {
  ensure_directory(dir);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (std::size_t k = 0; k < p.layers[l].bank.phi.size(); ++k)
      write_matrix_csv(dir + "/layer" + std::to_string(l) + "_phi" + std::to_string(k) + ".csv", p.layers[l].bank.phi[k]);
    if (!p.layers[l].norm_bias.empty()) {
      Eigen::MatrixXd b = Eigen::Map<const Eigen::MatrixXd>(p.layers[l].norm_bias.data(),
                                                           static_cast<Eigen::Index>(p.layers[l].norm_bias.size()), 1);
      write_matrix_csv(dir + "/layer" + std::to_string(l) + "_bias.csv", b);
    }
  }
  write_matrix_csv(dir + "/head_w.csv", p.head_w);
  write_matrix_csv(dir + "/head_b.csv", p.head_b);
}

// ---------------------------------------------------------------------------
// Text dumps.

inline std::string format_matrix(const IntMatrix& m) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < m.n; ++i) {
    os << (i ? ";" : "");
    for (int j = 0; j < m.n; ++j) os << (j ? " " : "") << m(i, j);
  }
  os << "]";
  return os.str();
}

inline std::string group_dump(const StabilizerGroup& g) {
  std::ostringstream os;
  os << "group " << g.name() << " order " << g.order() << " acting on Z^" << g.dim() << "\n";
  os << "generators:";
  for (int s : g.generators()) os << " " << g.label(s);
  os << "\nelements:\n";
  for (int h = 0; h < g.order(); ++h)
    os << "  " << h << " " << g.label(h) << " " << format_matrix(g.action().point_maps[h]) << " inverse " << g.label(g.inv(h))
       << "\n";
  os << "multiplication (row * column):\n";
  for (int a = 0; a < g.order(); ++a) {
    os << " ";
    for (int b = 0; b < g.order(); ++b) os << " " << g.mul(a, b);
    os << "\n";
  }
  return os.str();
}

inline json group_json(const StabilizerGroup& g) {
  json j;
  j["name"] = g.name();
  j["order"] = g.order();
  j["dim"] = g.dim();
  for (int s : g.generators()) j["generators"].push_back(g.label(s));
  for (int h = 0; h < g.order(); ++h) {
    json e;
    e["index"] = h;
    e["label"] = g.label(h);
    e["inverse"] = g.inv(h);
    const auto& m = g.action().point_maps[h];
    for (int i = 0; i < m.n; ++i) {
      json row = json::array();
      for (int c = 0; c < m.n; ++c) row.push_back(m(i, c));
      e["matrix"].push_back(row);
    }
    j["elements"].push_back(e);
    json row = json::array();
    for (int b = 0; b < g.order(); ++b) row.push_back(g.mul(h, b));
    j["table"].push_back(row);
  }
  return j;
}

inline json report_json(const RunReport& r) {
  json j;
  j["seed"] = r.seed;
  j["seconds"] = r.seconds;
  j["passed"] = r.passed();
  j["checks"] = json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back({{"name", c.name}, {"residual", c.residual}, {"tolerance", c.tolerance}, {"passed", c.passed},
                           {"detail", c.detail}});
  return j;
}

}  // namespace eqnn
