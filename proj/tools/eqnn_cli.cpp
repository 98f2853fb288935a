// eqnn command-line front end.
//
// Exit codes: 0 all checks passed, 1 a check failed or a run aborted,
// 2 bad invocation or unreadable input.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "eqnn/eqnn.hpp"

using namespace eqnn;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  bool json = false;
};

/// Integers print without a decimal point so table output is byte-stable.
std::string number(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) < 1e-9) {
    std::ostringstream os;
    os << static_cast<long long>(r);
    return os.str();
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string join(const std::vector<int>& v, const char* sep = ",") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
  return s;
}

/// Network from a spec file; an invalid chain counts as a bad spec.
SteerableNetwork load_network(const std::string& path) {
  NetworkSpec spec = load_network_spec(path);
  try {
    return SteerableNetwork(std::move(spec));
  } catch (const SpecError&) {
    throw;
  } catch (const Error& e) {
    throw SpecError(path + ": " + e.what());
  }
}

/// Canonical filter space of a group: 3x3 on Z^2, 3x3x3 on Z^3.
Representation canonical_filter_space(const GroupPtr& g, int size) { return filter_space_rep(g, size, trivial_rep(g)); }

int cmd_group_dump(const Globals& gl, const std::string& group) {
  const auto g = build_stabilizer(group);
  if (gl.json)
    std::cout << group_json(*g).dump(2) << "\n";
  else
    std::cout << group_dump(*g);
  return 0;
}

int cmd_tables(const Globals& gl, const std::string& group, int size) {
  const auto g = build_stabilizer(group);
  const auto table = irrep_table(g);
  const auto pi0 = canonical_filter_space(g, size);
  const auto chi = character(pi0);
  const auto type = multiplicity(pi0, table);
  if (gl.json) {
    json j;
    j["group"] = g->name();
    for (int h = 0; h < g->order(); ++h) j["elements"].push_back(g->label(h));
    for (int i = 0; i < table.size(); ++i)
      j["irreps"].push_back({{"label", table.labels[i]}, {"dim", table.irreps[i].dim()}, {"characters", table.characters[i]}});
    j["filter_size"] = size;
    for (double c : chi) j["pi0_character"].push_back(std::lround(c));
    j["pi0_type"] = type.multiplicities;
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << "character table of " << g->name() << "\n";
  std::cout << "irrep";
  for (int h = 0; h < g->order(); ++h) std::cout << "\t" << g->label(h);
  std::cout << "\n";
  for (int i = 0; i < table.size(); ++i) {
    std::cout << table.labels[i];
    for (double c : table.characters[i]) std::cout << "\t" << number(c);
    std::cout << "\n";
  }
  std::cout << "pi0 on " << size << "^" << g->dim() << " filters\n";
  std::cout << "character";
  for (double c : chi) std::cout << "\t" << number(c);
  std::cout << "\n";
  std::cout << "type (" << join(type.multiplicities) << ") over (";
  for (int i = 0; i < table.size(); ++i) std::cout << (i ? "," : "") << table.labels[i];
  std::cout << ")\n";
  return 0;
}

/// Basis vectors of a filter space as images named <irrep>_<copy>_<component>.
void write_basis_files(const std::string& dir, const GroupPtr& g, int size, const IsotypicDecomposition& dec,
                       const IrrepTable& table, const std::string& format) {
  ensure_directory(dir);
  const Box box(size, g->dim());
  const double scale = std::max(dec.basis.cwiseAbs().maxCoeff(), 1e-300);
  for (const auto& b : dec.layout) {
    const int d = table.irreps[b.irrep].dim();
    for (int c = 0; c < d; ++c) {
      const Eigen::VectorXd v = dec.basis.col(b.offset + c);
      const std::string stem = dir + "/" + table.labels[b.irrep] + "_" + std::to_string(b.copy) + "_" + std::to_string(c);
      if (format == "csv")
        write_matrix_csv(stem + ".csv", box_image(box, v));
      else
        write_pgm(stem + ".pgm", box_image(box, v), -scale, scale);
    }
  }
}

int cmd_rep_decompose(const Globals& gl, const std::string& group, const std::string& rep_text, const std::string& pgm_dir) {
  const auto g = build_stabilizer(group);
  const auto table = irrep_table(g);
  const auto rep = parse_rep(g, rep_text);
  const auto chi = character(rep);
  const auto dec = isotypic_decompose(rep, table);
  if (gl.json) {
    json j;
    j["rep"] = rep_text;
    j["dim"] = rep.dim();
    j["character"] = chi;
    j["type"] = dec.type.multiplicities;
    for (const auto& b : dec.layout) j["blocks"].push_back({{"irrep", table.labels[b.irrep]}, {"copy", b.copy}, {"offset", b.offset}});
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "representation " << rep_text << " of " << g->name() << ", dimension " << rep.dim() << "\n";
    std::cout << "flags: permutation " << rep.flags().is_permutation << ", monomial " << rep.flags().is_monomial
              << ", orthogonal " << rep.flags().is_orthogonal << "\n";
    std::cout << "character";
    for (int h = 0; h < g->order(); ++h) std::cout << " " << g->label(h) << "=" << number(chi[h]);
    std::cout << "\ntype (" << join(dec.type.multiplicities) << ")\n";
    for (const auto& b : dec.layout)
      std::cout << "  block " << table.labels[b.irrep] << " copy " << b.copy << " at " << b.offset << "\n";
  }
  if (!pgm_dir.empty()) {
    const auto colon = rep_text.find(':');
    if (rep_text.rfind("filter:", 0) != 0 || rep_text.find(':', colon + 1) != std::string::npos)
      throw SpecError("--pgm-dir needs a plain filter:<s> representation");
    write_basis_files(pgm_dir, g, std::stoi(rep_text.substr(7)), dec, table, "pgm");
  }
  return 0;
}

int cmd_hom(const Globals& gl, const std::string& group, const std::string& pi_text, const std::string& rho_text,
            const std::string& csv_dir) {
  const auto g = build_stabilizer(group);
  const auto table = irrep_table(g);
  const auto pi = parse_rep(g, pi_text), rho = parse_rep(g, rho_text);
  const int by_character = dim_hom(multiplicity(pi, table), multiplicity(rho, table));
  const auto basis = intertwiner_basis(pi, rho);
  const bool agree = by_character == basis.dim();
  const double mu = by_character > 0 ? parameter_efficiency(pi.dim(), rho.dim(), by_character) : 0.0;
  if (gl.json) {
    json j{{"pi", pi_text}, {"rho", rho_text}, {"dim_character", by_character}, {"dim_svd", basis.dim()}, {"agree", agree}};
    if (by_character > 0) j["mu"] = mu;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "dim Hom(" << pi_text << ", " << rho_text << ") = " << by_character << " (characters), " << basis.dim()
              << " (null space)\n";
    if (by_character > 0)
      std::cout << "parameter efficiency mu = " << number(mu) << "\n";
    else
      std::cout << "parameter efficiency undefined: no equivariant maps\n";
  }
  if (!csv_dir.empty()) {
    ensure_directory(csv_dir);
    for (int k = 0; k < basis.dim(); ++k) write_matrix_csv(csv_dir + "/basis_" + std::to_string(k) + ".csv", basis.basis[k]);
  }
  return agree ? 0 : 1;
}

void print_report(const RunReport& r) {
  for (const auto& c : r.checks)
    std::printf("%-4s %-28s residual %.3e (tolerance %.0e)%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.residual,
                c.tolerance, c.detail.empty() ? "" : "  ", c.detail.c_str());
  std::printf("%zu checks, %s, seed %llu, %.2fs\n", r.checks.size(), r.passed() ? "all passed" : "FAILED",
              static_cast<unsigned long long>(r.seed), r.seconds);
}

int cmd_verify(const Globals& gl, const std::string& spec_path, int translations) {
  SteerableNetwork net = load_network(spec_path);
  const auto report = verify_network(net, net.init(gl.seed), gl.seed, translations);
  if (gl.json)
    std::cout << report_json(report).dump(2) << "\n";
  else
    print_report(report);
  if (!gl.out.empty()) {
    auto f = open_output(gl.out);
    f << report_json(report).dump(2) << "\n";
  }
  return report.passed() ? 0 : 1;
}

int cmd_gcnn_equiv(const Globals& gl, const std::string& group, int window) {
  const auto g = build_stabilizer(group);
  const auto r = gcnn_equivalence(g, gl.seed, window);
  const bool ok = r.residual <= 1e-9 && r.first_layer <= 1e-9 && r.parameters_gcnn == r.parameters_steerable;
  if (gl.json) {
    std::cout << json{{"group", g->name()},           {"seed", gl.seed},
                      {"first_layer", r.first_layer}, {"residual", r.residual},
                      {"parameters_gcnn", r.parameters_gcnn}, {"parameters_steerable", r.parameters_steerable},
                      {"passed", ok}}
                     .dump(2)
              << "\n";
  } else {
    std::printf("%s G-CNN vs regular steerable, seed %llu\n", g->name().c_str(), static_cast<unsigned long long>(gl.seed));
    std::printf("first layer residual %.3e\n", r.first_layer);
    std::printf("max residual %.3e\n", r.residual);
    std::printf("parameters %d (G-CNN) %d (steerable)\n", r.parameters_gcnn, r.parameters_steerable);
    std::printf("%s\n", ok ? "PASS" : "FAIL");
  }
  return ok ? 0 : 1;
}

int cmd_train(const Globals& gl, const std::string& task_path, const std::string& spec_path, int epochs) {
  TaskConfig cfg = load_task_config(task_path);
  if (epochs >= 0) cfg.epochs = epochs;
  SteerableNetwork net = load_network(spec_path);
  const auto g = net.spec().group;
  if (g->name() != build_stabilizer(cfg.group)->name()) throw SpecError("task group differs from the network group");
  std::mt19937_64 rng(gl.seed);
  const auto train_set = generate_samples(cfg, g, cfg.train_samples, rng);
  const auto test_set = generate_samples(cfg, g, cfg.test_samples, rng);
  const auto result = train(net, net.init(gl.seed), train_set, cfg, rng);
  for (const auto& e : result.log) std::printf("epoch %d loss %.6f accuracy %.4f\n", e.epoch, e.loss, e.accuracy);

  // Every test sample under every element of the sweep.
  const auto sweep = sweep_elements(*g, net.spec().input_window, gl.seed);
  const auto plain = evaluate(net, result.params, test_set);
  double drift = 0.0, moved_correct = 0.0;
  for (const auto& s : test_set) {
    const Eigen::VectorXd base = net.forward(result.params, s.x);
    for (const auto& a : sweep) {
      const Eigen::VectorXd moved = net.forward(result.params, transform_input(*g, a, s.x));
      drift = std::max(drift, relative_residual(moved, base));
      moved_correct += predict(moved) == s.label;
    }
  }
  const double moved_accuracy = moved_correct / static_cast<double>(test_set.size() * sweep.size());
  std::printf("test accuracy %.4f, transformed %.4f over %zu group elements, max score drift %.3e\n", plain.accuracy,
              moved_accuracy, sweep.size(), drift);
  if (!gl.out.empty()) {
    save_params(gl.out, result.params);
    auto m = open_output(gl.out + "/metrics.csv");
    m << "epoch,loss,accuracy\n";
    for (const auto& e : result.log) m << e.epoch << "," << e.loss << "," << e.accuracy << "\n";
  }
  return drift <= kInvarianceTolerance && moved_accuracy == plain.accuracy ? 0 : 1;
}

int cmd_emit_basis(const Globals& gl, const std::string& group, int size, const std::string& format) {
  if (gl.out.empty()) throw SpecError("emit-basis needs --out");
  if (format != "pgm" && format != "csv") throw SpecError("--format must be pgm or csv");
  const auto g = build_stabilizer(group);
  const auto table = irrep_table(g);
  const auto dec = isotypic_decompose(canonical_filter_space(g, size), table);
  write_basis_files(gl.out, g, size, dec, table, format);
  std::printf("wrote %lld basis vectors of type (%s) to %s\n", static_cast<long long>(dec.basis.cols()),
              join(dec.type.multiplicities).c_str(), gl.out.c_str());
  return 0;
}

int cmd_gen_data(const Globals& gl, const std::string& task_path, int count) {
  if (gl.out.empty()) throw SpecError("gen-data needs --out");
  const TaskConfig cfg = load_task_config(task_path);
  const auto g = build_stabilizer(cfg.group);
  std::mt19937_64 rng(gl.seed);
  const auto samples = generate_samples(cfg, g, count >= 0 ? count : cfg.train_samples, rng);
  ensure_directory(gl.out);
  auto labels = open_output(gl.out + "/labels.csv");
  labels << "sample,label\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    write_feature_map_csv(gl.out + "/sample_" + std::to_string(i) + ".csv", samples[i].x);
    labels << i << "," << samples[i].label << "\n";
  }
  std::printf("wrote %zu samples to %s\n", samples.size(), gl.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariant network toolkit: groups, representations, intertwiners, steerable and group CNNs"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals gl;
  app.add_option("--seed", gl.seed, "random seed");
  app.add_option("--out", gl.out, "output directory or file");
  app.add_flag("--json", gl.json, "machine-readable output");

  std::string group = "D4", rep_text, pi_text, rho_text, pgm_dir, csv_dir, spec_path, task_path, format = "pgm";
  int size = 3, window = 7, translations = 16, epochs = -1, count = -1;

  auto* grp = app.add_subcommand("group", "group utilities");
  grp->require_subcommand(1);
  auto* dump = grp->add_subcommand("dump", "elements, point maps and multiplication table");
  dump->add_option("--group", group, "C4, D4, S2..S6")->required();

  auto* tables = app.add_subcommand("tables", "irrep characters and the type of the filter-space representation");
  tables->add_option("--group", group)->required();
  tables->add_option("--size", size, "filter size");

  auto* rep = app.add_subcommand("rep", "representation utilities");
  rep->require_subcommand(1);
  auto* dec = rep->add_subcommand("decompose", "characters, type and isotypic blocks");
  dec->add_option("--group", group)->required();
  dec->add_option("--rep", rep_text, "e.g. filter:3, 2xregular+irrep:E, type:2,1,1,1,1")->required();
  dec->add_option("--pgm-dir", pgm_dir, "write basis vectors of a filter space as PGM");

  auto* hom = app.add_subcommand("hom", "dimension of the intertwiner space by characters and by null space");
  hom->add_option("--group", group)->required();
  hom->add_option("--pi", pi_text)->required();
  hom->add_option("--rho", rho_text)->required();
  hom->add_option("--csv-dir", csv_dir, "write basis matrices as CSV");

  auto* verify = app.add_subcommand("verify", "equivariance suite for a network spec");
  verify->add_option("--spec", spec_path)->required();
  verify->add_option("--translations", translations, "random translations when the window exceeds 7");

  auto* gcnn = app.add_subcommand("gcnn-equiv", "two-layer G-CNN against its regular steerable twin");
  gcnn->add_option("--group", group)->required();
  gcnn->add_option("--window", window);

  auto* tr = app.add_subcommand("train", "train an invariant classifier on a synthetic motif task");
  tr->add_option("--task", task_path)->required();
  tr->add_option("--spec", spec_path)->required();
  tr->add_option("--epochs", epochs);

  auto* emit = app.add_subcommand("emit-basis", "isotypic basis of the filter space as images");
  emit->add_option("--group", group)->required();
  emit->add_option("--size", size);
  emit->add_option("--format", format, "pgm or csv");

  auto* gen = app.add_subcommand("gen-data", "synthetic samples as CSV");
  gen->add_option("--task", task_path)->required();
  gen->add_option("--count", count);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*dump) return cmd_group_dump(gl, group);
    if (*tables) return cmd_tables(gl, group, size);
    if (*dec) return cmd_rep_decompose(gl, group, rep_text, pgm_dir);
    if (*hom) return cmd_hom(gl, group, pi_text, rho_text, csv_dir);
    if (*verify) return cmd_verify(gl, spec_path, translations);
    if (*gcnn) return cmd_gcnn_equiv(gl, group, window);
    if (*tr) return cmd_train(gl, task_path, spec_path, epochs);
    if (*emit) return cmd_emit_basis(gl, group, size, format);
    if (*gen) return cmd_gen_data(gl, task_path, count);
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedGroupError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NoTableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SubgroupError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
