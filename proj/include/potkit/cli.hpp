#pragma once

// Batch front end. run_cli() parses flags (optionally merged with a flat
// `key = value` config file), runs one experiment, writes its CSV/JSON
// artifacts and a manifest, and returns the exit code: 0 success, 1 usage
// error, 2 verification failure.

#include <chrono>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <Eigen/Core>
#include "json.hpp"

#include "potkit/acceptance.hpp"
#include "potkit/bm.hpp"
#include "potkit/disk.hpp"
#include "potkit/ladder.hpp"
#include "potkit/measure_classes.hpp"
#include "potkit/pcaf_mc.hpp"
#include "potkit/report.hpp"

namespace potkit::cli {

inline constexpr const char* kVersion = "0.1.0";

// Flat config file: one `key = value` per line, `#` starts a comment.
inline std::map<std::string, std::string> parse_config(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number list: '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError("empty number list");
  return out;
}

struct Common {
  std::string config;
  std::string out_dir = "potkit_out";
  std::uint64_t seed = 42;
  std::string format = "csv";
  std::vector<std::string> tol;
};

struct Params {
  // ladder
  std::size_t n = 40;
  std::size_t tail_terms = 60;
  std::string policy = "kill";
  std::string times = "1e-2,1e-3,1e-4";
  // bm
  std::optional<int> d;
  std::optional<double> beta;
  bool sweep = false;
  std::string sweep_a = "0.5,0.25,0.125,0.0625,0.03125";
  std::string probe;
  double inner = 1e-6, outer = 10.0;
  // disk
  std::string ns = "2,4,8,16,32";
  std::size_t grid = 512;
  std::string boundary = "neumann";
  // mc
  std::string model = "ladder";
  std::size_t paths = 100000;
  double t = 1.0;
  double alpha = 0.0;
  double x0 = 0.0;
  std::string chain;
  std::string density;
  // classify
  std::string measure = "ladder";
  std::string sizes = "10,20,30,40";
  std::string alphas = "1,10,100,1000";
  // verify-all
  std::string only;
};

namespace detail {

inline bool is_flag_present(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

inline std::string option_value(const std::vector<std::string>& args, const std::string& flag) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind(flag + "=", 0) == 0) return args[i].substr(flag.size() + 1);
  }
  return "";
}

inline double z_score(double estimate, double oracle, double se) {
  return se > 0.0 ? (estimate - oracle) / se : 0.0;
}

inline Table classification_table(const std::vector<int>& ds, const std::vector<double>& betas) {
  Table t{"classification", {"d", "beta", "in_kato", "in_s0"}, {}};
  for (int d : ds)
    for (double b : betas) {
      const bm::Classification c = bm::power_law_classify(d, b);
      t.add_row({static_cast<long long>(d), b, c.in_kato, c.in_s0});
    }
  return t;
}

inline bm::Region parse_region(const std::string& s) {
  if (s == "J1") return bm::Region::J1;
  if (s == "J2") return bm::Region::J2;
  if (s == "J3") return bm::Region::J3;
  if (s == "J4") return bm::Region::J4;
  throw UsageError("unknown energy region '" + s + "' (J1, J2, J3, J4)");
}

inline Report run_ladder(const Params& p, const Common&) {
  if (p.policy != "kill" && p.policy != "reflect") throw UsageError("--policy must be kill or reflect");
  const ladder::TailPolicy policy = p.policy == "kill" ? ladder::TailPolicy::Kill : ladder::TailPolicy::ReflectTo0;
  Report r;
  r.experiment = "ladder";
  r.params = {{"n", p.n}, {"tail_terms", p.tail_terms}, {"policy", p.policy}, {"times", parse_list(p.times)}};
  Table pot{"potentials", {"state", "solved", "closed_form", "abs_diff"}, {}};
  for (const auto& row : ladder::potential_table(p.n, p.tail_terms, policy))
    pot.add_row({static_cast<long long>(row.state), row.solved, row.closed_form, row.abs_diff});
  Table kato{"kato", {"t", "sup_exact", "lower_bound"}, {}};
  for (const auto& row : ladder::kato_curve(p.n, parse_list(p.times), policy))
    kato.add_row({row.t, row.sup_exact, row.lower_bound});
  r.tables = {pot, kato};
  r.diagnostics = {{"u0_closed_form", ladder::closed_form_u0(p.tail_terms)}};
  r.attachments.push_back({"ladder_chain.json", chain_to_json(ladder::build_ladder({p.n, policy})).dump(2) + "\n"});
  return r;
}

inline Report run_bm(const Params& p, const Common&, std::ostream& out) {
  Report r;
  r.experiment = "bm";
  const std::vector<int> ds = p.d ? std::vector<int>{*p.d} : std::vector<int>{3, 4, 5};
  const std::vector<double> betas =
      p.beta ? std::vector<double>{*p.beta} : std::vector<double>{-1.0, 0.0, 1.0, 1.5, 1.75, 2.0, 2.4, 2.6, 3.0};
  for (int d : ds) bm::check_dimension(d);
  r.params = {{"d", ds}, {"beta", betas}, {"sweep", p.sweep}, {"probe", p.probe}};
  r.tables.push_back(classification_table(ds, betas));
  for (const auto& row : r.tables.back().rows)
    out << "d=" << format_cell(row[0]) << " beta=" << format_cell(row[1]) << " kato=" << format_cell(row[2])
        << " s0=" << format_cell(row[3]) << "\n";
  nlohmann::json intersections = nlohmann::json::object();
  for (int d : ds) {
    const bm::Interval i = bm::intersection_report(d);
    intersections[std::to_string(d)] =
        i.empty() ? nlohmann::json("empty") : nlohmann::json::array({i.lower, i.upper});
  }
  r.diagnostics["intersection"] = intersections;
  const std::vector<double> grid = bm::default_x_grid();
  r.diagnostics["x_grid"] = {{"points", grid.size()}, {"min_positive", grid[1]}, {"max", grid.back()}, {"origin", true}};
  if (p.sweep) {
    const std::vector<double> as = parse_list(p.sweep_a);
    Table sweep{"kato_sweep", {"d", "beta", "a", "sup", "argmax", "divergent"}, {}};
    nlohmann::json slopes = nlohmann::json::object();
    for (int d : ds)
      for (double b : betas) {
        std::vector<double> sups;
        bool finite = true;
        for (const auto& row : bm::kato_sweep(d, b, as, grid)) {
          sweep.add_row({static_cast<long long>(d), b, row.a, row.sup, row.argmax, row.divergent});
          sups.push_back(row.sup);
          finite = finite && !row.divergent && row.sup > 0.0;
        }
        if (finite && as.size() >= 2)
          slopes[std::to_string(d) + "," + format_number(b)] = bm::loglog_slope(as, sups);
      }
    r.tables.push_back(sweep);
    r.diagnostics["sweep_slopes"] = slopes;
  }
  if (!p.probe.empty()) {
    const bm::Region region = parse_region(p.probe);
    Table probe{"energy_probe", {"d", "beta", "region", "cutoff", "value", "slope"}, {}};
    for (int d : ds)
      for (double b : betas)
        for (const auto& pt : bm::energy_probe(d, b, region, {p.inner, p.outer}).ladder)
          probe.add_row({static_cast<long long>(d), b, std::string(bm::to_string(region)), pt.cutoff, pt.value, pt.slope});
    r.tables.push_back(probe);
  }
  return r;
}

inline Report run_disk(const Params& p, const Common&) {
  if (p.boundary != "neumann" && p.boundary != "dirichlet") throw UsageError("--boundary must be neumann or dirichlet");
  const disk::Boundary b = p.boundary == "neumann" ? disk::Boundary::Neumann : disk::Boundary::Dirichlet;
  Report r;
  r.experiment = "disk";
  std::vector<int> ns;
  for (double v : parse_list(p.ns)) {
    if (v < 2 || v != std::floor(v)) throw UsageError("--n values must be integers >= 2");
    ns.push_back(static_cast<int>(v));
  }
  r.params = {{"n", ns}, {"grid", p.grid}, {"boundary", p.boundary}};
  Table conv{"convergence", {"n", "sup_u_diff", "miyadera_lower_bound"}, {}};
  Table eq{"equilibrium", {"n", "sup_error", "a_solved", "a_formula", "sign_mismatch"}, {}};
  for (int n : ns) {
    conv.add_row({static_cast<long long>(n), disk::sup_distance_to_limit(n, p.grid),
                  disk::disk_noncauchy(n, 2 * n, p.grid).lower_bound});
    const disk::EquilibriumResult e = disk::verify_equilibrium(n, b, p.grid);
    eq.add_row({static_cast<long long>(n), e.sup_error, e.a_solved, e.a_formula, e.sign_mismatch});
  }
  r.tables = {conv, eq};
  r.diagnostics = {{"limit", disk::noncauchy_limit()},
                   {"boundary", p.boundary},
                   {"grid", {{"kind", "chebyshev-lobatto"}, {"points", p.grid}}}};
  return r;
}

inline Report run_mc(const Params& p, const Common& c) {
  Report r;
  r.experiment = "mc";
  nlohmann::json result;
  if (p.model == "ladder" || p.model == "chain") {
    std::optional<Chain> loaded;
    DiscreteMeasure mu;
    if (p.model == "chain") {
      if (p.chain.empty()) throw UsageError("--model chain needs --chain FILE");
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(read_text(p.chain));
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("cannot parse chain file '" + p.chain + "': " + e.what());
      }
      loaded.emplace(chain_from_json(doc));
      Vector rho = Vector::Ones(static_cast<Eigen::Index>(loaded->size()));
      if (!p.density.empty()) {
        const std::vector<double> d = parse_list(p.density);
        if (d.size() != loaded->size()) throw UsageError("--density needs one value per state");
        rho = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
      }
      mu = DiscreteMeasure(rho.cwiseProduct(loaded->weights()));
    } else {
      loaded.emplace(ladder::build_ladder({p.n}));
      mu = ladder::ladder_measure(p.n);
    }
    const Chain& chain = *loaded;
    if (p.x0 < 0 || p.x0 != std::floor(p.x0) || p.x0 >= static_cast<double>(chain.size()))
      throw UsageError("--x0 must be a state index of the chain");
    const auto x = static_cast<std::size_t>(p.x0);
    McEstimate e;
    double oracle;
    if (p.alpha > 0.0) {
      e = mc_expectation(chain, mu, x, std::numeric_limits<double>::infinity(), p.paths, c.seed, p.alpha);
      oracle = potential_u1(chain, mu, p.alpha)[x];
    } else {
      e = mc_expectation(chain, mu, x, p.t, p.paths, c.seed);
      oracle = expected_pcaf(chain, mu, p.t)[static_cast<Eigen::Index>(x)];
    }
    result = {{"estimate", e.mean}, {"stderr", e.std_error}, {"n_paths", e.n_paths}, {"seed", e.seed},
              {"oracle", oracle}, {"z", z_score(e.mean, oracle, e.std_error)}};
    r.params = {{"model", p.model}, {"states", chain.size()}, {"chain", p.chain}, {"density", p.density}, {"t", p.alpha > 0.0 ? nlohmann::json("inf") : nlohmann::json(p.t)},
                {"alpha", p.alpha}, {"x0", x}, {"paths", p.paths}};
  } else if (p.model == "bm") {
    const double beta = p.beta.value_or(1.0);
    if (p.alpha != 0.0) throw UsageError("--alpha is not supported for --model bm");
    const BmEstimate e = mc_expectation_bm(beta, {p.x0, 0.0, 0.0}, p.t, p.paths, c.seed);
    const double oracle = bm_expected_pcaf(beta, std::abs(p.x0), p.t);
    result = {{"estimate", e.estimate.mean}, {"stderr", e.estimate.std_error}, {"n_paths", e.estimate.n_paths},
              {"seed", e.estimate.seed}, {"oracle", oracle}, {"z", z_score(e.estimate.mean, oracle, e.estimate.std_error)},
              {"dt", e.dt}, {"halvings", e.halvings}, {"stable", e.stable}};
    r.params = {{"model", p.model}, {"d", 3}, {"beta", beta}, {"t", p.t}, {"x0", {p.x0, 0.0, 0.0}}, {"paths", p.paths}};
  } else {
    throw UsageError("--model must be ladder, chain or bm");
  }
  Table t{"estimate", {"estimate", "stderr", "n_paths", "seed", "oracle", "z"}, {}};
  t.add_row({result["estimate"].get<double>(), result["stderr"].get<double>(),
             static_cast<long long>(result["n_paths"].get<std::size_t>()),
             static_cast<long long>(result["seed"].get<std::uint64_t>()), result["oracle"].get<double>(),
             result["z"].get<double>()});
  r.tables = {t};
  r.diagnostics = result;
  return r;
}

inline Report run_classify(const Params& p, const Common&) {
  if (p.measure != "ladder" && p.measure != "geometric" && p.measure != "zero")
    throw UsageError("--measure must be ladder, geometric or zero");
  Report r;
  r.experiment = "classify";
  std::vector<Chain> family;
  std::vector<DiscreteMeasure> mus;
  std::size_t largest = 0;
  for (double v : parse_list(p.sizes)) {
    if (v < 2 || v != std::floor(v)) throw UsageError("--sizes must be integers >= 2");
    const auto n = static_cast<std::size_t>(v);
    largest = std::max(largest, n);
    family.push_back(ladder::build_ladder({n}));
    const Chain& c = family.back();
    if (p.measure == "ladder") {
      mus.push_back(ladder::ladder_measure(n));
    } else if (p.measure == "geometric") {
      Vector a(static_cast<Eigen::Index>(c.size()));
      for (Eigen::Index x = 0; x < a.size(); ++x) a[x] = std::ldexp(1.0, -static_cast<int>(x)) * c.weights()[x];
      mus.emplace_back(a);
    } else {
      mus.emplace_back(Vector::Zero(static_cast<Eigen::Index>(c.size())));
    }
  }
  Nest nest;
  for (std::size_t k = 0; k < largest; ++k) nest.push_back(state_range(0, k));
  const std::vector<double> alphas = parse_list(p.alphas), times = parse_list(p.times);
  const ClassReport rep = family_classify(family, mus, alphas, times, nest);
  r.params = {{"model", "ladder"}, {"measure", p.measure}, {"sizes", parse_list(p.sizes)}, {"alphas", alphas},
              {"times", times}};
  Table verdicts{"verdicts", {"class", "verdict"}, {}};
  const nlohmann::json rep_json = rep.to_json();
  for (const auto& [k, v] : rep_json["verdicts"].items()) verdicts.add_row({k, v.get<std::string>()});
  Table kato{"kato", {"t", "sup", "lower_bound", "upper_bound"}, {}};
  for (std::size_t i = 0; i < times.size(); ++i)
    kato.add_row({times[i], rep.kato_curve[i], rep.kato_lower[i], rep.kato_upper[i]});
  Table tail{"tail", {"k", "tail_potential_sup"}, {}};
  for (std::size_t k = 0; k < rep.tail_curve.size(); ++k) tail.add_row({static_cast<long long>(k), rep.tail_curve[k]});
  r.tables = {verdicts, kato, tail};
  r.diagnostics = rep_json;
  return r;
}

inline Report run_verify_all(const Params& p, const Common& c, std::ostream& out, std::vector<int>& failed) {
  Report r;
  r.experiment = "verify-all";
  std::vector<int> ids;
  if (p.only.empty()) {
    for (int i = 1; i <= acceptance::kCriteria; ++i) ids.push_back(i);
  } else {
    for (double v : parse_list(p.only)) {
      if (v < 1 || v > acceptance::kCriteria || v != std::floor(v)) throw UsageError("--only takes criterion ids 1..9");
      ids.push_back(static_cast<int>(v));
    }
  }
  acceptance::Options opt;
  opt.seed = c.seed;
  r.params = {{"criteria", ids}, {"seed", c.seed}};
  Table t{"summary", {"criterion", "title", "passed", "seconds", "budget_seconds", "detail"}, {}};
  for (int id : ids) {
    const acceptance::CriterionResult res = acceptance::run_criterion(id, opt);
    out << res.line() << "\n";
    out.flush();
    t.add_row({static_cast<long long>(id), res.title, res.passed(), res.seconds, res.budget_seconds, res.detail});
    r.diagnostics[std::to_string(id)] = res.data;
    if (!res.passed()) failed.push_back(id);
  }
  r.tables = {t};
  return r;
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  tolerances() = Tolerances{};
  Common common;
  if (const char* env = std::getenv("POTKIT_SEED")) {
    try {
      common.seed = std::stoull(env);
    } catch (const std::exception&) {
      err << "error: POTKIT_SEED is not an unsigned integer: " << env << "\n";
      return 1;
    }
  }
  Params p;

  CLI::App app{"potkit: potential-theory experiments on Markov chains, Brownian motion and the unit disk"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(0, 1);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "flat key = value config file (flags override it)");
    sub->add_option("--out", common.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", common.seed, "random seed (default: $POTKIT_SEED or 42)");
    sub->add_option("--format", common.format, "artifact format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_option("--tol", common.tol, "tolerance override name=value (repeatable)");
  };
  CLI::App* ladder_cmd = app.add_subcommand("ladder", "ladder counterexample: potentials table and Kato curve");
  add_common(ladder_cmd);
  ladder_cmd->add_option("--n", p.n, "truncation level")->capture_default_str()->check(CLI::Range(2, 60));
  ladder_cmd->add_option("--tail-terms", p.tail_terms, "closed-form series terms")->capture_default_str();
  ladder_cmd->add_option("--policy", p.policy, "tail policy: kill or reflect")->capture_default_str();
  ladder_cmd->add_option("--times", p.times, "comma-separated Kato times")->capture_default_str();

  CLI::App* bm_cmd = app.add_subcommand("bm", "power-law measures for Brownian motion");
  add_common(bm_cmd);
  bm_cmd->add_option("--d", p.d, "dimension (default 3,4,5)");
  bm_cmd->add_option("--beta", p.beta, "exponent (default: the classification grid)");
  bm_cmd->add_flag("--sweep", p.sweep, "numeric Kato sweep sup_x I(x, a)");
  bm_cmd->add_option("--sweep-a", p.sweep_a, "comma-separated truncation radii")->capture_default_str();
  bm_cmd->add_option("--probe", p.probe, "energy probe region J1..J4");
  bm_cmd->add_option("--inner", p.inner, "inner cutoff for probes")->capture_default_str();
  bm_cmd->add_option("--outer", p.outer, "outer cutoff for probes")->capture_default_str();

  CLI::App* disk_cmd = app.add_subcommand("disk", "unit disk: sup-norm convergence and equilibrium check");
  add_common(disk_cmd);
  disk_cmd->add_option("--n", p.ns, "comma-separated n values")->capture_default_str();
  disk_cmd->add_option("--grid", p.grid, "Chebyshev grid points")->capture_default_str();
  disk_cmd->add_option("--boundary", p.boundary, "neumann or dirichlet")->capture_default_str();

  CLI::App* mc_cmd = app.add_subcommand("mc", "Monte Carlo PCAF estimate against its exact value");
  add_common(mc_cmd);
  mc_cmd->add_option("--model", p.model, "ladder, chain or bm")->capture_default_str();
  mc_cmd->add_option("--paths", p.paths, "number of paths")->capture_default_str();
  mc_cmd->add_option("--t", p.t, "time horizon")->capture_default_str();
  mc_cmd->add_option("--alpha", p.alpha, "discount rate (ladder; 0 = plain A_t)")->capture_default_str();
  mc_cmd->add_option("--x0", p.x0, "start state (ladder) or |x| along e1 (bm)")->capture_default_str();
  mc_cmd->add_option("--n", p.n, "ladder truncation level")->capture_default_str();
  mc_cmd->add_option("--beta", p.beta, "exponent for bm (default 1)");
  mc_cmd->add_option("--chain", p.chain, "chain JSON document for --model chain");
  mc_cmd->add_option("--density", p.density, "comma-separated dmu/dm for --model chain (default 1)");

  CLI::App* classify_cmd = app.add_subcommand("classify", "family-level class verdicts on ladder truncations");
  add_common(classify_cmd);
  classify_cmd->add_option("--measure", p.measure, "ladder, geometric or zero")->capture_default_str();
  classify_cmd->add_option("--sizes", p.sizes, "comma-separated truncation levels")->capture_default_str();
  classify_cmd->add_option("--alphas", p.alphas, "comma-separated resolvent orders")->capture_default_str();
  classify_cmd->add_option("--times", p.times, "comma-separated decreasing times")->capture_default_str();

  CLI::App* verify_cmd = app.add_subcommand("verify-all", "run the acceptance criteria");
  add_common(verify_cmd);
  verify_cmd->add_option("--only", p.only, "comma-separated criterion ids");

  // Merge the config file: its keys become flags unless given on the command line.
  try {
    const std::string config_path = detail::option_value(args, "--config");
    if (!config_path.empty()) {
      const auto cfg = parse_config(read_text(config_path));
      std::string experiment;
      std::size_t sub_pos = args.size();
      for (std::size_t i = 0; i < args.size(); ++i)
        if (app.get_subcommand_no_throw(args[i]) != nullptr) {
          sub_pos = i;
          experiment = args[i];
          break;
        }
      if (experiment.empty()) {
        const auto it = cfg.find("experiment");
        if (it == cfg.end()) throw UsageError("no experiment given on the command line or in the config file");
        experiment = it->second;
        if (app.get_subcommand_no_throw(experiment) == nullptr) throw UsageError("unknown experiment '" + experiment + "'");
        args.insert(args.begin(), experiment);
        sub_pos = 0;
      } else if (const auto it = cfg.find("experiment"); it != cfg.end() && it->second != experiment) {
        throw UsageError("config experiment '" + it->second + "' conflicts with '" + experiment + "'");
      }
      CLI::App* sub = app.get_subcommand_no_throw(experiment);
      std::vector<std::string> injected;
      for (const auto& [key, value] : cfg) {
        if (key == "experiment" || key == "config") continue;
        if (key.rfind("tol.", 0) == 0) {
          injected.push_back("--tol");
          injected.push_back(key.substr(4) + "=" + value);
          continue;
        }
        if (sub->get_option_no_throw("--" + key) == nullptr)
          throw UsageError("unknown config key '" + key + "' for experiment '" + experiment + "'");
        if (detail::is_flag_present(args, key)) continue;
        const CLI::Option* opt = sub->get_option("--" + key);
        if (opt->get_type_size() == 0) {
          if (value == "true" || value == "1") injected.push_back("--" + key);
          else if (value != "false" && value != "0") throw UsageError("flag '" + key + "' takes true or false");
        } else {
          injected.push_back("--" + key);
          injected.push_back(value);
        }
      }
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1), injected.begin(), injected.end());
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }
  if (app.get_subcommands().empty()) {
    err << "error: no experiment given\n" << app.help();
    return 1;
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string experiment = sub->get_name();

  for (const std::string& kv : common.tol) {
    const auto eq = kv.find('=');
    double value = 0.0;
    bool ok = eq != std::string::npos;
    if (ok) {
      try {
        value = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok || !set_tolerance(kv.substr(0, eq), value)) {
      err << "error: bad tolerance override '" << kv << "'\n";
      return 1;
    }
  }

  const auto start = std::chrono::steady_clock::now();
  Report report;
  std::vector<int> failed;
  try {
    if (experiment == "ladder") report = detail::run_ladder(p, common);
    else if (experiment == "bm") report = detail::run_bm(p, common, out);
    else if (experiment == "disk") report = detail::run_disk(p, common);
    else if (experiment == "mc") report = detail::run_mc(p, common);
    else if (experiment == "classify") report = detail::run_classify(p, common);
    else report = detail::run_verify_all(p, common, out, failed);

    const Format format = common.format == "json" ? Format::Json : Format::Csv;
    std::vector<std::filesystem::path> written = emit_report(report, format, common.out_dir);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json manifest;
    manifest["experiment"] = experiment;
    manifest["args"] = args;
    manifest["params"] = report.params;
    manifest["seed"] = common.seed;
    manifest["format"] = common.format;
    manifest["tolerance_overrides"] = common.tol;
    manifest["versions"] = {{"potkit", kVersion},
                            {"compiler", __VERSION__},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                          "." + std::to_string(EIGEN_MINOR_VERSION)},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                            {"cli11", CLI11_VERSION}};
    std::vector<std::string> names;
    for (const auto& w : written) names.push_back(w.filename().string());
    manifest["artifacts"] = names;
    manifest["wall_time_seconds"] = wall;
    const auto manifest_path = std::filesystem::path(common.out_dir) / (experiment + "_manifest.json");
    write_text(manifest_path, manifest.dump(2) + "\n");
    if (experiment != "verify-all" && experiment != "bm") {
      for (const auto& w : written) out << "wrote " << w.string() << "\n";
    }
    out << "manifest " << manifest_path.string() << "\n";
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const VerificationFailure& e) {
    err << "verification failed: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  if (!failed.empty()) {
    err << "verification failed: criteria";
    for (int id : failed) err << " " << id;
    err << "\n";
    return 2;
  }
  return 0;
}

}  // namespace potkit::cli
