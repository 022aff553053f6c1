#include <zlib.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "delaynet/delaynet.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace delaynet;

namespace {

/// Everything that determines a run's results. The output directory and the
/// worker count are not part of it: they never change what is written.
struct RunConfig {
  std::string subcommand;
  std::string delay = "point(0)";
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::uint32_t replicas = 1;
  std::string format = "csv";
  // simulate / fringe-compare
  std::uint32_t n = 0;
  std::string mode = "direct";
  bool literal_pjss = false;
  std::vector<std::uint32_t> checkpoints;
  bool gzip = false;
  // limit-sample / fringe-compare
  std::uint64_t reps = 0;
  std::string sampler = "hazard";
  bool fringe = false;
  std::uint32_t size_cap = 6;
  std::uint32_t bootstrap = 200;
  // analyze
  std::string input;
  std::string method = "hill";
  double k_min = 0.0;
  double tolerance = 0.2;
};

json to_json(const RunConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  j["delay"] = c.delay;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["replicas"] = c.replicas;
  j["format"] = c.format;
  if (c.subcommand == "simulate") {
    j["n"] = c.n;
    j["mode"] = c.mode;
    j["literal_pjss"] = c.literal_pjss;
    j["checkpoints"] = c.checkpoints;
    j["gzip"] = c.gzip;
  } else if (c.subcommand == "limit-sample") {
    j["reps"] = c.reps;
    j["sampler"] = c.sampler;
    j["fringe"] = c.fringe;
    j["size_cap"] = c.size_cap;
  } else if (c.subcommand == "analyze") {
    j["input"] = c.input;
    j["method"] = c.method;
    j["k_min"] = c.k_min;
    j["tolerance"] = c.tolerance;
  } else if (c.subcommand == "fringe-compare") {
    j["n"] = c.n;
    j["reps"] = c.reps;
    j["size_cap"] = c.size_cap;
    j["bootstrap"] = c.bootstrap;
  }
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  c.subcommand = j.at("subcommand").get<std::string>();
  c.delay = j.value("delay", c.delay);
  c.alpha = j.value("alpha", c.alpha);
  c.seed = j.at("seed").get<std::uint64_t>();
  c.replicas = j.value("replicas", c.replicas);
  c.format = j.value("format", c.format);
  c.n = j.value("n", c.n);
  c.mode = j.value("mode", c.mode);
  c.literal_pjss = j.value("literal_pjss", c.literal_pjss);
  c.checkpoints = j.value("checkpoints", c.checkpoints);
  c.gzip = j.value("gzip", c.gzip);
  c.reps = j.value("reps", c.reps);
  c.sampler = j.value("sampler", c.sampler);
  c.fringe = j.value("fringe", c.fringe);
  c.size_cap = j.value("size_cap", c.size_cap);
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.input = j.value("input", c.input);
  c.method = j.value("method", c.method);
  c.k_min = j.value("k_min", c.k_min);
  c.tolerance = j.value("tolerance", c.tolerance);
  return c;
}

/// Read the config embedded in any output file: a JSON document with a
/// "config" field, or a text file with a "# config: {...}" line.
RunConfig load_embedded_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return from_json(json::parse(text).at("config"));
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    static const std::string tag = "# config: ";
    if (line.rfind(tag, 0) == 0) return from_json(json::parse(line.substr(tag.size())));
  }
  throw std::runtime_error(path + " carries no embedded config");
}

json versions() {
  return {{"delaynet", kVersion}, {"compiler", __VERSION__}, {"cplusplus", __cplusplus}};
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class Output {
 public:
  Output(fs::path dir, const RunConfig& config) : dir_(std::move(dir)), config_(config) {
    fs::create_directories(dir_);
  }

  std::string header() const {
    return "# delaynet " + std::string(kVersion) + "\n# config: " + to_json(config_).dump() + "\n";
  }

  /// Write a text series (CSV or edge list) with the config header.
  void text(const std::string& name, const std::string& body) {
    write_file(name, header() + body);
  }

  void gz(const std::string& name, const std::string& body) {
    const fs::path path = dir_ / name;
    gzFile f = gzopen(path.string().c_str(), "wb9");
    if (!f) throw std::runtime_error("cannot open " + path.string());
    const std::string all = header() + body;
    const int wrote = all.empty() ? 0 : gzwrite(f, all.data(), static_cast<unsigned>(all.size()));
    if (gzclose(f) != Z_OK || wrote != static_cast<int>(all.size()))
      throw std::runtime_error("write failed: " + path.string());
    written_.push_back(name);
  }

  /// Write a JSON document; the config and versions are added as fields.
  void document(const std::string& name, json body) {
    json doc;
    doc["config"] = to_json(config_);
    doc["versions"] = versions();
    for (auto& [k, v] : body.items()) doc[k] = v;
    write_file(name, doc.dump(2) + "\n");
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  void write_file(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
    written_.push_back(name);
  }

  fs::path dir_;
  RunConfig config_;
  std::vector<std::string> written_;
};

/// Series writer honouring --format: CSV rows or a JSON document.
void write_table(Output& out, const RunConfig& c, const std::string& stem, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) {
  if (c.format == "json") {
    json table = json::array();
    for (const auto& row : rows) {
      json r;
      for (std::size_t i = 0; i < columns.size(); ++i) r[columns[i]] = row[i];
      table.push_back(r);
    }
    out.document(stem + ".json", {{"rows", table}});
    return;
  }
  std::string body;
  for (std::size_t i = 0; i < columns.size(); ++i) body += (i ? "," : "") + columns[i];
  body += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) body += (i ? "," : "") + num(row[i]);
    body += '\n';
  }
  out.text(stem + ".csv", body);
}

json lambda_report(const DelayDistribution& delay) {
  try {
    const auto r = solve_lambda(delay);
    return {{"lambda", r.lambda},
            {"tail_exponent", r.tail_exponent()},
            {"residual", r.residual},
            {"method", to_string(r.method)},
            {"iterations", r.iterations}};
  } catch (const NoMalthusianRoot& e) {
    return {{"lambda", nullptr}, {"error", e.what()}};
  }
}

json mean_report(const DelayDistribution& delay) {
  if (!(delay.finite_mass() > 0.0)) return {{"mean", nullptr}, {"condensation", true}};
  const auto m = mean_degree(delay.alpha(), delay.finite_mass());
  return {{"mean", m.mean}, {"condensation", m.condensation}, {"p_finite", delay.finite_mass()}};
}

std::vector<std::uint32_t> default_checkpoints(std::uint32_t n) {
  std::vector<std::uint32_t> out;
  for (std::uint64_t m = 2; m < n; m *= 2) out.push_back(static_cast<std::uint32_t>(m));
  out.push_back(n);
  return out;
}

/// Fill defaults that depend on other fields, so outputs embed the resolved config.
void resolve(RunConfig& c) {
  if (c.subcommand != "simulate") return;
  if (c.n < 2) throw std::invalid_argument("simulate: --n must be >= 2");
  if (c.checkpoints.empty()) c.checkpoints = default_checkpoints(c.n);
  std::sort(c.checkpoints.begin(), c.checkpoints.end());
  if (c.checkpoints.back() > c.n) throw std::invalid_argument("simulate: checkpoint beyond --n");
}

json cmd_simulate(const RunConfig& c, Output& out, unsigned threads) {
  if (c.mode != "direct" && c.mode != "copying") throw std::invalid_argument("simulate: --mode must be direct or copying");
  const DelayDistribution delay = build(parse_delay(c.delay), c.alpha);

  struct Result {
    Tree tree;
    DegreeCounts counts;
    std::vector<std::pair<Vertex, Vertex>> trajectory;
  };
  auto results = run_replicas(c.replicas, threads, [&](std::size_t r) {
    GrowthConfig g;
    g.n = c.n;
    g.alpha = c.alpha;
    g.delay = delay;
    g.seed = stream_seed(c.seed, r);
    g.mode = c.mode == "copying" ? GrowthMode::Copying : GrowthMode::Direct;
    g.literal_pjss = c.literal_pjss;
    std::vector<Vertex> cps(c.checkpoints.begin(), c.checkpoints.end());
    Tree tree = grow(g);
    Result res{tree, degree_counts(tree), root_degree_trajectory(tree, cps)};
    return res;
  });

  json per_replica = json::array();
  std::map<Vertex, std::uint64_t> pooled;
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    const std::string tag = "_r" + std::to_string(r);
    std::ostringstream edges;
    write_edge_list(edges, res.tree);
    if (c.gzip)
      out.gz("tree" + tag + ".edges.gz", edges.str());
    else
      out.text("tree" + tag + ".edges", edges.str());

    std::vector<std::vector<double>> rows;
    Vertex max_degree = 0;
    for (auto [k, count] : res.counts.histogram) {
      rows.push_back({static_cast<double>(k), static_cast<double>(count)});
      pooled[k] += count;
      max_degree = std::max(max_degree, k);
    }
    write_table(out, c, "degrees" + tag, {"k", "count"}, rows);
    rows.clear();
    for (auto [m, root] : res.trajectory) rows.push_back({static_cast<double>(m), static_cast<double>(root)});
    write_table(out, c, "root" + tag, {"n", "root_degree"}, rows);

    const double root_children = res.trajectory.back().first == c.n
                                     ? res.trajectory.back().second
                                     : static_cast<double>(ChildIndex(res.tree).children(1).size());
    per_replica.push_back({{"replica", r},
                           {"stream_seed", stream_seed(c.seed, r)},
                           {"max_degree", max_degree},
                           {"root_degree", root_children},
                           {"root_share", root_children / c.n},
                           {"leaf_fraction", static_cast<double>(res.counts.count(1)) / c.n}});
  }
  std::vector<std::vector<double>> rows;
  for (auto [k, count] : pooled) rows.push_back({static_cast<double>(k), static_cast<double>(count)});
  write_table(out, c, "degrees_pooled", {"k", "count"}, rows);

  return {{"replicas", per_replica},
          {"theory", {{"q", delay.q()}, {"mean_degree", mean_report(delay)}, {"malthusian", lambda_report(delay)}}}};
}

/// Draw a fringe histogram through the edge route, overflowing past the cap.
template <class Rng>
FringeHistogram edge_bp_fringe_histogram(const DelayDistribution& delay, std::uint64_t reps, Vertex cap, Rng& rng) {
  FringeHistogram h(cap);
  for (std::uint64_t i = 0; i < reps; ++i) {
    auto t = detail::grow_edge_bp(delay, rng, cap);
    if (!t)
      h.add_overflow();
    else
      h.add(canonical_code(t->tree).bytes);
  }
  return h;
}

std::uint64_t share(std::uint64_t total, std::uint32_t parts, std::size_t r) {
  return total / parts + (r < total % parts ? 1 : 0);
}

json pmf_rows(const std::vector<std::uint64_t>& draws, std::vector<std::vector<double>>& rows) {
  std::map<std::uint64_t, std::uint64_t> counts;
  for (auto d : draws) ++counts[d];
  for (auto [k, n] : counts) {
    const Interval ci = wilson_interval(n, draws.size());
    rows.push_back({static_cast<double>(k), static_cast<double>(n), static_cast<double>(n) / draws.size(), ci.lo, ci.hi});
  }
  std::vector<double> xs(draws.begin(), draws.end());
  const auto m = mean_and_error<double>(xs);
  return {{"draws", draws.size()}, {"mean", m.mean}, {"std_error", m.std_error}};
}

json cmd_limit_sample(const RunConfig& c, Output& out, unsigned threads) {
  if (c.reps < 1) throw std::invalid_argument("limit-sample: --reps must be >= 1");
  if (c.sampler != "hazard" && c.sampler != "edge-bp" && c.sampler != "both")
    throw std::invalid_argument("limit-sample: --sampler must be hazard, edge-bp or both");
  const DelayDistribution delay = build(parse_delay(c.delay), c.alpha);
  const bool hazard = c.sampler != "edge-bp";
  const bool edge = c.sampler != "hazard";

  struct Result {
    std::vector<std::uint64_t> hazard, edge;
    FringeHistogram fringe_memory, fringe_edge;
  };
  auto results = run_replicas(c.replicas, threads, [&](std::size_t r) {
    auto rng = make_stream(c.seed, r);
    const std::uint64_t count = share(c.reps, c.replicas, r);
    Result res{{}, {}, FringeHistogram(c.size_cap), FringeHistogram(c.size_cap)};
    if (hazard)
      for (std::uint64_t i = 0; i < count; ++i) res.hazard.push_back(sample_degree_hazard(delay, rng));
    if (edge)
      for (std::uint64_t i = 0; i < count; ++i) res.edge.push_back(sample_edge_bp_degree(delay, rng));
    if (c.fringe && hazard) res.fringe_memory = limit_fringe_histogram(delay, count, c.size_cap, rng);
    if (c.fringe && edge) res.fringe_edge = edge_bp_fringe_histogram(delay, count, c.size_cap, rng);
    return res;
  });

  Result all{{}, {}, FringeHistogram(c.size_cap), FringeHistogram(c.size_cap)};
  for (const auto& res : results) {
    all.hazard.insert(all.hazard.end(), res.hazard.begin(), res.hazard.end());
    all.edge.insert(all.edge.end(), res.edge.begin(), res.edge.end());
    all.fringe_memory.merge(res.fringe_memory);
    all.fringe_edge.merge(res.fringe_edge);
  }

  json report;
  const std::vector<std::string> columns = {"k", "count", "pmf", "wilson_lo", "wilson_hi"};
  if (hazard) {
    std::vector<std::vector<double>> rows;
    report["hazard"] = pmf_rows(all.hazard, rows);
    write_table(out, c, "pmf_hazard", columns, rows);
  }
  if (edge) {
    std::vector<std::vector<double>> rows;
    report["edge_bp"] = pmf_rows(all.edge, rows);
    write_table(out, c, "pmf_edge_bp", columns, rows);
  }
  if (hazard && edge) {
    std::vector<double> a(all.hazard.begin(), all.hazard.end()), b(all.edge.begin(), all.edge.end());
    const auto ks = ks_two_sample(a, b);
    report["duality_ks"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
  }
  auto write_fringe = [&](const FringeHistogram& h, const std::string& stem) {
    std::ostringstream csv;
    h.write_csv(csv);
    if (c.format == "json") {
      json rows = json::object();
      for (const auto& [code, n] : h.counts()) rows[CanonicalCode{code, 0}.hex()] = h.probability(code);
      rows["OVERFLOW"] = h.overflow();
      out.document(stem + ".json", {{"probabilities", rows}});
    } else {
      out.text(stem + ".csv", csv.str());
    }
  };
  if (c.fringe && hazard) write_fringe(all.fringe_memory, "fringe_memory");
  if (c.fringe && edge) write_fringe(all.fringe_edge, "fringe_edge_bp");
  if (c.fringe && hazard && edge) report["fringe_tv"] = tv_distance(all.fringe_memory, all.fringe_edge);
  report["theory"] = {{"mean_degree", mean_report(delay)}};
  return report;
}

json cmd_solve_lambda(const RunConfig& c) {
  const DelayDistribution delay = build(parse_delay(c.delay), c.alpha);
  const auto r = solve_lambda(delay);
  json report = {{"lambda", r.lambda},
                 {"tail_exponent", r.tail_exponent()},
                 {"residual", r.residual},
                 {"method", to_string(r.method)},
                 {"iterations", r.iterations}};
  if (const auto* u = std::get_if<UniformPower>(&delay.spec().family))
    report["closed_form_exponential"] = lambda_exponential(u->theta, c.alpha);
  report["mean_degree"] = mean_report(delay);
  return report;
}

/// Degrees from a `k,count` histogram (CSV or our JSON rows) or one value per line.
std::vector<double> read_degrees(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("analyze: cannot open input " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<double> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    for (const auto& row : json::parse(text).at("rows"))
      out.insert(out.end(), row.at("count").get<std::uint64_t>(), row.at("k").get<double>());
    return out;
  }
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (std::isalpha(static_cast<unsigned char>(line[0]))) continue;  // column header
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      out.push_back(std::stod(line));
    } else {
      const double k = std::stod(line.substr(0, comma));
      const auto count = std::stoull(line.substr(comma + 1));
      out.insert(out.end(), count, k);
    }
  }
  if (out.empty()) throw std::runtime_error("analyze: no degrees in " + path);
  return out;
}

json cmd_analyze(const RunConfig& c, Output& out) {
  if (c.input.empty()) throw std::invalid_argument("analyze: --input is required");
  if (c.method != "hill" && c.method != "loglog") throw std::invalid_argument("analyze: --method must be hill or loglog");
  const auto degrees = read_degrees(c.input);
  const DelayDistribution delay = build(parse_delay(c.delay), c.alpha);
  TailOptions opt;
  opt.method = c.method == "hill" ? TailMethod::Hill : TailMethod::LogLogCcdf;
  opt.k_min = c.k_min;
  const TailFit fit = estimate_tail_exponent(degrees, opt);

  json verdicts = json::array();
  std::vector<std::vector<std::string>> table;
  auto verdict = [&](const std::string& quantity, double estimate, double std_error, double predicted,
                     double tolerance) {
    const bool pass = std::abs(estimate - predicted) <= tolerance;
    verdicts.push_back({{"quantity", quantity},
                        {"estimate", estimate},
                        {"std_error", std_error},
                        {"predicted", predicted},
                        {"tolerance", tolerance},
                        {"verdict", pass ? "consistent" : "inconsistent"}});
    table.push_back({quantity, num(estimate), num(std_error), num(predicted), num(tolerance),
                     pass ? "consistent" : "inconsistent"});
  };

  try {
    const auto lambda = solve_lambda(delay);
    verdict("tail_exponent_vs_inverse_lambda", fit.exponent, fit.std_error, lambda.tail_exponent(), c.tolerance);
  } catch (const NoMalthusianRoot&) {
  }
  const auto bern = std::get_if<Bernoulli>(&delay.spec().family);
  std::vector<double> sorted = degrees;
  const auto pmf = empirical_pmf<double>(sorted);
  const auto k_max = static_cast<std::uint64_t>(*std::max_element(degrees.begin(), degrees.end())) + 1000;
  if (bern && c.alpha == 0.0) {
    verdict("tail_exponent_vs_bernoulli", fit.exponent, fit.std_error, 2.0 / bern->p, c.tolerance);
    verdict("tv_vs_bernoulli_pmf", tv_to_reference(pmf, [&](std::uint64_t k) { return bernoulli_pmf(bern->p, k).pmf; }, k_max),
            0.0, 0.0, 0.02);
  }
  const auto atoms = delay.eta_atoms();
  if (delay.q() == 0.0 && atoms.size() == 1 && atoms[0].first == 0.0)
    verdict("tv_vs_no_delay_pmf", tv_to_reference(pmf, [&](std::uint64_t k) { return no_delay_pmf(c.alpha, k); }, k_max),
            0.0, 0.0, 0.01);
  std::vector<double> xs = degrees;
  const auto mean = mean_and_error<double>(xs);
  if (delay.finite_mass() > 0.0)
    verdict("mean_degree", mean.mean, mean.std_error, mean_degree(c.alpha, delay.finite_mass()).mean,
            3.0 * mean.std_error);

  if (c.format == "json") {
    out.document("analysis.json", {{"verdicts", verdicts}});
  } else {
    std::string body = "quantity,estimate,std_error,predicted,tolerance,verdict\n";
    for (const auto& row : table) {
      for (std::size_t i = 0; i < row.size(); ++i) body += (i ? "," : "") + row[i];
      body += '\n';
    }
    out.text("analysis.csv", body);
  }
  return {{"tail_fit",
           {{"exponent", fit.exponent},
            {"std_error", fit.std_error},
            {"method", to_string(fit.method)},
            {"k_min", fit.k_min},
            {"tail_size", fit.tail_size},
            {"sample_size", fit.sample_size}}},
          {"verdicts", verdicts}};
}

template <class Rng>
FringeHistogram resample(const FringeHistogram& h, Rng& rng) {
  std::vector<const std::string*> labels;
  std::vector<std::uint64_t> cumulative;
  std::uint64_t running = 0;
  for (const auto& [code, n] : h.counts()) {
    labels.push_back(&code);
    cumulative.push_back(running += n);
  }
  labels.push_back(nullptr);
  cumulative.push_back(running += h.overflow_count());
  FringeHistogram out(h.size_cap());
  for (std::uint64_t i = 0; i < h.samples(); ++i) {
    const auto u = uniform_index(rng, h.samples());
    const auto at = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    if (labels[at])
      out.add(*labels[at]);
    else
      out.add_overflow();
  }
  return out;
}

json cmd_fringe_compare(const RunConfig& c, Output& out, unsigned threads) {
  if (c.n < 2) throw std::invalid_argument("fringe-compare: --n must be >= 2");
  if (c.reps < 1) throw std::invalid_argument("fringe-compare: --reps must be >= 1");
  const DelayDistribution delay = build(parse_delay(c.delay), c.alpha);
  GrowthConfig g;
  g.n = c.n;
  g.alpha = c.alpha;
  g.delay = delay;
  g.seed = stream_seed(c.seed, 0);
  const FringeHistogram empirical = empirical_fringe(grow(g), c.size_cap);

  auto parts = run_replicas(c.replicas, threads, [&](std::size_t r) {
    auto rng = make_stream(c.seed, r + 1);
    return limit_fringe_histogram(delay, share(c.reps, c.replicas, r), c.size_cap, rng);
  });
  FringeHistogram limit(c.size_cap);
  for (const auto& p : parts) limit.merge(p);
  const double tv = tv_distance(empirical, limit);

  auto rng = make_stream(c.seed, c.replicas + 1);
  std::vector<double> boot;
  for (std::uint32_t b = 0; b < c.bootstrap; ++b) boot.push_back(tv_distance(resample(empirical, rng), resample(limit, rng)));
  std::sort(boot.begin(), boot.end());
  json ci = nullptr;
  if (!boot.empty()) {
    auto q = [&](double p) { return boot[static_cast<std::size_t>(std::floor(p * (boot.size() - 1)))]; };
    ci = {{"level", 0.95}, {"lo", q(0.025)}, {"hi", q(0.975)}, {"resamples", boot.size()}};
  }

  for (const auto& [h, stem] : {std::pair{&empirical, "fringe_empirical"}, std::pair{static_cast<const FringeHistogram*>(&limit), "fringe_limit"}}) {
    std::ostringstream csv;
    h->write_csv(csv);
    out.text(std::string(stem) + ".csv", csv.str());
  }
  return {{"tv", tv}, {"bootstrap_ci", ci}, {"empirical_samples", empirical.samples()}, {"limit_samples", limit.samples()}};
}

int fail(const std::string& operation, const std::string& type, const std::string& message, json extra = {}) {
  json err = {{"operation", operation}, {"error", {{"type", type}, {"message", message}}}};
  for (auto& [k, v] : extra.items()) err["error"][k] = v;
  std::cerr << err.dump() << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed preferential attachment trees: simulation and limit analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RunConfig c;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned threads = default_threads();
  std::string from;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--delay", c.delay, "Delay law, e.g. unifpow(theta=1)")->capture_default_str();
    sub->add_option("--alpha", c.alpha, "Attachment offset alpha >= 0")->capture_default_str();
    sub->add_option("--seed", seed, "Master seed (random when omitted; recorded in outputs)");
    sub->add_option("--replicas", c.replicas, "Independent replicas")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads (default DELAYNET_THREADS)")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--format", c.format, "Series format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  };

  auto* sim = app.add_subcommand("simulate", "Grow delayed preferential attachment trees");
  common(sim);
  sim->add_option("--n", c.n, "Final tree size")->required();
  sim->add_option("--mode", c.mode, "direct or copying")->check(CLI::IsMember({"direct", "copying"}));
  sim->add_flag("--literal-pjss", c.literal_pjss, "Copying mode: literal edge range");
  sim->add_option("--checkpoints", c.checkpoints, "Sizes at which to record the root degree")->delimiter(',');
  sim->add_flag("--gzip", c.gzip, "Compress edge lists");

  auto* lim = app.add_subcommand("limit-sample", "Sample the limit degree law and fringe");
  common(lim);
  lim->add_option("--reps", c.reps, "Draws (split across replicas)")->required();
  lim->add_option("--sampler", c.sampler, "hazard, edge-bp or both")
      ->check(CLI::IsMember({"hazard", "edge-bp", "both"}))
      ->capture_default_str();
  lim->add_flag("--fringe", c.fringe, "Also tabulate fringe trees");
  lim->add_option("--size-cap", c.size_cap, "Fringe size cap")->check(CLI::PositiveNumber)->capture_default_str();

  auto* sol = app.add_subcommand("solve-lambda", "Malthusian parameter of the limit process");
  common(sol);

  auto* ana = app.add_subcommand("analyze", "Tail fit and comparison against predictions");
  common(ana);
  ana->add_option("--input", c.input, "Degree histogram CSV (k,count) or one degree per line")->required();
  ana->add_option("--method", c.method, "hill or loglog")->check(CLI::IsMember({"hill", "loglog"}))->capture_default_str();
  ana->add_option("--k-min", c.k_min, "Tail threshold (default: 0.99 quantile)");
  ana->add_option("--tolerance", c.tolerance, "Allowed exponent deviation")->capture_default_str();

  auto* fc = app.add_subcommand("fringe-compare", "Empirical fringe of a tree against the limit fringe");
  common(fc);
  fc->add_option("--n", c.n, "Tree size")->required();
  fc->add_option("--reps", c.reps, "Limit draws")->required();
  fc->add_option("--size-cap", c.size_cap, "Fringe size cap")->check(CLI::PositiveNumber)->capture_default_str();
  fc->add_option("--bootstrap", c.bootstrap, "Bootstrap resamples for the TV interval")->capture_default_str();

  auto* rerun = app.add_subcommand("rerun", "Repeat a run from the config embedded in one of its outputs");
  rerun->add_option("file", from, "Any output file of an earlier run")->required();
  rerun->add_option("--out", out_dir, "Output directory")->capture_default_str();
  rerun->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"operation", "parse"}, {"error", {{"type", "usage"}, {"message", e.what()}}}}.dump() << std::endl;
    return 2;
  }

  std::string operation = app.get_subcommands().front()->get_name();
  try {
    if (operation == "rerun") {
      c = load_embedded_config(from);
      operation = c.subcommand;
    } else {
      c.subcommand = operation;
      c.seed = seed ? *seed : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
    }
    resolve(c);
    Output out(out_dir, c);
    json outputs;
    if (operation == "simulate")
      outputs = cmd_simulate(c, out, threads);
    else if (operation == "limit-sample")
      outputs = cmd_limit_sample(c, out, threads);
    else if (operation == "solve-lambda")
      outputs = cmd_solve_lambda(c);
    else if (operation == "analyze")
      outputs = cmd_analyze(c, out);
    else if (operation == "fringe-compare")
      outputs = cmd_fringe_compare(c, out, threads);
    else
      throw std::invalid_argument("unknown subcommand " + operation);

    json report = {{"operation", operation}, {"inputs", to_json(c)}, {"outputs", outputs},
                   {"diagnostics", {{"files", out.written()}}}};
    out.document("report.json", report);
    std::cout << json{{"operation", operation}, {"config", to_json(c)}, {"outputs", outputs}}.dump(2) << std::endl;
    return 0;
  } catch (const DelayParseError& e) {
    return fail(operation, "delay_parse", e.what(), {{"position", e.position()}});
  } catch (const ReplicaError& e) {
    return fail(operation, "replica", e.what(), {{"replica", e.index()}});
  } catch (const NoMalthusianRoot& e) {
    return fail(operation, "no_malthusian_root", e.what());
  } catch (const InsufficientTail& e) {
    return fail(operation, "insufficient_tail", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(operation, "invalid_config", e.what());
  } catch (const std::exception& e) {
    return fail(operation, "runtime", e.what());
  }
}
