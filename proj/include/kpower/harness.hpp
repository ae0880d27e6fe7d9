#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "kpower/embedder.hpp"
#include "kpower/expansion.hpp"
#include "kpower/models.hpp"
#include "kpower/power_cycle.hpp"
#include "kpower/regularity.hpp"
#include "kpower/serialization.hpp"
#include "kpower/typicality.hpp"

namespace kpower {

inline constexpr const char* kConfigSchema = "kpower.config/1";
inline constexpr const char* kTrialSchema = "kpower.trial/1";
inline constexpr const char* kSummarySchema = "kpower.summary/1";

/// Invalid configuration; `path` names the offending field (dotted).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& msg)
      : std::runtime_error(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class HashMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config

namespace detail {

inline const Json* find_path(const Json& root, const std::string& path) {
  const Json* cur = &root;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

template <class T>
T get_or(const Json& root, const std::string& path, T fallback) {
  const Json* j = find_path(root, path);
  if (!j || j->is_null()) return fallback;
  try {
    return j->get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(path, std::string("wrong type (") + e.what() + ")");
  }
}

template <class T>
T get_req(const Json& root, const std::string& path) {
  const Json* j = find_path(root, path);
  if (!j || j->is_null()) throw ConfigError(path, "required field missing");
  try {
    return j->get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(path, std::string("wrong type (") + e.what() + ")");
  }
}

inline void require(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) throw ConfigError(path, msg);
}

}  // namespace detail

struct Assertion {
  std::string metric;
  std::string stat = "mean";  // mean | min | max
  std::string op = ">=";      // >= | <= | ==
  double value = 0.0;
  std::optional<double> group;  // sweep parameter value
};

struct ExperimentConfig {
  Json raw;  // normalized document the hash is computed from
  std::string kind;
  ModelParams model;
  std::string host = "gnp";
  std::string adversary = "none";
  double adv_r = 0.0;
  double adv_skew = 0.0;
  std::vector<Vertex> victims;
  RegularityParams regularity;
  std::size_t partition_classes = 4;
  std::size_t max_classes = 64;
  double eps_prime = 0.25;
  TypicalityParams typicality;
  ExpansionParams expansion;
  TypicalityParams gate;
  std::string expansion_mode = "one-step";
  std::size_t halving_partitions = 20;
  std::size_t blowup_n = 50;
  std::size_t count_t = 3;
  std::string count_mode = "counting-lemma";
  double count_tolerance = 0.2;
  std::size_t embed_t0 = 8;
  std::size_t embed_r = 1;
  EmbedParams embed;
  std::vector<std::uint64_t> seeds;
  std::vector<double> grid;  // resilience-sweep: r values; oracle-compare: N values
  std::vector<Assertion> assertions;
  std::string output;
  std::size_t threads = 1;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"count-audit",     "regularity-audit", "typicality-audit", "expansion-audit",
                                              "embed",           "resilience-sweep", "oracle-compare"};
  return kinds;
}

/// FNV-1a 64 over the compact dump of the config with "output" and
/// "threads" removed (object keys are sorted by the JSON library).
inline std::uint64_t config_hash(const Json& raw) {
  Json j = raw;
  if (j.is_object()) {
    j.erase("output");
    j.erase("threads");
  }
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline ExperimentConfig parse_config(const Json& raw) {
  using detail::get_or;
  using detail::get_req;
  using detail::require;
  require(raw.is_object(), "", "config must be a JSON object");
  ExperimentConfig c;
  c.raw = raw;
  const auto schema = get_or<std::string>(raw, "schema", kConfigSchema);
  require(schema == kConfigSchema, "schema", "expected '" + std::string(kConfigSchema) + "'");
  c.kind = get_req<std::string>(raw, "kind");
  require(std::find(experiment_kinds().begin(), experiment_kinds().end(), c.kind) != experiment_kinds().end(), "kind",
          "unknown experiment kind '" + c.kind + "'");

  c.model.N = get_or<std::size_t>(raw, "model.N", 1000);
  c.model.p = get_or<double>(raw, "model.p", 0.5);
  c.model.k = get_or<std::size_t>(raw, "model.k", 2);
  c.model.alpha = get_or<double>(raw, "model.alpha", 0.1);
  require(c.model.p >= 0 && c.model.p <= 1, "model.p", "must lie in [0, 1]");
  require(c.model.k >= 1, "model.k", "must be at least 1");
  require(c.model.alpha > 0, "model.alpha", "must be positive");

  c.host = get_or<std::string>(raw, "host.kind", "gnp");
  require(c.host == "gnp" || c.host == "complete", "host.kind", "must be 'gnp' or 'complete'");
  c.blowup_n = get_or<std::size_t>(raw, "host.n", 50);

  c.adversary = get_or<std::string>(raw, "adversary.kind", "none");
  require(c.adversary == "none" || c.adversary == "random" || c.adversary == "partite" ||
              c.adversary == "triangle-killer",
          "adversary.kind", "must be none, random, partite or triangle-killer");
  c.adv_r = get_or<double>(raw, "adversary.r", 0.0);
  require(c.adv_r >= 0 && c.adv_r <= 1, "adversary.r", "must lie in [0, 1]");
  c.adv_skew = get_or<double>(raw, "adversary.skew", 0.0);
  c.victims = get_or<std::vector<Vertex>>(raw, "adversary.victims", {0});

  auto& rp = c.regularity;
  rp.epsilon = get_or<double>(raw, "regularity.epsilon", 0.15);
  rp.d = get_or<double>(raw, "regularity.d", 0.5);
  rp.q = get_or<std::size_t>(raw, "regularity.q", 1);
  rp.mu = get_or<double>(raw, "regularity.mu", c.model.k / static_cast<double>(c.model.k + 1));
  rp.nu = get_or<double>(raw, "regularity.nu", c.model.alpha);
  rp.sample_trials = get_or<std::size_t>(raw, "regularity.trials", 50);
  rp.subset_fraction = get_or<double>(raw, "regularity.subset_fraction", 0.5);
  rp.p = c.model.p;
  c.partition_classes = get_or<std::size_t>(raw, "regularity.m", 4);
  c.max_classes = get_or<std::size_t>(raw, "regularity.max_classes", 64);
  c.eps_prime = get_or<double>(raw, "regularity.eps_prime", 0.25);
  try {
    rp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("regularity", e.what());
  }

  auto& tp = c.typicality;
  tp.epsilon = get_or<double>(raw, "typicality.epsilon", 0.3);
  tp.delta = get_or<double>(raw, "typicality.delta", 0.25);
  tp.sample_trials = get_or<std::size_t>(raw, "typicality.trials", 200);
  tp.p = c.model.p;
  try {
    tp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("typicality", e.what());
  }

  auto& ep = c.expansion;
  ep.k = c.model.k;
  ep.delta = get_or<double>(raw, "expansion.delta", 0.05);
  ep.kappa = get_or<double>(raw, "expansion.kappa", 0.3);
  ep.alpha_density = get_or<double>(raw, "expansion.alpha", 1.0);
  ep.p = c.model.p;
  c.expansion_mode = get_or<std::string>(raw, "expansion.mode", "one-step");
  require(c.expansion_mode == "one-step" || c.expansion_mode == "main" || c.expansion_mode == "halving",
          "expansion.mode", "must be one-step, main or halving");
  c.halving_partitions = get_or<std::size_t>(raw, "expansion.partitions", 20);
  c.gate = tp;
  c.gate.epsilon = get_or<double>(raw, "expansion.gate.epsilon", tp.epsilon);
  c.gate.delta = get_or<double>(raw, "expansion.gate.delta", tp.delta);

  c.count_mode = get_or<std::string>(raw, "count.mode", "counting-lemma");
  require(c.count_mode == "counting-lemma" || c.count_mode == "upper-bound", "count.mode",
          "must be counting-lemma or upper-bound");
  c.count_t = get_or<std::size_t>(raw, "count.t", 3);
  require(c.count_t >= 2, "count.t", "must be at least 2");
  c.count_tolerance = get_or<double>(raw, "count.tolerance", 0.2);

  c.embed_t0 = get_or<std::size_t>(raw, "embed.t0", 8);
  c.embed_r = get_or<std::size_t>(raw, "embed.r", 1);
  require(c.embed_r >= 1, "embed.r", "must be at least 1");
  c.embed.k = c.model.k;
  c.embed.p = c.model.p;
  c.embed.d = get_or<double>(raw, "embed.d", rp.d);
  c.embed.xi = get_or<double>(raw, "embed.xi", 0.05);
  c.embed.delta = get_or<double>(raw, "embed.delta", 0.02);
  c.embed.epsilon = get_or<double>(raw, "embed.epsilon", 0.15);
  c.embed.retries = get_or<std::size_t>(raw, "embed.retries", 5);

  const Json* seeds = detail::find_path(raw, "seeds");
  require(seeds != nullptr, "seeds", "required field missing");
  if (seeds->is_array()) {
    for (std::size_t i = 0; i < seeds->size(); ++i) {
      require((*seeds)[i].is_number_unsigned() || ((*seeds)[i].is_number_integer() && (*seeds)[i].get<long long>() >= 0),
              "seeds[" + std::to_string(i) + "]", "must be a non-negative integer");
      c.seeds.push_back((*seeds)[i].get<std::uint64_t>());
    }
  } else if (seeds->is_object()) {
    const auto from = get_or<std::uint64_t>(raw, "seeds.from", 0);
    const auto count = get_req<std::uint64_t>(raw, "seeds.count");
    for (std::uint64_t i = 0; i < count; ++i) c.seeds.push_back(from + i);
  } else {
    throw ConfigError("seeds", "must be an array or {from, count}");
  }
  require(!c.seeds.empty(), "seeds", "seed list is empty");

  if (c.kind == "resilience-sweep") {
    c.grid = get_req<std::vector<double>>(raw, "r_grid");
    require(!c.grid.empty(), "r_grid", "must be nonempty");
    for (std::size_t i = 0; i < c.grid.size(); ++i)
      require(c.grid[i] >= 0 && c.grid[i] <= 1, "r_grid[" + std::to_string(i) + "]", "must lie in [0, 1]");
  }
  if (c.kind == "oracle-compare") {
    c.grid = get_req<std::vector<double>>(raw, "oracle.N");
    require(!c.grid.empty(), "oracle.N", "must be nonempty");
  }

  if (const Json* as = detail::find_path(raw, "assertions")) {
    require(as->is_array(), "assertions", "must be an array");
    for (std::size_t i = 0; i < as->size(); ++i) {
      const std::string base = "assertions[" + std::to_string(i) + "]";
      const Json& a = (*as)[i];
      require(a.is_object(), base, "must be an object");
      Assertion x;
      x.metric = get_req<std::string>(a, "metric");
      x.stat = get_or<std::string>(a, "stat", "mean");
      x.op = get_or<std::string>(a, "op", ">=");
      x.value = get_req<double>(a, "value");
      if (a.contains("group")) x.group = a["group"].get<double>();
      require(x.stat == "mean" || x.stat == "min" || x.stat == "max", base + ".stat", "must be mean, min or max");
      require(x.op == ">=" || x.op == "<=" || x.op == "==", base + ".op", "must be >=, <= or ==");
      c.assertions.push_back(x);
    }
  }

  c.output = get_or<std::string>(raw, "output", "");
  c.threads = get_or<std::size_t>(raw, "threads", 1);
  if (const char* env = std::getenv("KPOWER_OUTPUT"); env && *env) c.output = env;
  if (const char* env = std::getenv("KPOWER_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    require(end && *end == '\0' && v > 0, "KPOWER_THREADS", "must be a positive integer");
    c.threads = v;
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  Json raw;
  try {
    raw = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("JSON parse error: ") + e.what());
  }
  return parse_config(raw);
}

// ---------------------------------------------------------------------------
// Pipelines shared by the harness, the CLI and the acceptance suite.

struct PipelineOutcome {
  EmbedResult embed;
  AdversaryReport adversary;
  bool cluster_cycle_found = false;
  bool partition_property = false;
  std::size_t partition_rounds = 0;
};

/// G(N, p) -> adversary_random(r) -> nice partition into t0 classes ->
/// chunks of size class_size / r_chunks -> cluster cycle -> embedding.
inline PipelineOutcome run_embed_pipeline(const ModelParams& model, double adv_r, const RegularityParams& rp,
                                          std::size_t t0, std::size_t r_chunks, const EmbedParams& ep_in,
                                          std::uint64_t seed, bool complete_host = false) {
  PipelineOutcome out;
  ModelParams mp = model;
  mp.seed = derive_seed(seed, 0x686f7374);
  Graph g = complete_host ? Graph::complete(mp.N) : gen_gnp(mp);
  auto [h, rep] = adversary_random(g, adv_r, derive_seed(seed, 0x616476));
  out.adversary = std::move(rep);
  auto host = std::make_shared<const Graph>(std::move(h));
  RegularityParams r = rp;
  r.p = mp.p;
  auto part = build_nice_partition(*host, r, t0, derive_seed(seed, 0x70617274), t0);
  out.partition_property = part.property;
  out.partition_rounds = part.refinement_rounds;
  const std::size_t q = part.class_size / r_chunks;
  auto chunked = chunk_partition(*host, part, q, derive_seed(seed, 0x63686b), 0.25, r);
  ReducedGraph rg = build_reduced(part, r.d, r.p);
  auto cyc = find_cluster_power_cycle(rg, mp.k);
  out.cluster_cycle_found = cyc.has_value();
  if (!cyc) {
    out.embed.failure = EmbedFailure{"setup", 0, 0, 0, 0.0, {}, "reduced graph has no k-th power of a Hamilton cycle"};
    return out;
  }
  EmbedParams ep = ep_in;
  ep.k = mp.k;
  ep.p = mp.p;
  ep.seed = derive_seed(seed, 0x656d62);
  out.embed = embed_power_cycle(host, chunked, *cyc, ep);
  return out;
}

// ---------------------------------------------------------------------------
// Trials

/// One trial. The record holds everything needed for replay: config hash,
/// seed, index and grid parameter. "timing_ms" is informational only.
inline Json run_trial(const ExperimentConfig& c, std::uint64_t seed, std::optional<double> param, std::size_t index) {
  const auto t_begin = std::chrono::steady_clock::now();
  Json rec{{"schema", kTrialSchema}, {"config_hash", hex64(config_hash(c.raw))}, {"kind", c.kind},
           {"seed", seed},           {"index", index}};
  rec["param"] = param ? Json(*param) : Json(nullptr);
  Json m = Json::object();
  bool ok = false;
  const std::size_t k = c.model.k;
  try {
    if (c.kind == "count-audit") {
      if (c.count_mode == "counting-lemma") {
        auto b = gen_blowup(Graph::complete(c.count_t), c.blowup_n, c.model.p, seed);
        const auto count = count_canonical_cliques(b.view, 0, c.count_t);
        const double expect = expected_clique_count(b.view, 0, c.count_t);
        m["count"] = count;
        m["expected"] = expect;
        m["ratio"] = expect > 0 ? static_cast<double>(count) / expect : 0.0;
        ok = in_window(static_cast<double>(count), expect, c.count_tolerance);
      } else {
        ModelParams mp = c.model;
        mp.seed = seed;
        auto g = std::make_shared<const Graph>(gen_gnp(mp));
        std::vector<Vertex> ids(g->n());
        for (Vertex v = 0; v < g->n(); ++v) ids[v] = v;
        Rng rng(derive_seed(seed, 0x73657473));
        rng.select_prefix(ids, c.count_t * c.blowup_n);
        std::vector<std::vector<Vertex>> parts(c.count_t);
        for (std::size_t i = 0; i < c.count_t; ++i)
          parts[i].assign(ids.begin() + static_cast<std::ptrdiff_t>(i * c.blowup_n),
                          ids.begin() + static_cast<std::ptrdiff_t>((i + 1) * c.blowup_n));
        TupleView view(g, parts);
        m["count"] = count_canonical_cliques(view, 0, c.count_t);
        ok = clique_count_upper_check(view, c.count_t, c.count_tolerance, c.model.p);
      }
      m["within"] = ok;
    } else if (c.kind == "regularity-audit") {
      ModelParams mp = c.model;
      mp.seed = seed;
      Graph g = c.host == "complete" ? Graph::complete(mp.N) : gen_gnp(mp);
      if (c.adversary == "random") g = adversary_random(g, c.adv_r, seed).first;
      if (c.adversary == "partite") g = adversary_partite(g, k, c.adv_skew, seed).first;
      auto part = build_nice_partition(g, c.regularity, c.partition_classes, seed, c.max_classes);
      std::size_t good = 0, min_partners = std::numeric_limits<std::size_t>::max();
      for (const auto& pi : part.pairs) good += pi.good;
      for (std::size_t i = 1; i <= part.k(); ++i) min_partners = std::min(min_partners, part.partners[i].size());
      m["property"] = part.property;
      m["classes"] = part.k();
      m["refinement_rounds"] = part.refinement_rounds;
      m["good_pairs"] = good;
      m["min_partners"] = part.k() ? min_partners : 0;
      ok = part.property;
      if (c.regularity.q > 1 && c.regularity.q <= part.class_size) {
        auto ch = chunk_partition(g, part, c.regularity.q, seed, c.eps_prime, c.regularity);
        std::size_t tagged = 0, refuted = 0, inherited = 0;
        for (const auto& pi : ch.pairs) {
          if (!pi.expected_regular) continue;
          ++tagged;
          inherited += pi.density_inherited;
          auto v = check_regular_sampled(g, ch.classes[pi.i], ch.classes[pi.j], c.eps_prime, c.model.p,
                                         c.regularity.sample_trials, c.regularity.subset_fraction,
                                         derive_seed(seed, {pi.i, pi.j}));
          refuted += v.refuted();
        }
        m["chunk_pairs"] = tagged;
        m["chunk_refuted_fraction"] = tagged ? static_cast<double>(refuted) / static_cast<double>(tagged) : 0.0;
        m["chunk_inherited_fraction"] = tagged ? static_cast<double>(inherited) / static_cast<double>(tagged) : 0.0;
      }
    } else if (c.kind == "typicality-audit") {
      auto b = gen_blowup(Graph::complete(k + 1), c.blowup_n, c.model.p, seed);
      TypicalityParams tp = c.typicality;
      tp.seed = derive_seed(seed, 0x747970);
      auto rep = check_super_typical(b.view, tp);
      m = to_json(rep);
      m.erase("schema");
      ok = rep.super_typical;
    } else if (c.kind == "expansion-audit") {
      ExpansionParams ep = c.expansion;
      if (c.expansion_mode == "one-step") {
        auto b = gen_blowup(Graph::complete(k + 1), c.blowup_n, c.model.p, seed);
        TypicalityParams gate = c.gate;
        gate.seed = derive_seed(seed, 0x67617465);
        try {
          auto a = one_step_expansion_audit(b.view, ep.kappa, ep, gate, seed);
          m["measured"] = a.measured;
          m["bound"] = a.bound;
          m["gate"] = true;
          ok = a.measured >= a.bound - 1e-12;
        } catch (const Refused& e) {
          m["gate"] = false;
          m["refused"] = e.what();
        }
      } else if (c.expansion_mode == "main") {
        auto b = gen_blowup(power_pattern(2 * k, k, false), c.blowup_n, c.model.p, seed);
        auto a = main_expansion_audit(b.view, ep, seed);
        m["start_size"] = a.start_size;
        m["final_fraction"] = a.final_fraction;
        m["bound"] = a.bound;
        ok = a.final_fraction >= a.bound - 1e-12;
      } else {
        auto b = gen_blowup(power_pattern(3 * k, k, false), c.blowup_n, c.model.p, seed);
        const CliqueSet all = enumerate_canonical_cliques(b.view, 0, k);
        const auto m0 = static_cast<std::size_t>(std::ceil(ep.delta * x_measured(b.view, 0, k)));
        const CliqueSet a = random_subset(all, m0, derive_seed(seed, 0x68616c66));
        auto h = halving_audit(a, b.view, 2 * k, ep, c.halving_partitions, seed);
        m["applicable"] = h.applicable;
        m["reach_fraction"] = h.reach_fraction;
        m["partitions_tested"] = h.partitions_tested;
        m["partitions_ok"] = h.partitions_ok;
        ok = h.applicable && h.partitions_ok == h.partitions_tested;
      }
    } else if (c.kind == "embed" || c.kind == "resilience-sweep") {
      const double r = param ? *param : c.adv_r;
      auto o = run_embed_pipeline(c.model, r, c.regularity, c.embed_t0, c.embed_r, c.embed, seed, c.host == "complete");
      m = to_json(o.embed, false);
      m.erase("schema");
      m["adversary_r"] = r;
      m["deleted_edges"] = o.adversary.deleted_edges;
      m["min_degree_after"] = o.adversary.min_degree_after;
      m["cluster_cycle"] = o.cluster_cycle_found;
      m["partition_property"] = o.partition_property;
      m["r_below_default"] = static_cast<double>(c.embed_r) < 3.0 * static_cast<double>(k * k) * std::log(static_cast<double>(c.model.N));
      ok = o.embed.success;
    } else if (c.kind == "oracle-compare") {
      const auto n = static_cast<std::size_t>(param.value_or(static_cast<double>(c.model.N)));
      auto b = extremal_graph(n, k);
      const auto best = exact_longest_power_cycle(*b.graph, k);
      const auto md = min_degree(*b.graph);
      m["N"] = n;
      m["longest"] = best.length();
      m["min_degree"] = md;
      m["spanning"] = best.length() == n;
      m["min_degree_formula"] =
          static_cast<std::size_t>(std::llround(static_cast<double>(k * (n - 1)) / static_cast<double>(k + 1)));
      ok = best.length() < n && md == m["min_degree_formula"].get<std::size_t>();
    }
    rec["status"] = ok ? "ok" : "failed";
  } catch (const std::exception& e) {
    rec["status"] = "error";
    m["error"] = e.what();
  }
  rec["metrics"] = m;
  rec["timing_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_begin).count();
  return rec;
}

struct TrialSpec {
  std::uint64_t seed;
  std::optional<double> param;
};

inline std::vector<TrialSpec> trial_specs(const ExperimentConfig& c) {
  std::vector<TrialSpec> out;
  if (c.grid.empty()) {
    for (auto s : c.seeds) out.push_back({s, std::nullopt});
  } else {
    for (double g : c.grid)
      for (auto s : c.seeds) out.push_back({s, g});
  }
  return out;
}

/// Runs trials on a pool of `threads` workers; records come back in trial order.
inline std::vector<Json> run_trials(const ExperimentConfig& c, std::size_t threads) {
  const auto specs = trial_specs(c);
  std::vector<Json> out(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) out[i] = run_trial(c, specs[i].seed, specs[i].param, i);
  };
  threads = std::max<std::size_t>(1, std::min(threads, specs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summary

struct SummaryRow {
  std::string group;  // grid parameter as text, or "-"
  std::string metric;
  std::size_t count = 0;
  double mean = 0, min = 0, max = 0;
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Per group and numeric/boolean metric: count, mean, min, max. The metric
/// "success" is 1 for status "ok" and 0 otherwise, so its mean is the success
/// fraction. Groups and metrics are sorted.
inline std::vector<SummaryRow> summarize(const std::vector<Json>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> values;
  for (const auto& rec : records) {
    const std::string group = rec.contains("param") && !rec["param"].is_null() ? format_double(rec["param"].get<double>()) : "-";
    values[{group, "success"}].push_back(rec.value("status", "") == "ok" ? 1.0 : 0.0);
    if (!rec.contains("metrics")) continue;
    // nested objects flatten to dotted names
    std::vector<std::pair<std::string, const Json*>> stack{{"", &rec["metrics"]}};
    while (!stack.empty()) {
      auto [prefix, obj] = stack.back();
      stack.pop_back();
      for (auto it = obj->begin(); it != obj->end(); ++it) {
        const std::string name = prefix + it.key();
        if (it->is_object())
          stack.emplace_back(name + ".", &*it);
        else if (it->is_boolean())
          values[{group, name}].push_back(it->get<bool>() ? 1.0 : 0.0);
        else if (it->is_number())
          values[{group, name}].push_back(it->get<double>());
      }
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, xs] : values) {
    SummaryRow r;
    r.group = key.first;
    r.metric = key.second;
    r.count = xs.size();
    double sum = 0;
    r.min = xs.front();
    r.max = xs.front();
    for (double x : xs) {
      sum += x;
      r.min = std::min(r.min, x);
      r.max = std::max(r.max, x);
    }
    r.mean = sum / static_cast<double>(xs.size());
    rows.push_back(r);
  }
  return rows;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "# schema=" << kSummarySchema << '\n' << "group,metric,count,mean,min,max\n";
  for (const auto& r : rows)
    os << r.group << ',' << r.metric << ',' << r.count << ',' << format_double(r.mean) << ',' << format_double(r.min)
       << ',' << format_double(r.max) << '\n';
  return os.str();
}

inline std::vector<SummaryRow> parse_summary_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<SummaryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("group,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::runtime_error("summary csv: bad row '" + line + "'");
    rows.push_back({f[0], f[1], std::stoul(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5])});
  }
  return rows;
}

/// Sweep curve: grid value, success fraction, trial count.
inline std::string sweep_tsv(const std::vector<SummaryRow>& rows, const std::string& param_name) {
  std::ostringstream os;
  os << "# schema=kpower.sweep/1\n" << param_name << "\tsuccess_fraction\ttrials\n";
  for (const auto& r : rows)
    if (r.metric == "success" && r.group != "-") os << r.group << '\t' << format_double(r.mean) << '\t' << r.count << '\n';
  return os.str();
}

struct AssertionResult {
  Assertion assertion;
  bool pass = false;
  double observed = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

inline std::vector<AssertionResult> check_assertions(const std::vector<Assertion>& as,
                                                     const std::vector<SummaryRow>& rows) {
  std::vector<AssertionResult> out;
  for (const auto& a : as) {
    AssertionResult r{a, false, std::numeric_limits<double>::quiet_NaN(), {}};
    // Without a group the assertion must hold in every group.
    bool seen = false;
    r.pass = true;
    for (const auto& row : rows) {
      if (row.metric != a.metric || (a.group && row.group != format_double(*a.group))) continue;
      const double obs = a.stat == "mean" ? row.mean : a.stat == "min" ? row.min : row.max;
      const bool ok = a.op == ">=" ? obs >= a.value : a.op == "<=" ? obs <= a.value : obs == a.value;
      if (!seen || !ok) r.observed = obs;
      seen = true;
      r.pass = r.pass && ok;
    }
    if (!seen) r.pass = false;
    if (!seen) r.note = "metric not found in summary";
    out.push_back(r);
  }
  return out;
}

struct RunOutput {
  std::vector<Json> records;
  std::vector<SummaryRow> summary;
  std::vector<AssertionResult> assertions;
  bool all_pass = true;
};

/// Executes every trial, writes trials.jsonl, summary.csv (and sweep.tsv for
/// grids) under c.output when set, and evaluates the configured assertions.
inline RunOutput run_experiment(const ExperimentConfig& c) {
  RunOutput out;
  out.records = run_trials(c, c.threads);
  out.summary = summarize(out.records);
  out.assertions = check_assertions(c.assertions, out.summary);
  for (const auto& a : out.assertions) out.all_pass = out.all_pass && a.pass;
  if (!c.output.empty()) {
    std::filesystem::create_directories(c.output);
    std::ofstream jl(std::filesystem::path(c.output) / "trials.jsonl");
    for (const auto& r : out.records) jl << r.dump() << '\n';
    std::ofstream cs(std::filesystem::path(c.output) / "summary.csv");
    cs << summary_csv(out.summary);
    if (!c.grid.empty()) {
      std::ofstream ts(std::filesystem::path(c.output) / "sweep.tsv");
      ts << sweep_tsv(out.summary, c.kind == "oracle-compare" ? "N" : "r");
    }
    std::ofstream cf(std::filesystem::path(c.output) / "config.json");
    cf << c.raw.dump(2) << '\n';
  }
  return out;
}

inline std::vector<Json> read_jsonl(std::istream& is) {
  std::vector<Json> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(Json::parse(line));
  return out;
}

/// Record with the informational timing removed.
inline Json comparable(Json rec) {
  rec.erase("timing_ms");
  return rec;
}

struct ReplayResult {
  bool identical = false;
  Json original;
  Json replayed;
};

/// Re-runs the trial a record describes and compares everything but timing.
/// A record whose config hash differs from `c` is a HashMismatch.
inline ReplayResult replay(const ExperimentConfig& c, const Json& record) {
  const std::string want = hex64(config_hash(c.raw));
  if (record.value("config_hash", "") != want)
    throw HashMismatch("record config hash " + record.value("config_hash", std::string("?")) +
                       " does not match config hash " + want);
  std::optional<double> param;
  if (record.contains("param") && !record["param"].is_null()) param = record["param"].get<double>();
  ReplayResult r;
  r.original = comparable(record);
  r.replayed = comparable(run_trial(c, record.at("seed").get<std::uint64_t>(), param, record.at("index").get<std::size_t>()));
  r.identical = r.original.dump() == r.replayed.dump();
  return r;
}

}  // namespace kpower
