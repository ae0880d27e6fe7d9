#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpower/embedder.hpp"
#include "kpower/expansion.hpp"
#include "kpower/models.hpp"
#include "kpower/regularity.hpp"
#include "kpower/typicality.hpp"

namespace kpower {

using Json = nlohmann::json;

inline Json to_json(const AdversaryReport& r) {
  return Json{{"strategy", r.strategy},
              {"deleted_edges", r.deleted_edges},
              {"min_degree_after", r.min_degree_after},
              {"budget_claimed", r.budget_claimed},
              {"budget_respected", r.budget_respected()},
              {"per_vertex_deleted", r.per_vertex_deleted},
              {"budget", r.budget},
              {"planted_parts", r.planted_parts}};
}

inline Json to_json(const RegularityVerdict& v) {
  Json j{{"status", to_string(v.status)},
         {"mode", to_string(v.mode)},
         {"deviation", v.deviation},
         {"pair_density", v.pair_density},
         {"trials", v.trials}};
  if (v.witness) j["witness"] = {v.witness->first, v.witness->second};
  return j;
}

inline Json to_json(const RegularPartition& p) {
  Json pairs = Json::array();
  for (const auto& pi : p.pairs)
    pairs.push_back({{"i", pi.i},
                     {"j", pi.j},
                     {"density", pi.density},
                     {"status", to_string(pi.status)},
                     {"good", pi.good},
                     {"expected_regular", pi.expected_regular},
                     {"density_inherited", pi.density_inherited}});
  return Json{{"schema", "kpower.partition/1"},
              {"classes", p.classes},
              {"class_size", p.class_size},
              {"pairs", pairs},
              {"partners", p.partners},
              {"property", p.property},
              {"refinement_rounds", p.refinement_rounds},
              {"parent", p.parent}};
}

inline RegularityStatus status_from_string(const std::string& s) {
  if (s == "certified-regular") return RegularityStatus::certified;
  if (s == "refuted") return RegularityStatus::refuted;
  if (s == "undetermined") return RegularityStatus::undetermined;
  throw std::invalid_argument("unknown regularity status '" + s + "'");
}

inline RegularPartition partition_from_json(const Json& j) {
  RegularPartition p;
  p.classes = j.at("classes").get<std::vector<std::vector<Vertex>>>();
  p.class_size = j.at("class_size").get<std::size_t>();
  for (const auto& e : j.at("pairs")) {
    PairInfo pi;
    pi.i = e.at("i").get<std::size_t>();
    pi.j = e.at("j").get<std::size_t>();
    pi.density = e.at("density").get<double>();
    pi.status = status_from_string(e.at("status").get<std::string>());
    pi.good = e.at("good").get<bool>();
    pi.expected_regular = e.value("expected_regular", false);
    pi.density_inherited = e.value("density_inherited", false);
    p.pairs.push_back(pi);
  }
  p.partners = j.at("partners").get<std::vector<std::vector<std::size_t>>>();
  p.property = j.at("property").get<bool>();
  p.refinement_rounds = j.value("refinement_rounds", std::size_t{0});
  p.parent = j.value("parent", std::vector<std::size_t>{});
  return p;
}

inline Json to_json(const TypicalityReport& r) {
  return Json{{"schema", "kpower.typicality/1"},
              {"typical_fraction", r.typical_fraction},
              {"pairs_unrefuted", r.pairs_unrefuted},
              {"tuple_typical", r.tuple_typical},
              {"clique_counts", {{"middle", r.middle_count}, {"left", r.left_count}, {"right", r.right_count}}},
              {"expected_counts", {{"middle", r.middle_expected}, {"left", r.left_expected}, {"right", r.right_expected}}},
              {"typical_clique_count", r.typical_clique_count},
              {"verdicts", {{"i", r.cond_i}, {"ii", r.cond_ii}, {"iii", r.cond_iii}, {"super_typical", r.super_typical}}}};
}

inline Json to_json(const ExpansionTrace& t) {
  return Json{{"schema", "kpower.trace/1"},
              {"start_window", t.start_window},
              {"start_size", t.start_size},
              {"windows", t.windows},
              {"counts", t.counts},
              {"fractions", t.fractions},
              {"fractions_nominal", t.fractions_nominal}};
}

inline Json to_json(const EmbedFailure& f) {
  return Json{{"stage", f.stage},       {"step", f.step},
              {"window", f.window},     {"attempts", f.attempts},
              {"reach_fraction", f.reach_fraction}, {"set_sizes", f.set_sizes},
              {"message", f.message}};
}

inline Json to_json(const EmbedResult& r, bool with_cycle = true) {
  Json j{{"schema", "kpower.embed/1"},
         {"success", r.success},
         {"length", r.cycle.length()},
         {"t", r.t},
         {"t0", r.t0},
         {"r", r.r},
         {"n_prime", r.n_prime},
         {"n_tilde", r.n_tilde},
         {"s_cap", r.s_cap},
         {"steps_done", r.steps_done},
         {"redraws", r.redraws},
         {"fallbacks", r.fallbacks},
         {"anchor_forward", r.anchor_forward},
         {"anchor_backward", r.anchor_backward},
         {"close_reach", r.close_reach}};
  if (r.failure) j["failure"] = to_json(*r.failure);
  if (with_cycle) j["cycle"] = r.cycle.vertices;
  return j;
}

// Frontier dump. Layout (little endian):
//   "KPFR"  u8[4]
//   version u32 = 1
//   window  u32
//   order   u32
//   count   u64
//   then per clique: shared-prefix length with the previous clique (u8),
//   followed by the remaining ids as LEB128 varints.
namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((x >> (8 * i)) & 0xff));
}
inline void put_u64(std::ostream& os, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((x >> (8 * i)) & 0xff));
}
inline void put_varint(std::ostream& os, std::uint64_t x) {
  while (x >= 0x80) {
    os.put(static_cast<char>((x & 0x7f) | 0x80));
    x >>= 7;
  }
  os.put(static_cast<char>(x));
}
inline std::uint8_t get_byte(std::istream& is) {
  const int c = is.get();
  if (c == std::char_traits<char>::eof()) throw std::runtime_error("frontier dump truncated");
  return static_cast<std::uint8_t>(c);
}
inline std::uint64_t get_le(std::istream& is, int bytes) {
  std::uint64_t x = 0;
  for (int i = 0; i < bytes; ++i) x |= static_cast<std::uint64_t>(get_byte(is)) << (8 * i);
  return x;
}
inline std::uint64_t get_varint(std::istream& is) {
  std::uint64_t x = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    const std::uint8_t b = get_byte(is);
    x |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) return x;
  }
  throw std::runtime_error("frontier dump: varint too long");
}

}  // namespace detail

inline void write_frontier(std::ostream& os, const CliqueSet& s) {
  if (s.order() > 255) throw std::invalid_argument("frontier dump supports order <= 255");
  os.write("KPFR", 4);
  detail::put_u32(os, 1);
  detail::put_u32(os, static_cast<std::uint32_t>(s.window_start()));
  detail::put_u32(os, static_cast<std::uint32_t>(s.order()));
  detail::put_u64(os, s.size());
  for (std::size_t r = 0; r < s.size(); ++r) {
    auto cur = s.member(r);
    std::size_t shared = 0;
    if (r > 0) {
      auto prev = s.member(r - 1);
      while (shared < s.order() && prev[shared] == cur[shared]) ++shared;
    }
    os.put(static_cast<char>(shared));
    for (std::size_t i = shared; i < s.order(); ++i) detail::put_varint(os, cur[i]);
  }
}

inline CliqueSet read_frontier(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "KPFR") throw std::runtime_error("frontier dump: bad magic");
  if (detail::get_le(is, 4) != 1) throw std::runtime_error("frontier dump: unsupported version");
  const auto window = static_cast<std::size_t>(detail::get_le(is, 4));
  const auto order = static_cast<std::size_t>(detail::get_le(is, 4));
  const auto count = detail::get_le(is, 8);
  std::vector<Vertex> flat;
  flat.reserve(count * order);
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::size_t shared = detail::get_byte(is);
    if (shared > order || (r == 0 && shared > 0)) throw std::runtime_error("frontier dump: bad prefix length");
    const std::size_t base = flat.size();
    for (std::size_t i = 0; i < shared; ++i) flat.push_back(flat[base - order + i]);
    for (std::size_t i = shared; i < order; ++i) flat.push_back(static_cast<Vertex>(detail::get_varint(is)));
  }
  return CliqueSet::from_sorted_flat(window, order, std::move(flat));
}

}  // namespace kpower
