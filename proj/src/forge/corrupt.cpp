#include <algorithm>
#include <cmath>
#include <set>

#include "cadkit/code/validate.hpp"
#include "cadkit/forge/forge.hpp"

namespace cadkit::forge {

namespace {

using code::Level;

bool is_eligible(const code::Statement& st) {
  return std::holds_alternative<code::Command>(st) || std::holds_alternative<code::Extrude>(st);
}

Level* field_ptr(code::Statement& st, const std::string& field) {
  if (auto* cmd = std::get_if<code::Command>(&st)) {
    if (auto* l = std::get_if<code::Line>(&cmd->geom)) {
      if (field == "endpoint.x") return &l->endpoint.x;
      if (field == "endpoint.y") return &l->endpoint.y;
    } else if (auto* a = std::get_if<code::Arc>(&cmd->geom)) {
      if (field == "endpoint.x") return &a->endpoint.x;
      if (field == "endpoint.y") return &a->endpoint.y;
      if (field == "sweep") return &a->sweep;
    } else if (auto* c = std::get_if<code::Circle>(&cmd->geom)) {
      if (field == "center.x") return &c->center.x;
      if (field == "center.y") return &c->center.y;
      if (field == "radius") return &c->radius;
    }
  } else if (auto* ex = std::get_if<code::Extrude>(&st)) {
    auto& p = ex->params;
    if (field == "orientation.x") return &p.orientation.x;
    if (field == "orientation.y") return &p.orientation.y;
    if (field == "orientation.z") return &p.orientation.z;
    if (field == "origin.x") return &p.origin.x;
    if (field == "origin.y") return &p.origin.y;
    if (field == "origin.z") return &p.origin.z;
    if (field == "scale") return &p.scale;
    if (field == "distances.0") return &p.distances[0];
    if (field == "distances.1") return &p.distances[1];
  }
  throw std::invalid_argument("statement has no field '" + field + "'");
}

const code::LoopView& find_loop(const std::vector<code::SketchView>& sketches, int sketch, std::size_t loop) {
  for (const auto& s : sketches)
    if (s.id.index == sketch && loop < s.loops.size()) return s.loops[loop];
  throw std::invalid_argument("edit refers to a missing loop");
}

void permute(code::Program& p, const PermuteLoop& e, bool inverse) {
  const auto sketches = code::collect_sketches(p);
  const auto& lv = find_loop(sketches, e.sketch, e.loop);
  const std::size_t m = e.permutation.size();
  if (m > lv.command_indices.size()) throw std::invalid_argument("permutation longer than its loop");
  std::vector<code::Statement> before;
  for (std::size_t i = 0; i < m; ++i) before.push_back(p.statements[lv.command_indices[i]]);
  for (std::size_t i = 0; i < m; ++i) {
    if (inverse)
      p.statements[lv.command_indices[e.permutation[i]]] = before[i];
    else
      p.statements[lv.command_indices[i]] = before[e.permutation[i]];
  }
}

}  // namespace

std::size_t eligible_count(const code::Program& program) {
  return static_cast<std::size_t>(std::count_if(program.statements.begin(), program.statements.end(), is_eligible));
}

std::vector<std::string> noise_fields(const code::Statement& st) {
  if (const auto* cmd = std::get_if<code::Command>(&st)) {
    if (std::holds_alternative<code::Line>(cmd->geom)) return {"endpoint.x", "endpoint.y"};
    if (std::holds_alternative<code::Arc>(cmd->geom)) return {"endpoint.x", "endpoint.y", "sweep"};
    return {"center.x", "center.y", "radius"};
  }
  if (std::holds_alternative<code::Extrude>(st))
    return {"orientation.x", "orientation.y", "orientation.z", "origin.x",   "origin.y",
            "origin.z",      "scale",         "distances.0",   "distances.1"};
  return {};
}

Level get_field(const code::Statement& st, const std::string& field) {
  auto copy = st;
  return *field_ptr(copy, field);
}

void set_field(code::Statement& st, const std::string& field, Level value) { *field_ptr(st, field) = value; }

Corruption inject_errors(const code::Program& program, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ForgeError(ForgeError::Kind::BadRatio, "corruption ratio must lie in (0, 1]");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < program.statements.size(); ++i)
    if (is_eligible(program.statements[i])) eligible.push_back(i);
  if (eligible.empty()) throw ForgeError(ForgeError::Kind::NoEligibleEdit, "program has no command to corrupt");

  Corruption out;
  out.ratio = ratio;
  out.quota = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(eligible.size()) - 1e-9)));
  out.corrupted.statements = program.statements;
  auto& stmts = out.corrupted.statements;
  Rng rng(seed);
  std::size_t remaining = out.quota;
  std::set<std::size_t> touched;

  // Edits that keep a valid program executable are preferred; a corrupted
  // program that no longer runs teaches little about the B-rep.
  const bool keep_valid = !code::has_errors(code::validate(program));
  auto still_valid = [&](const code::Program& p) { return !keep_valid || !code::has_errors(code::validate(p)); };

  // Loop permutations. The last command stays put so the loop still closes.
  std::vector<std::pair<int, std::size_t>> loops;
  const auto sketches = code::collect_sketches(out.corrupted);
  for (const auto& s : sketches)
    for (std::size_t k = 0; k < s.loops.size(); ++k)
      if (s.loops[k].commands.size() >= 3) loops.emplace_back(s.id.index, k);
  shuffle(rng, loops);
  for (const auto& [sk, k] : loops) {
    if (remaining < 2) break;
    if (draw_below(rng, 2) == 0) continue;
    const auto& lv = find_loop(sketches, sk, k);
    const std::size_t m = lv.commands.size() - 1;
    auto moved = [&](const std::vector<std::size_t>& perm) {
      std::vector<std::size_t> pos;
      for (std::size_t i = 0; i < m; ++i)
        if (!(lv.commands[perm[i]] == lv.commands[i])) pos.push_back(i);
      return pos;
    };
    std::vector<std::size_t> perm(m);
    std::vector<std::size_t> pos;
    bool found = false;
    for (int attempt = 0; attempt < 24 && !found; ++attempt) {
      for (std::size_t i = 0; i < m; ++i) perm[i] = i;
      shuffle(rng, perm);
      pos = moved(perm);
      if (pos.empty() || pos.size() > remaining) continue;
      code::Program trial = out.corrupted;
      permute(trial, PermuteLoop{sk, k, perm}, false);
      found = still_valid(trial);
    }
    if (!found) continue;  // no permutation of this loop keeps it well formed
    PermuteLoop edit{sk, k, perm};
    permute(out.corrupted, edit, false);
    for (auto i : pos) touched.insert(lv.command_indices[i]);
    remaining -= pos.size();
    out.edits.permutations.push_back(std::move(edit));
  }

  // Parameter noise on commands the permutations left alone.
  std::vector<std::size_t> pool;
  for (auto i : eligible)
    if (!touched.count(i)) pool.push_back(i);
  shuffle(rng, pool);
  auto draw_noise = [&](std::size_t si) {
    const auto fields = noise_fields(stmts[si]);
    const std::string& field = fields[draw_below(rng, fields.size())];
    const Level old = get_field(stmts[si], field);
    const int magnitude = static_cast<int>(draw_between(rng, 5, 25));
    const int sign = draw_below(rng, 2) ? 1 : -1;
    Level nv = std::clamp(old + sign * magnitude, 0, code::kMaxLevel);
    if (nv == old) nv = std::clamp(old - sign * magnitude, 0, code::kMaxLevel);
    return ParamNoise{si, field, old, nv};
  };
  auto apply_noise = [&](const ParamNoise& n) {
    set_field(stmts[n.statement], n.field, n.new_level);
    out.edits.noise.push_back(n);
    touched.insert(n.statement);
    --remaining;
  };
  std::vector<ParamNoise> deferred;  // first draws that broke the program
  for (std::size_t si : pool) {
    if (remaining == 0) break;
    bool done = false;
    for (int attempt = 0; attempt < 8 && !done; ++attempt) {
      const ParamNoise n = draw_noise(si);
      if (attempt == 0) deferred.push_back(n);
      code::Statement saved = stmts[si];
      set_field(stmts[si], n.field, n.new_level);
      const bool ok = still_valid(out.corrupted);
      stmts[si] = saved;
      if (ok) {
        apply_noise(n);
        deferred.pop_back();
        done = true;
      }
    }
  }
  // quota first: fall back to edits that break the program
  for (const auto& n : deferred) {
    if (remaining == 0) break;
    apply_noise(n);
  }
  out.affected = touched.size();
  if (out.edits.size() == 0) throw ForgeError(ForgeError::Kind::NoEligibleEdit, "no edit could be applied");
  return out;
}

Corruption inject_errors_seeded(const code::Program& program, std::uint64_t seed, double lo, double hi) {
  Rng rng(splitmix64(seed));
  const double ratio = lo + (hi - lo) * uniform01(rng);
  return inject_errors(program, ratio, seed);
}

code::Program apply_edits(const code::Program& program, const EditLog& log) {
  code::Program p;
  p.statements = program.statements;
  for (const auto& e : log.permutations) permute(p, e, false);
  for (const auto& n : log.noise) set_field(p.statements.at(n.statement), n.field, n.new_level);
  return p;
}

code::Program invert_edits(const code::Program& corrupted, const EditLog& log) {
  code::Program p;
  p.statements = corrupted.statements;
  for (auto it = log.noise.rbegin(); it != log.noise.rend(); ++it)
    set_field(p.statements.at(it->statement), it->field, it->old_level);
  for (auto it = log.permutations.rbegin(); it != log.permutations.rend(); ++it) permute(p, *it, true);
  return p;
}

nlohmann::json to_json(const EditLog& log) {
  nlohmann::json edits = nlohmann::json::array();
  for (const auto& e : log.permutations)
    edits.push_back({{"kind", "permute_loop"}, {"sketch", e.sketch}, {"loop", e.loop}, {"permutation", e.permutation}});
  for (const auto& n : log.noise)
    edits.push_back({{"kind", "param_noise"},
                     {"statement", n.statement},
                     {"field", n.field},
                     {"old", n.old_level},
                     {"new", n.new_level}});
  return edits;
}

EditLog edit_log_from_json(const nlohmann::json& j) {
  EditLog log;
  try {
    for (const auto& e : j) {
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "permute_loop") {
        log.permutations.push_back({e.at("sketch").get<int>(), e.at("loop").get<std::size_t>(),
                                    e.at("permutation").get<std::vector<std::size_t>>()});
      } else if (kind == "param_noise") {
        log.noise.push_back({e.at("statement").get<std::size_t>(), e.at("field").get<std::string>(),
                             e.at("old").get<int>(), e.at("new").get<int>()});
      } else {
        throw ForgeError(ForgeError::Kind::BadRecord, "unknown edit kind '" + kind + "'");
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ForgeError(ForgeError::Kind::BadRecord, std::string("malformed edit log: ") + ex.what());
  }
  return log;
}

}  // namespace cadkit::forge
