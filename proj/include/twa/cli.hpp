#pragma once

// Command-line front end. run_cli writes to the given streams so the verbs
// can be exercised from tests without spawning processes.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "twa/a_l.hpp"
#include "twa/automaton.hpp"
#include "twa/elements.hpp"
#include "twa/pebble.hpp"
#include "twa/relation.hpp"
#include "twa/separation.hpp"
#include "twa/tree.hpp"

namespace twa {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int negative = 1;
inline constexpr int usage = 2;
inline constexpr int budget = 3;
}  // namespace exit_code

namespace cli_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

/// Element-search budget: the flag if given, else TWA_BUDGET, else the default.
inline std::size_t resolve_budget(const std::optional<std::size_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("TWA_BUDGET")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw UsageError("TWA_BUDGET must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }
  return ElementOptions{}.max_checks;
}

/// Runs `check` over every tree with at most `max_nodes` nodes, `jobs`
/// threads per batch. Mismatches are reported in enumeration order.
struct CorpusResult {
  std::size_t trees = 0;
  std::size_t mismatches = 0;
  std::vector<std::string> first;  ///< up to five mismatching trees
};

inline CorpusResult run_corpus(std::size_t max_nodes, std::size_t jobs,
                               const std::function<bool(const Tree&)>& agrees) {
  constexpr std::size_t kBatch = 4096;
  CorpusResult res;
  TreeEnumerator e(max_nodes);
  std::vector<Tree> batch;
  std::vector<char> ok;
  auto flush = [&] {
    ok.assign(batch.size(), 1);
    const std::size_t k = std::max<std::size_t>(1, std::min(jobs, batch.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < k; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < batch.size(); i += k) ok[i] = agrees(batch[i]);
      });
    for (std::size_t i = 0; i < batch.size(); i += k) ok[i] = agrees(batch[i]);
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ++res.trees;
      if (ok[i]) continue;
      ++res.mismatches;
      if (res.first.size() < 5) res.first.push_back(serialize_tree(batch[i]));
    }
    batch.clear();
  };
  while (auto t = e.next()) {
    batch.push_back(std::move(*t));
    if (batch.size() == kBatch) flush();
  }
  flush();
  return res;
}

inline std::string quadruple_str(const Quadruple& w, const Automaton& a) {
  const auto& [p, i, q, j] = w;
  return "(" + a.states[p] + "," + std::to_string(i) + "," + a.states[q] + "," +
         std::to_string(j) + ")";
}

inline std::string computation_str(const Computation& c, const Automaton& a) {
  std::string out;
  for (const auto& conf : c) {
    if (!out.empty()) out += " ";
    out += "(" + a.states[conf.state] + "," + conf.node.str() + ")";
  }
  return out;
}

}  // namespace cli_detail

/// Parses argv, runs one verb and returns its exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Tree-walking automata toolkit", "twa"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  app.add_option("--seed", seed, "Seed for randomized checks")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads for corpus verbs")->check(CLI::PositiveNumber);

  std::string automaton_path, tree_path, elements_path, output, pattern_text;
  std::size_t max_nodes = 0, chain_n = 4;
  std::optional<std::size_t> budget;
  bool show_multiplicity = false, as_json = false;
  std::string target;
  BigInt surrogate_m = 5;
  std::string surrogate_text = "5";

  auto* simulate = app.add_subcommand("simulate", "Run an automaton on a tree");
  simulate->add_option("--automaton", automaton_path)->required();
  simulate->add_option("--tree", tree_path)->required();
  simulate->add_flag("--multiplicity", show_multiplicity, "Also count accepting computations");

  auto* check_l = app.add_subcommand("check-l", "Membership in L");
  check_l->add_option("--tree", tree_path)->required();

  auto* enumerate = app.add_subcommand("enumerate", "List all trees up to a size");
  enumerate->add_option("--max-nodes", max_nodes)->required();

  auto* crosscheck = app.add_subcommand("crosscheck", "Compare a recognizer with the L oracle");
  crosscheck->add_option("which", target)->required()->check(CLI::IsMember({"a-l", "pebble"}));
  crosscheck->add_option("--max-nodes", max_nodes)->required();

  auto* relation = app.add_subcommand("relation", "Run relation of a pattern");
  relation->add_option("--automaton", automaton_path)->required();
  relation->add_option("--pattern", pattern_text)->required();
  relation->add_option("--elements", elements_path);

  auto* find = app.add_subcommand("find-elements", "Search for D0, D1, D2");
  find->add_option("--automaton", automaton_path)->required();
  find->add_option("--budget", budget, "Candidate triples to examine");
  find->add_option("-o,--output", output);

  auto* verify = app.add_subcommand("verify-main-lemma", "Check the chain inclusion");
  verify->add_option("--automaton", automaton_path)->required();
  verify->add_option("--budget", budget, "Candidate triples to examine");
  verify->add_flag("--json", as_json, "Print a JSON report");

  auto* symm = app.add_subcommand("symmetrize", "Time-symmetrize an automaton");
  symm->add_option("--automaton", automaton_path)->required();
  symm->add_option("-o,--output", output);

  auto* ambiguity = app.add_subcommand("ambiguity-witness", "First tree with two accepting runs");
  ambiguity->add_option("--automaton", automaton_path)->required();
  ambiguity->add_option("--max-nodes", max_nodes)->required();

  auto* ttrees = app.add_subcommand("t-trees", "Write T00, T01, T10, T11");
  ttrees->add_option("--elements", elements_path)->required();
  ttrees->add_option("--surrogate-m", surrogate_text)->required();
  ttrees->add_option("--n", chain_n, "Length of the small chain")->capture_default_str();
  ttrees->add_option("-o,--output", output)->required();

  std::vector<const char*> args(argv, argv + argc);
  try {
    app.parse(argc, args.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::usage;
  }

  auto load_automaton = [&] { return parse_automaton(read_file(automaton_path), automaton_path); };
  auto load_tree = [&] { return parse_tree(read_file(tree_path), tree_path); };

  try {
    if (simulate->parsed()) {
      const Automaton a = load_automaton();
      const Tree t = load_tree();
      const bool acc = accepts(a, t);
      out << (acc ? "ACCEPT" : "REJECT") << "\n";
      if (show_multiplicity)
        out << "multiplicity " << multiplicity_name(multiplicity(a, t)) << "\n";
      return acc ? exit_code::ok : exit_code::negative;
    }

    if (check_l->parsed()) {
      const bool member = in_language_L(load_tree());
      out << (member ? "MEMBER" : "NOT MEMBER") << "\n";
      return member ? exit_code::ok : exit_code::negative;
    }

    if (enumerate->parsed()) {
      TreeEnumerator e(max_nodes);
      std::size_t count = 0;
      while (auto t = e.next()) {
        out << serialize_tree(*t) << "\n";
        ++count;
      }
      err << count << " trees\n";
      return exit_code::ok;
    }

    if (crosscheck->parsed()) {
      CorpusResult res;
      if (target == "a-l") {
        const Automaton a = build_A_L();
        const TransitionIndex idx(a);
        res = run_corpus(max_nodes, jobs, [&](const Tree& t) {
          return accepts(idx, a, Terrain::of_tree(t)) == in_language_L(t);
        });
      } else {
        const PebbleMachine m = build_pebble_L();
        res = run_corpus(max_nodes, jobs, [&](const Tree& t) {
          const PebbleRun r = pebble_run(m, t);
          return r.verdict != PebbleVerdict::fuel_exhausted &&
                 (r.verdict == PebbleVerdict::accept) == in_language_L(t);
        });
      }
      for (const auto& s : res.first) out << "mismatch " << s << "\n";
      out << res.trees << " trees, " << res.mismatches << " mismatches\n";
      return res.mismatches == 0 ? exit_code::ok : exit_code::negative;
    }

    if (relation->parsed()) {
      const Automaton a = load_automaton();
      if (elements_path.empty()) {
        RelationEvaluator ev(a);
        out << dump_relation(ev.eval(parse_pattern(pattern_text, nullptr, "--pattern")), a);
        return exit_code::ok;
      }
      const ElementTriple t = load_elements(a, parse_elements(read_file(elements_path), elements_path));
      const PatternLibrary lib = t.library();
      RelationEvaluator ev = element_evaluator(a, t);
      out << dump_relation(ev.eval(parse_pattern(pattern_text, &lib, "--pattern")), a);
      return exit_code::ok;
    }

    if (find->parsed()) {
      const Automaton a = load_automaton();
      ElementOptions opt;
      opt.max_checks = resolve_budget(budget);
      const ElementSearch s = find_elements(a, opt);
      err << "values " << s.stats.values[0] << "/" << s.stats.values[1] << "/"
          << s.stats.values[2] << ", idempotents " << s.stats.idempotents << ", checks "
          << s.stats.checks << "\n";
      if (!s.triple) {
        out << "ELEMENTS EXHAUSTED\n";
        return exit_code::budget;
      }
      const EquationReport rep = check_equations(*s.triple, 200, seed);
      if (!rep.ok()) throw Error("internal: returned triple fails its equations");
      const std::string text = serialize_elements(s.triple->expr);
      if (output.empty())
        out << text;
      else
        write_file(output, text);
      out << "ELEMENTS FOUND stage=" << s.stage << "\n";
      return exit_code::ok;
    }

    if (verify->parsed()) {
      const Automaton a = load_automaton();
      ElementOptions opt;
      opt.max_checks = resolve_budget(budget);
      const MainLemmaReport rep = verify_main_lemma(a, opt);
      int code = exit_code::ok;
      std::string line;
      switch (rep.verdict) {
        case LemmaVerdict::holds:
          line = "MAIN-LEMMA HOLDS n=" + std::to_string(rep.n) + " M=" + rep.M.str();
          break;
        case LemmaVerdict::fails:
          line = "MAIN-LEMMA FAILS (p,i,q,j)=" +
                 quadruple_str(*rep.witness, rep.instance->sym.automaton);
          code = exit_code::negative;
          break;
        case LemmaVerdict::elements_exhausted:
          line = "MAIN-LEMMA ELEMENTS-EXHAUSTED n=" + std::to_string(rep.n);
          code = exit_code::budget;
          break;
      }
      if (!as_json) {
        out << line << "\n";
        return code;
      }
      nlohmann::ordered_json j;
      j["verdict"] = verdict_str(rep.verdict);
      j["n"] = rep.n;
      j["M"] = rep.M.str();
      j["remark"] = rep.remark;
      j["small_relation_size"] = rep.small_size;
      j["element_checks"] = rep.element_stats.checks;
      if (rep.instance) {
        j["stage"] = rep.instance->stage;
        j["elements"] = serialize_elements(rep.instance->triple.expr);
      }
      if (rep.witness) j["witness"] = quadruple_str(*rep.witness, rep.instance->sym.automaton);
      out << j.dump(2) << "\n";
      return code;
    }

    if (symm->parsed()) {
      const std::string text = serialize_automaton(symmetrize(load_automaton()).automaton);
      if (output.empty())
        out << text;
      else
        write_file(output, text);
      return exit_code::ok;
    }

    if (ambiguity->parsed()) {
      const Automaton a = load_automaton();
      const auto w = ambiguity_witness(a, max_nodes);
      if (!w) {
        out << "NO WITNESS up to " << max_nodes << " nodes\n";
        return exit_code::negative;
      }
      out << "WITNESS " << serialize_tree(w->tree) << "\n";
      out << "multiplicity " << multiplicity_name(w->multiplicity) << "\n";
      for (const auto& c : w->computations) {
        if (!is_accepting_computation(a, w->tree, c)) throw Error("internal: invalid computation");
        out << "run " << computation_str(c, a) << "\n";
      }
      return exit_code::ok;
    }

    if (ttrees->parsed()) {
      try {
        surrogate_m = BigInt(surrogate_text);
      } catch (const std::exception&) {
        throw UsageError("--surrogate-m must be a positive integer");
      }
      if (surrogate_m < 1) throw UsageError("--surrogate-m must be a positive integer");
      ElementTriple t;
      t.expr = parse_elements(read_file(elements_path), elements_path);
      const auto T = build_T_trees(t, chain_n, surrogate_m);
      std::filesystem::create_directories(output);
      const char* names[4] = {"T00", "T01", "T10", "T11"};
      for (int k = 0; k < 4; ++k) {
        write_file((std::filesystem::path(output) / (std::string(names[k]) + ".tree")).string(),
                   serialize_tree(T[k]) + "\n");
        out << names[k] << " " << T[k].size() << " nodes "
            << (in_language_L(T[k]) ? "MEMBER" : "NOT MEMBER") << "\n";
      }
      return exit_code::ok;
    }
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::budget;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::usage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::usage;
  }
  return exit_code::usage;
}

}  // namespace twa
