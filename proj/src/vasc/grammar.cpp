#include "fqf/vasc/grammar.hpp"

#include <cmath>
#include <map>

#include "fqf/core/error.hpp"

namespace fqf::vasc {

bool is_turtle_symbol(char c) {
  switch (c) {
    case 'F':
    case '+':
    case '-':
    case '&':
    case '^':
    case '\\':
    case '/':
    case '[':
    case ']': return true;
    default: return false;
  }
}

namespace {

void check_symbols(const std::string& s, const char* what) {
  int depth = 0;
  for (char c : s) {
    require(is_turtle_symbol(c), what, " contains foreign symbol '", std::string(1, c), "'");
    if (c == '[') ++depth;
    if (c == ']') {
      --depth;
      require(depth >= 0, what, " closes an unopened bracket");
    }
  }
  require(depth == 0, what, " leaves ", depth, " brackets open");
}

}  // namespace

void LsystemGrammar::validate() const {
  require(!axiom.empty(), "axiom is empty");
  check_symbols(axiom, "axiom");
  std::map<char, double> mass;
  for (const Production& p : productions) {
    require(is_turtle_symbol(p.predecessor), "production predecessor is a foreign symbol");
    require(p.predecessor != '[' && p.predecessor != ']', "brackets cannot be rewritten");
    require(p.probability > 0.0, "production probability must be positive");
    check_symbols(p.successor, "successor");
    mass[p.predecessor] += p.probability;
  }
  for (const auto& [sym, total] : mass)
    require(std::abs(total - 1.0) <= 1e-12, "probabilities for '", std::string(1, sym),
            "' sum to ", total, ", expected 1");
}

LsystemGrammar default_grammar() {
  LsystemGrammar g;
  g.axiom = "F";
  g.productions = {
      {'F', "F[+F][-F]", 0.35},
      {'F', "F[&F][^F]", 0.25},
      {'F', "F[\\+F][/-F]", 0.20},
      {'F', "FF", 0.10},
      {'F', "F", 0.10},
  };
  return g;
}

std::string rewrite(const LsystemGrammar& grammar, int iterations, CounterRng& rng,
                    std::size_t max_length) {
  grammar.validate();
  require(iterations >= 0, "iteration count must be non-negative");

  std::string current = grammar.axiom;
  for (int it = 0; it < iterations; ++it) {
    std::string next;
    next.reserve(current.size() * 2);
    for (char c : current) {
      const Production* chosen = nullptr;
      double u = -1.0;
      double acc = 0.0;
      for (const Production& p : grammar.productions) {
        if (p.predecessor != c) continue;
        if (u < 0.0) u = rng.uniform();
        acc += p.probability;
        if (u < acc) {
          chosen = &p;
          break;
        }
      }
      if (u >= 0.0 && chosen == nullptr) {
        // Guard against probability mass lost to rounding.
        for (const Production& p : grammar.productions)
          if (p.predecessor == c) chosen = &p;
      }
      if (chosen)
        next += chosen->successor;
      else
        next += c;
      require(next.size() <= max_length, "rewrite exceeds ", max_length,
              " symbols at iteration ", it + 1);
    }
    current = std::move(next);
  }
  return current;
}

}  // namespace fqf::vasc
