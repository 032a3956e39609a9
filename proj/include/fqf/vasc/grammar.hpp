#pragma once

#include <string>
#include <vector>

#include "fqf/core/rng.hpp"

namespace fqf::vasc {

// Alphabet: F draws a segment, + - yaw, & ^ pitch, \ / roll, [ ] push/pop.
bool is_turtle_symbol(char c);

struct Production {
  char predecessor = 'F';
  std::string successor;
  double probability = 1.0;
};

// Stochastic context-free rewriting over the turtle alphabet.  For each
// predecessor the probabilities must sum to one; symbols without productions
// rewrite to themselves.
struct LsystemGrammar {
  std::string axiom = "F";
  std::vector<Production> productions;

  // Throws on foreign symbols, unbalanced axiom brackets, or probability
  // mass that does not sum to one per predecessor.
  void validate() const;
};

// Grammar used when a run does not supply one: binary branches in yawed,
// pitched, or rolled planes plus occasional straight growth.
LsystemGrammar default_grammar();

// Applies `iterations` parallel rewrites.  Every stochastic choice consumes
// one draw in string order, so equal seeds give equal strings.  Throws if
// the string would exceed max_length.
std::string rewrite(const LsystemGrammar& grammar, int iterations, CounterRng& rng,
                    std::size_t max_length = 1u << 20);

}  // namespace fqf::vasc
