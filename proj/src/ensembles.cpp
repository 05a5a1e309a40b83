#include "halting/ensembles.hpp"

namespace halting {

std::string EnsembleSpec::name() const {
  if (beta == 1) return law == EntryLaw::gaussian ? "LOE" : "BE";
  return law == EntryLaw::gaussian ? "LUE" : "CBE";
}

void EnsembleSpec::validate() const {
  if (beta != 1 && beta != 2)
    throw std::invalid_argument("ensemble: beta must be 1 or 2");
  if (!(d > 0.0 && d < 1.0))
    throw std::invalid_argument("ensemble: d must lie in (0,1)");
  if (N < 1) throw std::invalid_argument("ensemble: N must be positive");
  if (M() < N) throw std::invalid_argument("ensemble: M < N");
}

EnsembleSpec ensemble_from_name(const std::string& name, int N, double d) {
  EnsembleSpec s;
  s.N = N;
  s.d = d;
  if (name == "LOE") {
    s.beta = 1;
    s.law = EntryLaw::gaussian;
  } else if (name == "BE") {
    s.beta = 1;
    s.law = EntryLaw::bernoulli;
  } else if (name == "LUE") {
    s.beta = 2;
    s.law = EntryLaw::gaussian;
  } else if (name == "CBE") {
    s.beta = 2;
    s.law = EntryLaw::bernoulli;
  } else {
    throw std::invalid_argument("unknown ensemble name: " + name);
  }
  s.validate();
  return s;
}

}  // namespace halting
