#include "rcsl/oracles/align_iteration.hpp"

#include <string>

#include "rcsl/error.hpp"

namespace rcsl::oracles {

namespace {

bool supported(const std::vector<std::uint8_t>& support, int s, int a, int A) {
  return support.empty() || support[static_cast<std::size_t>(s) * A + a] != 0;
}

}  // namespace

std::vector<QTable> exact_align_iteration(const worldkit::TabularMDP& mdp,
                                          const std::vector<std::uint8_t>& support,
                                          PerturbMode mode, double gamma, int iterations) {
  mdp.validate();
  if (iterations < 0) throw ValidationError("align iteration: iteration count must be >= 0");
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw ValidationError("align iteration: discount must lie in (0, 1]");
  }
  if (!support.empty() &&
      support.size() != static_cast<std::size_t>(mdp.n_states) * mdp.n_actions) {
    throw ValidationError("align iteration: support mask size disagrees with |S| x |A|");
  }

  QTable q;
  q.n_states = mdp.n_states;
  q.n_actions = mdp.n_actions;
  q.q.assign(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 0.0);
  std::vector<QTable> iterates;
  iterates.reserve(static_cast<std::size_t>(iterations) + 1);
  iterates.push_back(q);

  for (int m = 0; m < iterations; ++m) {
    const QTable prev = q;
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        double next = mdp.r(s, a);
        if (!mdp.is_terminal(s)) {
          double ev = 0.0;
          for (int s2 = 0; s2 < mdp.n_states; ++s2) {
            const double p = mdp.p(s, a, s2);
            if (p <= 0.0) continue;
            double v = 0.0;
            if (mode == PerturbMode::zero) {
              for (int a2 = 0; a2 < mdp.n_actions; ++a2) {
                const double pb = mdp.b(s2, a2);
                if (pb <= 0.0) continue;
                if (!supported(support, s2, a2, mdp.n_actions)) {
                  throw ValidationError(
                      "align iteration: behavior uses unsupported action " + std::to_string(a2) +
                      " at state " + std::to_string(s2));
                }
                v += pb * prev.at(s2, a2);
              }
            } else {
              bool any = false;
              for (int a2 = 0; a2 < mdp.n_actions; ++a2) {
                if (!supported(support, s2, a2, mdp.n_actions)) continue;
                const double cand = prev.at(s2, a2);
                if (!any || cand > v) v = cand;
                any = true;
              }
              if (!any) {
                throw ValidationError("align iteration: state " + std::to_string(s2) +
                                      " has no supported action");
              }
            }
            ev += p * v;
          }
          next += gamma * ev;
        }
        q.at(s, a) = next;
      }
    }
    iterates.push_back(q);
  }
  return iterates;
}

}  // namespace rcsl::oracles
