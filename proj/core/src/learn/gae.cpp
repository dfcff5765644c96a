#include "fluidrl/learn/gae.hpp"

#include <stdexcept>

namespace fluidrl {

std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   const std::vector<std::uint8_t>& done,
                                   double gamma, double lambda) {
  const std::size_t T = rewards.size();
  if (values.size() != T + 1 || done.size() != T)
    throw std::runtime_error("gae: stream lengths disagree");
  std::vector<double> adv(T, 0.0);
  double carry = 0.0;
  for (std::size_t t = T; t-- > 0;) {
    const double cont = done[t] ? 0.0 : 1.0;
    const double delta =
        rewards[t] + gamma * cont * values[t + 1] - values[t];
    carry = delta + gamma * lambda * cont * carry;
    adv[t] = carry;
  }
  return adv;
}

}  // namespace fluidrl
