// Rate-scaling story: how the retry cap lifts the pair probability, what the
// fiber does to it, and where the asynchronous schemes overtake conventional
// two-photon interference over the same link.

#include "qrcell/qrcell.hpp"

#include <cstdio>

using namespace qrcell;

int main() {
  const double p1 = 0.00114, p2 = 0.00096;

  std::printf("pair probability vs retry cap (p1 = %g, p2 = %g)\n", p1, p2);
  for (long n : {1L, 3L, 10L, 30L, 100L, 300L}) {
    const double p = rates::p_pair_asyn(p1, p2, n);
    std::printf("  n_max = %4ld   p_pair = %.6e   gain over n=1: %6.2f\n", n, p,
                p / rates::p_pair_syn(p1, p2));
  }

  rates::ChannelModel channel;  // 0.2 dB/km
  std::printf("\nover fiber (attenuation %.2g dB/km, n_max = 100)\n",
              channel.attenuation_db_per_km);
  std::printf("  %-6s %-10s %-14s %-14s\n", "p_t", "length/km", "p_pair_asyn", "p_pair_syn");
  for (double p_t : {1.0, 0.78, 0.48, 0.24}) {
    std::printf("  %-6g %-10.4f %-14.6e %-14.6e\n", p_t,
                channel.length_for_transmission(p_t),
                rates::p_pair_asyn(p1 * p_t, p2 * p_t, 100),
                rates::p_pair_syn(p1 * p_t, p2 * p_t));
  }

  // superiority threshold: smallest retry cap at which the asynchronous
  // scheme beats direct two-photon interference over the same link
  rates::RateScenario scenario;
  scenario.p = 0.001;
  scenario.p_t = 0.24;
  scenario.one_way_length = 31.4e3;
  std::printf("\nsuperiority over direct interference (p = %g, p_t = %g, L = %.1f km)\n",
              scenario.p, scenario.p_t, scenario.one_way_length / 1e3);
  for (auto [kind, name] : {std::pair{rates::RateKind::fully_asyn, "fully asynchronous"},
                            std::pair{rates::RateKind::semi_asyn, "semi asynchronous"}}) {
    const auto res = rates::superiority_threshold(scenario, kind);
    if (res.n_min)
      std::printf("  %-20s n_max >= %ld\n", name, *res.n_min);
    else
      std::printf("  %-20s never (best ratio %.4f)\n", name, res.best_ratio);
  }

  // with a brighter source the crossover comes much earlier
  scenario.p = 0.0034;
  std::printf("\nsame link at p = %g\n", scenario.p);
  for (auto [kind, name] : {std::pair{rates::RateKind::fully_asyn, "fully asynchronous"},
                            std::pair{rates::RateKind::semi_asyn, "semi asynchronous"}}) {
    const auto res = rates::superiority_threshold(scenario, kind);
    if (res.n_min)
      std::printf("  %-20s n_max >= %ld\n", name, *res.n_min);
    else
      std::printf("  %-20s never (best ratio %.4f)\n", name, res.best_ratio);
  }
  return 0;
}
