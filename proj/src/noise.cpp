#include "semigen/noise.hpp"

#include <string>

#include "semigen/errors.hpp"
#include "semigen/tensor.hpp"

namespace semigen {

void NoiseConfig::validate() const {
  for (double p : {p_delete, p_duplicate, p_swap}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise: rates must lie in [0, 1]");
  }
  if (p_delete + p_duplicate + p_swap > 1.0 + 1e-12) {
    throw ConfigError("noise: p_delete + p_duplicate + p_swap must not exceed 1");
  }
}

template <typename T>
std::vector<T> corrupt(std::span<const T> tokens, const NoiseConfig& cfg, std::mt19937_64& rng,
                       NoiseStats* stats) {
  if (tokens.empty()) throw ContractError("corrupt: empty input");
  cfg.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double t_delete = cfg.p_delete;
  const double t_duplicate = t_delete + cfg.p_duplicate;
  const double t_swap = t_duplicate + cfg.p_swap;
  NoiseStats local;
  std::vector<T> out;
  out.reserve(tokens.size() + tokens.size() / 4);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double u = unit(rng);
    ++local.draws;
    if (u < t_delete) {
      ++local.deleted;
    } else if (u < t_duplicate) {
      ++local.duplicated;
      out.push_back(tokens[i]);
      out.push_back(tokens[i]);
    } else if (u < t_swap) {
      ++local.swapped;
      if (i + 1 < tokens.size()) {
        out.push_back(tokens[i + 1]);
        out.push_back(tokens[i]);
        ++i;
      } else {
        out.push_back(tokens[i]);
      }
    } else {
      ++local.kept;
      out.push_back(tokens[i]);
    }
  }
  if (out.empty()) out.push_back(tokens.front());
  if (stats != nullptr) {
    stats->draws += local.draws;
    stats->kept += local.kept;
    stats->deleted += local.deleted;
    stats->duplicated += local.duplicated;
    stats->swapped += local.swapped;
  }
  return out;
}

template std::vector<int> corrupt<int>(std::span<const int>, const NoiseConfig&,
                                       std::mt19937_64&, NoiseStats*);
template std::vector<std::string> corrupt<std::string>(std::span<const std::string>,
                                                       const NoiseConfig&, std::mt19937_64&,
                                                       NoiseStats*);

TokenIds corrupt(std::span<const int> tokens, const NoiseConfig& cfg, std::mt19937_64& rng,
                 NoiseStats* stats) {
  return corrupt<int>(tokens, cfg, rng, stats);
}

}  // namespace semigen
