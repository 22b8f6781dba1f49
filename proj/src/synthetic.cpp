#include "tsgc/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "tsgc/common.hpp"

namespace tsgc {

Dataset gen_synthetic(int n_per_class, int length, std::uint64_t seed, double noise_sd) {
  if (n_per_class < 2) throw Error("gen_synthetic: n_per_class must be >= 2");
  if (length < 16) throw Error("gen_synthetic: length must be >= 16");
  if (!(noise_sd >= 0.0)) throw Error("gen_synthetic: noise must be >= 0");

  const double period = static_cast<double>(length) / 4.0;
  const auto shape = [&](int cls, int t) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / period;
    switch (cls) {
      case 0: return std::sin(phase);
      case 1: return std::sin(phase) >= 0.0 ? 1.0 : -1.0;
      default: return -1.0 + 2.0 * static_cast<double>(t) / static_cast<double>(length - 1);
    }
  };

  Rng rng = SeedStream(seed).split("synthetic").rng();
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds;
  ds.name = "synthetic";
  ds.num_classes = 3;
  for (int cls = 0; cls < 3; ++cls) {
    for (int r = 0; r < n_per_class; ++r) {
      TimeSeries ts;
      ts.id = std::to_string(ds.series.size());
      ts.label = cls;
      ts.values.resize(static_cast<std::size_t>(length));
      for (int t = 0; t < length; ++t) ts.values[t] = shape(cls, t) + noise_sd * noise(rng);
      ds.series.push_back(std::move(ts));
    }
  }
  return ds;
}

}  // namespace tsgc
