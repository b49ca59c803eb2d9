#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "iqp/errors.hpp"
#include "iqp/gbdt.hpp"
#include "iqp/rng.hpp"
#include "iqp/tract.hpp"

namespace iqp {

// How the synthetic hazard label relates to the infrastructure features.
enum class SynthMode {
  Separable,  // label = 1 exactly when the planted score is positive
  Planted,    // label ~ Bernoulli(sigmoid(score)): noisy but recoverable
  Null,       // label ~ Bernoulli(0.5): no signal at all
};

inline const char* synth_mode_name(SynthMode m) {
  switch (m) {
    case SynthMode::Separable: return "separable";
    case SynthMode::Planted: return "planted";
    case SynthMode::Null: return "null";
  }
  return "unknown";
}

inline SynthMode parse_synth_mode(const std::string& s) {
  if (s == "separable") return SynthMode::Separable;
  if (s == "planted") return SynthMode::Planted;
  if (s == "null") return SynthMode::Null;
  throw ConfigError("unknown synth mode: " + s);
}

struct SynthSpec {
  std::string city = "synthville";
  std::size_t n = 800;
  SynthMode mode = SynthMode::Planted;
  // score = a (road - road_t) + b (rail - rail_t) - c * park
  double a = 0.15;
  double b = 0.25;
  double c = 0.05;
  double road_t = 30.0;
  double rail_t = 10.0;
  // Separable mode resamples tracts with |score| below this, so the two
  // classes have a clean margin between them.
  double separation_margin = 0.25;
  double missing_income_rate = 0.02;
};

struct SynthCity {
  std::vector<TractRecord> records;
  std::vector<int> true_labels;
};

// Feature ranges are chosen so each feature's mean sits at its planted
// threshold (road in [0,60] around 30, rail in [0,20] around 10); the
// cover-weighted dependence curves then cross zero near the planted values.
// Hazard indicators are two far-apart blobs conditioned on the label, so the
// clustering stage recovers the label; income runs against hazard.
inline SynthCity make_synth_city(const SynthSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  SynthCity city;
  city.records.reserve(spec.n);
  city.true_labels.reserve(spec.n);

  for (std::size_t i = 0; i < spec.n; ++i) {
    TractRecord rec;
    double score = 0.0;
    for (;;) {
      rec.road_pct = rng.uniform(0.0, 60.0);
      rec.rail_pct = rng.uniform(0.0, 20.0);
      rec.park_pct = rng.uniform(0.0, 40.0);
      rec.house_age_pct = rng.uniform(0.0, 100.0);
      rec.walkability = rng.uniform(1.0, 20.0);
      rec.poi_density = rng.exponential(250.0);
      score = spec.a * (rec.road_pct - spec.road_t) +
              spec.b * (rec.rail_pct - spec.rail_t) - spec.c * rec.park_pct;
      if (spec.mode != SynthMode::Separable || std::abs(score) >= spec.separation_margin)
        break;
    }

    const double u_label = rng.uniform();
    int z = 0;
    switch (spec.mode) {
      case SynthMode::Separable: z = score > 0.0 ? 1 : 0; break;
      case SynthMode::Planted: z = u_label < sigmoid(score) ? 1 : 0; break;
      case SynthMode::Null: z = u_label < 0.5 ? 1 : 0; break;
    }

    rec.heat_days = std::max(0.0, z ? rng.normal(40.0, 2.0) : rng.normal(5.0, 2.0));
    rec.pm25_days = std::max(0.0, z ? rng.normal(9.0, 1.0) : rng.normal(1.0, 0.5));

    const double income = (z ? 55000.0 : 85000.0) + rng.normal(0.0, 8000.0);
    if (rng.uniform() >= spec.missing_income_rate)
      rec.median_income = std::max(5000.0, income);

    rec.city = spec.city;
    char geoid[16];
    std::snprintf(geoid, sizeof(geoid), "S%05zu", i);
    rec.geoid = geoid;

    city.records.push_back(std::move(rec));
    city.true_labels.push_back(z);
  }
  return city;
}

}  // namespace iqp
