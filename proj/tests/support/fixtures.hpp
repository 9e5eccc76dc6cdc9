#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "factgym/fabricate.hpp"
#include "factgym/rng.hpp"

namespace fixtures {

inline const std::vector<std::string>& people() {
  static const std::vector<std::string> v{"Alice Moreau", "Bruno Silva", "Chen Wei", "Dara Okafor", "Emil Novak",
                                          "Farah Haddad", "Goran Petrov", "Hana Sato"};
  return v;
}

inline const std::vector<std::string>& places() {
  static const std::vector<std::string> v{"Red Sea", "Mediterranean Sea", "Lisbon", "Nairobi", "Osaka",
                                          "Quito", "Tallinn", "Baltic Sea"};
  return v;
}

inline std::string pad(std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(6 - std::min<std::size_t>(6, s.size()), '0') + s;
}

// Unit vector. With `coarse` every coordinate is +-1/sqrt(dim) for a dim that
// is a power of four, so norms and dot products are exact and many records
// tie on similarity.
inline std::vector<double> unit_vector(factgym::Rng& rng, std::size_t dim, bool coarse) {
  std::vector<double> v(dim);
  if (coarse) {
    const double c = 1.0 / std::sqrt(static_cast<double>(dim));
    for (double& x : v) x = rng.bernoulli(0.5) ? c : -c;
    return v;
  }
  double n = 0;
  for (double& x : v) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

inline factgym::fabricate::EmbeddingRecord news_record(factgym::Rng& rng, std::size_t i, std::size_t dim, bool coarse) {
  factgym::fabricate::EmbeddingRecord r;
  r.id = "n" + pad(i);
  const auto& person = people()[rng.index(people().size())];
  const auto& place = places()[rng.index(places().size())];
  r.title = person + " opens a harbour museum in " + place;
  r.entities = {factgym::make_entity(person, factgym::EntityType::Person),
                factgym::make_entity(place, factgym::EntityType::Location)};
  r.img_vec = unit_vector(rng, dim, coarse);
  r.txt_vec = unit_vector(rng, dim, coarse);
  r.timestamp = "2023-" + std::string(i % 12 < 9 ? "0" : "") + std::to_string(i % 12 + 1) + "-15";
  return r;
}

inline std::vector<factgym::fabricate::EmbeddingRecord> news_records(std::size_t n, std::size_t dim,
                                                                     std::uint64_t seed, bool coarse = false) {
  factgym::Rng rng(seed);
  std::vector<factgym::fabricate::EmbeddingRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(news_record(rng, i, dim, coarse));
  return out;
}

}  // namespace fixtures
