#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "imbalkit/csv.hpp"
#include "imbalkit/error.hpp"
#include "imbalkit/random.hpp"
#include "imbalkit/report.hpp"

namespace imbalkit {
namespace {

ColumnSchema categorical(std::string name, std::vector<std::string> categories) {
  return {std::move(name), ColumnKind::categorical, std::move(categories), std::nullopt};
}

ColumnSchema binary(std::string name, std::string a, std::string b) {
  return {std::move(name), ColumnKind::binary, {std::move(a), std::move(b)}, std::nullopt};
}

ColumnSchema continuous(std::string name) { return {std::move(name), ColumnKind::continuous, {}, std::nullopt}; }

const std::vector<std::string> kLikert = {"1", "2", "3", "4", "5"};

int likert(double latent, double noise) {
  return static_cast<int>(std::clamp(std::lround(3.0 + 1.1 * latent + noise), 1L, 5L));
}

std::string fixed2(double v) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << v;
  return out.str();
}

std::size_t pick(Rng& rng, std::span<const double> weights) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

}  // namespace

Dataset generate_synthetic(const SyntheticOptions& options) {
  if (options.rows < 10) throw std::invalid_argument("generate_synthetic: need at least 10 rows");
  if (options.positives == 0 || options.positives >= options.rows)
    throw std::invalid_argument("generate_synthetic: positives must be in (0, rows)");

  Dataset data;
  data.target = "abused";
  data.schema = {
      categorical("age_group", {"18-25", "26-35", "36-45", "46-55", "56+"}),
      categorical("education", {"higher", "none", "primary", "secondary"}),
      categorical("occupation", {"business", "day_labor", "service", "student", "unemployed"}),
      continuous("monthly_income"),
      continuous("years_married"),
      binary("family_type", "joint", "nuclear"),
      binary("residence", "rural", "urban"),
      categorical("children", {"0", "1", "2", "3+"}),
      binary("financial_dependency", "No", "Yes"),
      binary("substance_use", "No", "Yes"),
      categorical("in_law_conflict", kLikert),
      categorical("spouse_education_gap", {"higher", "lower", "same"}),
      continuous("social_support"),
  };
  for (const char* scale : {"verbal", "control", "physical"})
    for (int i = 1; i <= 3; ++i) data.schema.push_back(categorical(std::string(scale) + "_" + std::to_string(i), kLikert));
  ColumnSchema target = binary("abused", "No", "Yes");
  target.positive = "Yes";
  data.schema.push_back(target);

  const std::size_t n = options.rows;
  Rng rng(options.seed, Stream::synthetic);
  std::vector<double> score(n);
  data.rows.resize(n);

  const double age_w[] = {0.2, 0.32, 0.25, 0.15, 0.08};
  const double edu_w[] = {0.25, 0.1, 0.25, 0.4};
  const double occ_w[] = {0.25, 0.2, 0.35, 0.1, 0.1};
  const double kid_w[] = {0.2, 0.3, 0.3, 0.2};
  const double gap_w[] = {0.3, 0.25, 0.45};

  for (std::size_t r = 0; r < n; ++r) {
    auto& row = data.rows[r];
    std::size_t age = pick(rng, age_w);
    std::size_t edu = pick(rng, edu_w);
    std::size_t occ = pick(rng, occ_w);
    double log_income = 9.8 + 0.25 * static_cast<double>(age) - (occ == 4 ? 0.9 : 0.0) + 0.35 * rng.normal();
    double income = std::exp(log_income);
    double years = std::max(0.0, 2.0 + 6.5 * static_cast<double>(age) + 3.0 * rng.normal());
    bool joint = rng.uniform() < 0.45;
    bool urban = rng.uniform() < 0.6;
    std::size_t kids = pick(rng, kid_w);
    bool dependent = rng.uniform() < (occ >= 3 ? 0.7 : 0.25);
    bool substance = rng.uniform() < 0.15;
    double inlaw_latent = rng.normal() + (joint ? 0.6 : -0.2);
    int inlaw = likert(0.9 * inlaw_latent, 0.5 * rng.normal());
    std::size_t gap = pick(rng, gap_w);
    double support = 50.0 + 12.0 * rng.normal();

    double verbal = rng.normal();
    double control = 0.3 * verbal + rng.normal();
    double physical = 0.2 * verbal + rng.normal();

    row = {data.schema[0].categories[age], data.schema[1].categories[edu], data.schema[2].categories[occ],
           fixed2(income), fixed2(years), joint ? "joint" : "nuclear", urban ? "urban" : "rural",
           data.schema[7].categories[kids], dependent ? "Yes" : "No", substance ? "Yes" : "No",
           kLikert[static_cast<std::size_t>(inlaw - 1)], data.schema[11].categories[gap], fixed2(support)};
    for (double latent : {verbal, control, physical})
      for (int i = 0; i < 3; ++i) row.push_back(kLikert[static_cast<std::size_t>(likert(latent, 0.6 * rng.normal()) - 1)]);

    double z = (log_income - 10.3) / 0.5;
    score[r] = 1.0 * verbal + 0.6 * control + 0.5 * physical + (dependent ? 1.1 * std::max(0.0, verbal) + 0.4 : 0.0) +
               (substance && age <= 1 ? 1.2 : 0.0) + (joint && inlaw >= 4 ? 0.9 : 0.0) - 0.6 * std::tanh(z) * z +
               (gap == 1 ? 0.4 : 0.0) - 0.02 * (support - 50.0) + 0.6 * rng.normal();
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  for (std::size_t i = 0; i < n; ++i) data.rows[order[i]].push_back(i < options.positives ? "Yes" : "No");
  return data;
}

std::string dataset_to_csv(const Dataset& dataset) {
  std::ostringstream out;
  csv::Row header;
  for (const auto& c : dataset.schema) header.push_back(c.name);
  csv::write_row(out, header);
  for (const auto& row : dataset.rows) csv::write_row(out, row);
  return out.str();
}

}  // namespace imbalkit
