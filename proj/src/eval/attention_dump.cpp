#include "dmsn/eval/attention_dump.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "dmsn/error.hpp"

namespace dmsn {

std::vector<long long> round_weights_to_micros(const std::vector<double>& weights) {
  constexpr long long kScale = 1000000;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<long long> micros(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  long long assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] / total * static_cast<double>(kScale);
    micros[i] = static_cast<long long>(std::floor(exact));
    assigned += micros[i];
    remainders.emplace_back(exact - static_cast<double>(micros[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (long long k = 0; k < kScale - assigned; ++k) {
    micros[remainders[static_cast<std::size_t>(k) % remainders.size()].second] += 1;
  }
  return micros;
}

void dump_attention(const ModelParams& params, const std::vector<SampleRecord>& records, std::ostream& out) {
  if (!params.spec.has_attention()) {
    throw std::invalid_argument("dump_attention: variant '" + std::string(to_string(params.spec.kind)) +
                                "' has no attention layer");
  }
  const Network net(params.spec);
  out << kTraceHeader << '\n';
  char buf[160];
  for (std::size_t rec = 0; rec < records.size(); ++rec) {
    AttentionTrace trace;
    net.predict(make_input(records[rec], params.spec), params.tensors, &trace);
    for (const auto& head : trace.heads) {
      const int grain = head.branch * params.spec.num_grains() + head.grain;
      const auto micros = round_weights_to_micros(head.weights);
      for (std::size_t i = 0; i < head.weights.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%d,%zu,%d,%d,%.6f,%lld.%06lld\n", rec, grain, head.positions[i],
                      head.cities[i], head.action_units[i], head.tau_days[i], micros[i] / 1000000,
                      micros[i] % 1000000);
        out << buf;
      }
    }
  }
}

void dump_attention(const ModelParams& params, const std::vector<SampleRecord>& records,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write trace file '" + path.string() + "'");
  dump_attention(params, records, out);
}

double head_mass(const AttentionHead& head, int city) {
  double mass = 0.0;
  for (std::size_t i = 0; i < head.cities.size(); ++i) {
    if (head.cities[i] == city) mass += head.weights[i];
  }
  return mass;
}

}  // namespace dmsn
