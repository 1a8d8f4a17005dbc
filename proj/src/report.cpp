// SPDX-License-Identifier: Apache-2.0
#include "beamalign/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace beamalign {

namespace {

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

int label_order(const std::string& label) {
  if (label == "NC") return 1 << 20;
  if (label.size() > 1 && label[0] == 'F')
    return std::atoi(label.c_str() + 1);
  return (1 << 20) - 1;
}

}  // namespace

std::vector<ModeTable> build_mode_tables(
    const std::vector<SweepRecord>& records) {
  std::map<std::pair<std::string, std::int64_t>, std::vector<SweepRecord>>
      groups;
  for (const SweepRecord& r : records)
    groups[{r.algorithm, r.channel_seed}].push_back(r);

  std::vector<ModeTable> tables;
  for (const auto& [key, recs] : groups) {
    ModeTable table;
    table.algorithm = key.first;
    table.channel_seed = key.second;

    std::set<double> snrs;
    std::set<std::string> labels;
    for (const SweepRecord& r : recs) {
      snrs.insert(r.snr_db);
      if (r.cluster_id != "NC") labels.insert(r.cluster_id);
    }
    table.snr_points_db.assign(snrs.begin(), snrs.end());
    table.labels.assign(labels.begin(), labels.end());
    std::sort(table.labels.begin(), table.labels.end(),
              [](const std::string& a, const std::string& b) {
                return label_order(a) < label_order(b);
              });

    const auto snr_index = [&](double snr) {
      return static_cast<int>(
          std::lower_bound(table.snr_points_db.begin(),
                           table.snr_points_db.end(), snr) -
          table.snr_points_db.begin());
    };
    const auto label_index = [&](const std::string& label) {
      return static_cast<int>(
          std::find(table.labels.begin(), table.labels.end(), label) -
          table.labels.begin());
    };

    const int n_labels = static_cast<int>(table.labels.size());
    const int n_snr = static_cast<int>(table.snr_points_db.size());
    table.rate.assign(n_labels, std::vector<double>(n_snr, 0.0));
    table.occupancy.assign(n_labels, std::vector<double>(n_snr, -1.0));
    table.average_rate.assign(n_snr, 0.0);
    std::vector<std::vector<int>> cell_count(n_labels,
                                             std::vector<int>(n_snr, 0));
    std::vector<int> converged_count(n_snr, 0);

    std::map<std::uint64_t, std::set<std::string>> per_init_labels;
    for (const SweepRecord& r : recs) {
      const int s = snr_index(r.snr_db);
      per_init_labels[r.init_seed].insert(r.cluster_id);
      if (r.cluster_id == "NC") continue;
      const int l = label_index(r.cluster_id);
      cell_count[l][s] += 1;
      table.rate[l][s] += (r.rate_bits - table.rate[l][s]) / cell_count[l][s];
      table.occupancy[l][s] = r.occupancy_percent;
      converged_count[s] += 1;
      table.average_rate[s] +=
          (r.rate_bits - table.average_rate[s]) / converged_count[s];
    }
    table.inits = static_cast<int>(per_init_labels.size());
    for (const auto& entry : per_init_labels)
      if (entry.second.size() > 1) ++table.label_transitions;
    tables.push_back(std::move(table));
  }
  return tables;
}

std::string render_markdown(const ModeTable& table) {
  std::ostringstream out;
  out << "### " << table.algorithm << " — channel seed ";
  if (table.channel_seed >= 0)
    out << table.channel_seed;
  else
    out << "external";
  out << " (" << table.inits << " initializations)\n\n";

  out << "| mode |";
  for (double snr : table.snr_points_db) out << ' ' << snr << " dB |";
  out << "\n|------|";
  for (std::size_t i = 0; i < table.snr_points_db.size(); ++i) out << "------|";
  out << '\n';

  for (std::size_t l = 0; l < table.labels.size(); ++l) {
    out << "| " << table.labels[l] << " |";
    for (std::size_t s = 0; s < table.snr_points_db.size(); ++s) {
      if (table.occupancy[l][s] < 0.0)
        out << " — (0.0) |";
      else
        out << ' ' << fixed(table.rate[l][s], 2) << " ("
            << fixed(table.occupancy[l][s], 1) << ") |";
    }
    out << '\n';
  }
  out << "| average |";
  for (std::size_t s = 0; s < table.snr_points_db.size(); ++s)
    out << ' ' << fixed(table.average_rate[s], 2) << " |";
  out << '\n';
  out << "\nInitializations whose mode label changes across SNR: "
      << table.label_transitions << " of " << table.inits
      << " (labels are rate-ranked per SNR point).\n";
  return out.str();
}

std::string render_plot_csv(const std::vector<ModeTable>& tables) {
  std::ostringstream out;
  out << "algorithm,cluster_id,snr_db,rate_bits\n";
  for (const ModeTable& table : tables)
    for (std::size_t l = 0; l < table.labels.size(); ++l)
      for (std::size_t s = 0; s < table.snr_points_db.size(); ++s) {
        if (table.occupancy[l][s] < 0.0) continue;
        out << table.algorithm << ',' << table.labels[l] << ','
            << table.snr_points_db[s] << ',' << table.rate[l][s] << '\n';
      }
  return out.str();
}

std::string render_svg(const ModeTable& table) {
  constexpr int kWidth = 640, kHeight = 420, kMargin = 50;
  double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;
  if (!table.snr_points_db.empty()) {
    min_x = table.snr_points_db.front();
    max_x = std::max(table.snr_points_db.back(), min_x + 1e-9);
  }
  bool any = false;
  for (std::size_t l = 0; l < table.labels.size(); ++l)
    for (std::size_t s = 0; s < table.snr_points_db.size(); ++s)
      if (table.occupancy[l][s] >= 0.0) {
        if (!any) {
          min_y = max_y = table.rate[l][s];
          any = true;
        }
        min_y = std::min(min_y, table.rate[l][s]);
        max_y = std::max(max_y, table.rate[l][s]);
      }
  if (max_y <= min_y) max_y = min_y + 1.0;

  const auto x_of = [&](double snr) {
    return kMargin + (snr - min_x) / (max_x - min_x) * (kWidth - 2 * kMargin);
  };
  const auto y_of = [&](double rate) {
    return kHeight - kMargin -
           (rate - min_y) / (max_y - min_y) * (kHeight - 2 * kMargin);
  };

  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin
      << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\""
      << kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">SNR (dB)</text>\n";
  out << "<text x=\"15\" y=\"" << kHeight / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 "
         "15 "
      << kHeight / 2 << ")\">sum rate (bits)</text>\n";

  for (std::size_t l = 0; l < table.labels.size(); ++l) {
    std::ostringstream points;
    for (std::size_t s = 0; s < table.snr_points_db.size(); ++s) {
      if (table.occupancy[l][s] < 0.0) continue;
      points << x_of(table.snr_points_db[s]) << ',' << y_of(table.rate[l][s])
             << ' ';
    }
    const char* color = kColors[l % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"" << points.str() << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin + 5 << "\" y=\""
        << kMargin + 14 * static_cast<int>(l) << "\" font-size=\"11\" fill=\""
        << color << "\">" << table.labels[l] << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace beamalign
