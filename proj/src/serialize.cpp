// SPDX-License-Identifier: Apache-2.0
#include "beamalign/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "beamalign/errors.hpp"

namespace beamalign {

namespace {

Json complex_matrix_to_json(const MatC& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

MatC complex_matrix_from_json(const Json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
  MatC m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) {
      const Json& pair = j.at(i).at(c);
      m(i, c) = cxd(pair.at(0).get<double>(), pair.at(1).get<double>());
    }
  return m;
}

Json real_matrix_to_json(const MatR& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatR real_matrix_from_json(const Json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
  MatR m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

Json real_vector_to_json(const VecR& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

VecR real_vector_from_json(const Json& j) {
  VecR v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

void check_schema(const Json& j) {
  const int version = j.value("schema_version", 1);
  if (version > kSchemaVersion)
    throw SchemaVersionError("file uses schema version " +
                             std::to_string(version) +
                             ", this build understands up to " +
                             std::to_string(kSchemaVersion));
}

}  // namespace

Json channel_to_json(const ChannelSet& ch) {
  Json j;
  j["K"] = ch.users();
  j["M"] = ch.antennas();
  if (ch.seed)
    j["seed"] = *ch.seed;
  else
    j["seed"] = "external";
  Json grid = Json::array();
  for (int k = 0; k < ch.users(); ++k) {
    Json row = Json::array();
    for (int l = 0; l < ch.users(); ++l)
      row.push_back(complex_matrix_to_json(ch.at(k, l)));
    grid.push_back(std::move(row));
  }
  j["H"] = std::move(grid);
  return j;
}

ChannelSet channel_from_json(const Json& j) {
  const int users = j.at("K").get<int>();
  const int antennas = j.at("M").get<int>();
  ChannelSet ch(users, antennas);
  if (j.at("seed").is_number())
    ch.seed = j.at("seed").get<std::uint64_t>();
  const Json& grid = j.at("H");
  for (int k = 0; k < users; ++k)
    for (int l = 0; l < users; ++l) {
      MatC h = complex_matrix_from_json(grid.at(k).at(l));
      if (h.rows() != antennas || h.cols() != antennas)
        throw InfeasibleConfigError("channel entry has wrong shape");
      if (!h.allFinite())
        throw InfeasibleConfigError("channel entry has non-finite values");
      ch.at(k, l) = std::move(h);
    }
  return ch;
}

void save_channels(const ChannelSet& ch, const std::filesystem::path& path) {
  save_json(channel_to_json(ch), path);
}

ChannelSet load_channels(const std::filesystem::path& path) {
  return channel_from_json(load_json(path));
}

Json beamformers_to_json(const Beamformers& b) {
  Json j;
  Json v = Json::array(), u = Json::array();
  for (const MatC& block : b.V) v.push_back(complex_matrix_to_json(block));
  for (const MatC& block : b.U) u.push_back(complex_matrix_to_json(block));
  j["V"] = std::move(v);
  j["U"] = std::move(u);
  return j;
}

Beamformers beamformers_from_json(const Json& j) {
  Beamformers b;
  for (const Json& block : j.at("V"))
    b.V.push_back(complex_matrix_from_json(block));
  for (const Json& block : j.at("U"))
    b.U.push_back(complex_matrix_from_json(block));
  return b;
}

Json solution_to_json(const Solution& sol) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["algorithm"] = sol.algorithm;
  j["iterations"] = sol.iterations;
  j["converged"] = sol.converged;
  j["final_displacement"] = sol.final_displacement;
  j["fp_tol"] = sol.fp_tol;
  j["beamformers"] = beamformers_to_json(sol.beams);
  j["powers"] = real_matrix_to_json(sol.powers.stream_power);
  Json rate;
  rate["per_stream"] = real_matrix_to_json(sol.rate.per_stream);
  rate["per_user"] = real_vector_to_json(sol.rate.per_user);
  rate["total"] = sol.rate.total;
  j["rate"] = std::move(rate);
  Json diag;
  diag["per_user_leakage"] = real_vector_to_json(sol.alignment.per_user_leakage);
  diag["cross_terms"] = sol.alignment.cross_terms;
  diag["rank_margins"] = real_vector_to_json(sol.alignment.rank_margins);
  Json ranks = Json::array();
  for (Eigen::Index i = 0; i < sol.alignment.interference_rank.size(); ++i)
    ranks.push_back(sol.alignment.interference_rank(i));
  diag["interference_rank"] = std::move(ranks);
  j["alignment"] = std::move(diag);
  if (!sol.trace.empty()) {
    Json trace = Json::array();
    for (const TracePoint& p : sol.trace)
      trace.push_back({{"iteration", p.iteration},
                       {"displacement", p.displacement},
                       {"sum_rate_bits", p.sum_rate_bits},
                       {"leakage", p.leakage}});
    j["trace"] = std::move(trace);
  }
  return j;
}

Solution solution_from_json(const Json& j) {
  check_schema(j);
  Solution sol;
  sol.algorithm = j.at("algorithm").get<std::string>();
  sol.iterations = j.at("iterations").get<int>();
  sol.converged = j.at("converged").get<bool>();
  sol.final_displacement = j.at("final_displacement").get<double>();
  sol.fp_tol = j.at("fp_tol").get<double>();
  sol.beams = beamformers_from_json(j.at("beamformers"));
  sol.powers.stream_power = real_matrix_from_json(j.at("powers"));
  sol.rate.per_stream = real_matrix_from_json(j.at("rate").at("per_stream"));
  sol.rate.per_user = real_vector_from_json(j.at("rate").at("per_user"));
  sol.rate.total = j.at("rate").at("total").get<double>();
  const Json& diag = j.at("alignment");
  sol.alignment.per_user_leakage =
      real_vector_from_json(diag.at("per_user_leakage"));
  sol.alignment.cross_terms = diag.at("cross_terms").get<double>();
  sol.alignment.rank_margins = real_vector_from_json(diag.at("rank_margins"));
  const Json& ranks = diag.at("interference_rank");
  sol.alignment.interference_rank.resize(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i)
    sol.alignment.interference_rank(i) = ranks.at(i).get<int>();
  if (j.contains("trace"))
    for (const Json& p : j.at("trace"))
      sol.trace.push_back({p.at("iteration").get<int>(),
                           p.at("displacement").get<double>(),
                           p.at("sum_rate_bits").get<double>(),
                           p.at("leakage").get<double>()});
  return sol;
}

Json clusters_to_json(const std::vector<FixedPointCluster>& clusters) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  Json arr = Json::array();
  for (const FixedPointCluster& cluster : clusters) {
    Json c;
    c["label"] = cluster.label;
    c["count"] = cluster.count;
    c["mean_rate"] = cluster.mean_rate;
    c["representative"] = solution_to_json(cluster.representative);
    Json sig = Json::array();
    for (const MatC& basis : cluster.subspace_signature)
      sig.push_back(complex_matrix_to_json(basis));
    c["subspace_signature"] = std::move(sig);
    arr.push_back(std::move(c));
  }
  j["clusters"] = std::move(arr);
  return j;
}

std::vector<FixedPointCluster> clusters_from_json(const Json& j) {
  check_schema(j);
  std::vector<FixedPointCluster> clusters;
  for (const Json& c : j.at("clusters")) {
    FixedPointCluster cluster;
    cluster.label = c.at("label").get<std::string>();
    cluster.count = c.at("count").get<int>();
    cluster.mean_rate = c.at("mean_rate").get<double>();
    cluster.representative = solution_from_json(c.at("representative"));
    for (const Json& basis : c.at("subspace_signature"))
      cluster.subspace_signature.push_back(complex_matrix_from_json(basis));
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

Json two_layer_to_json(const TwoLayerSolution& sol) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["outer_kind"] =
      sol.outer_kind == OuterKind::Svd ? "svd" : "zero-forcing";
  j["inner"] = beamformers_to_json(sol.inner);
  Json tx = Json::array(), rx = Json::array();
  for (const MatC& m : sol.outer_tx) tx.push_back(complex_matrix_to_json(m));
  for (const MatC& m : sol.outer_rx) rx.push_back(complex_matrix_to_json(m));
  j["outer_tx"] = std::move(tx);
  j["outer_rx"] = std::move(rx);
  j["singular_values"] = real_matrix_to_json(sol.singular_values);
  j["powers"] = real_matrix_to_json(sol.powers.stream_power);
  j["composed"] = beamformers_to_json(sol.composed);
  j["rate_bits"] = sol.rate_bits;
  j["water_level"] = sol.water_level;
  j["alignment_warning"] = sol.alignment_warning;
  return j;
}

void save_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  Json j;
  in >> j;
  return j;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

constexpr const char* kSweepHeader =
    "snr_db,algorithm,cluster_id,rate_bits,occupancy_percent,channel_seed,"
    "init_seed";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

void write_sweep_csv(const std::vector<SweepRecord>& records,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << kSweepHeader << '\n';
  for (const SweepRecord& r : records) {
    out << format_double(r.snr_db) << ',' << r.algorithm << ','
        << r.cluster_id << ',' << format_double(r.rate_bits) << ','
        << format_double(r.occupancy_percent) << ',' << r.channel_seed << ','
        << r.init_seed << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::string rate_report_csv(const RateReport& report) {
  std::string out = "k,m,rate_bits\n";
  for (int k = 0; k < report.per_stream.rows(); ++k)
    for (int m = 0; m < report.per_stream.cols(); ++m)
      out += std::to_string(k) + ',' + std::to_string(m) + ',' +
             format_double(report.per_stream(k, m)) + '\n';
  return out;
}

Json rate_report_summary(const RateReport& report) {
  Json j;
  j["per_stream"] = real_matrix_to_json(report.per_stream);
  j["per_user"] = real_vector_to_json(report.per_user);
  j["total"] = report.total;
  return j;
}

std::string trace_csv(const std::vector<TracePoint>& trace) {
  std::string out = "iter,displacement,sum_rate_bits,leakage\n";
  for (const TracePoint& p : trace)
    out += std::to_string(p.iteration) + ',' + format_double(p.displacement) +
           ',' + format_double(p.sum_rate_bits) + ',' +
           format_double(p.leakage) + '\n';
  return out;
}

std::vector<SweepRecord> read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader)
    throw IoError("unexpected sweep CSV header in " + path.string());
  std::vector<SweepRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 7)
      throw IoError("malformed sweep CSV row in " + path.string());
    SweepRecord r;
    r.snr_db = std::stod(fields[0]);
    r.algorithm = fields[1];
    r.cluster_id = fields[2];
    r.rate_bits = std::stod(fields[3]);
    r.occupancy_percent = std::stod(fields[4]);
    r.channel_seed = std::stoll(fields[5]);
    r.init_seed = std::stoull(fields[6]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace beamalign
