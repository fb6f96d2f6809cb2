#include "monomvn/io.hpp"

#include "monomvn/data_layout.hpp"
#include "monomvn/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace monomvn {

namespace {

constexpr std::array<char, 8> kMagic{'M', 'V', 'N', 'D', 'R', 'A', 'W', '1'};

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("'" + path + "' is truncated");
  return v;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), r.ptr);
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::string>& row_labels, const Eigen::MatrixXd& values) {
  std::ofstream out = open_out(path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    bool first = true;
    if (!row_labels.empty()) {
      out << row_labels[static_cast<std::size_t>(i)];
      first = false;
    }
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (first ? "" : ",") << format_double(values(i, j));
      first = false;
    }
    out << '\n';
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

void write_summary_csv(const std::string& path, const std::vector<std::string>& labels, const MvnEstimate& e) {
  const auto m = e.mu.size();
  Eigen::MatrixXd t(m + 1, m);
  t.row(0) = e.mu.transpose();
  t.bottomRows(m) = e.Sigma;
  std::vector<std::string> header{"row"};
  header.insert(header.end(), labels.begin(), labels.end());
  std::vector<std::string> rows{"mu"};
  rows.insert(rows.end(), labels.begin(), labels.end());
  write_table_csv(path, header, rows, t);
}

MvnEstimate read_summary_csv(const std::string& path, std::vector<std::string>* labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto pos = line.find(',', start);
      f.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (!f.empty() && !f.back().empty() && f.back().back() == '\r') f.back().pop_back();
    return f;
  };
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  const auto header = split(line);
  const auto m = static_cast<Eigen::Index>(header.size()) - 1;
  if (m < 1) throw DataError("'" + path + "' is not a summary file");
  Eigen::MatrixXd t(m + 1, m);
  Eigen::Index r = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (r > m || static_cast<Eigen::Index>(f.size()) != m + 1)
      throw DataError("'" + path + "' line " + std::to_string(lineno) + ": not a summary row");
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::string& cell = f[static_cast<std::size_t>(j + 1)];
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw DataError("'" + path + "' line " + std::to_string(lineno) + ": cannot parse '" + cell + "'");
      t(r, j) = v;
    }
    ++r;
  }
  if (r != m + 1) throw DataError("'" + path + "' is not a summary file (expected mu and Sigma rows)");
  MvnEstimate e;
  e.mu = t.row(0).transpose();
  e.Sigma = t.bottomRows(m);
  if (labels) labels->assign(header.begin() + 1, header.end());
  return e;
}

void write_draws_binary(const std::string& path, const std::vector<std::string>& labels,
                        const std::vector<MvnEstimate>& draws) {
  const auto m = static_cast<std::uint32_t>(labels.size());
  std::ofstream out = open_out(path, true);
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, m);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(draws.size()));
  for (const auto& l : labels) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.size()));
    out.write(l.data(), static_cast<std::streamsize>(l.size()));
  }
  for (std::uint32_t a = 0; a < m; ++a)
    for (const auto& d : draws) put<double>(out, d.mu[a]);
  for (std::uint32_t a = 0; a < m; ++a)
    for (std::uint32_t b = a; b < m; ++b)
      for (const auto& d : draws) put<double>(out, d.Sigma(a, b));
  if (!out) throw DataError("write to '" + path + "' failed");
}

bool is_draws_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<char, 8> head{};
  in.read(head.data(), head.size());
  return in && head == kMagic;
}

std::vector<MvnEstimate> read_draws_binary(const std::string& path, std::vector<std::string>* labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::array<char, 8> head{};
  in.read(head.data(), head.size());
  if (!in || head != kMagic) throw DataError("'" + path + "' is not a draws file");
  const auto m = get<std::uint32_t>(in, path);
  const auto T = get<std::uint32_t>(in, path);
  std::vector<std::string> names;
  for (std::uint32_t a = 0; a < m; ++a) {
    const auto len = get<std::uint32_t>(in, path);
    if (len > (1u << 20)) throw DataError("'" + path + "' has a corrupt label");
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw DataError("'" + path + "' is truncated");
    names.push_back(std::move(s));
  }
  std::vector<MvnEstimate> draws(T);
  for (auto& d : draws) {
    d.mu.resize(m);
    d.Sigma.resize(m, m);
  }
  for (std::uint32_t a = 0; a < m; ++a)
    for (auto& d : draws) d.mu[a] = get<double>(in, path);
  for (std::uint32_t a = 0; a < m; ++a)
    for (std::uint32_t b = a; b < m; ++b)
      for (auto& d : draws) d.Sigma(a, b) = d.Sigma(b, a) = get<double>(in, path);
  if (labels) *labels = std::move(names);
  return draws;
}

void write_draws_csv(const std::string& path, const std::vector<std::string>& labels,
                     const std::vector<MvnEstimate>& draws) {
  const auto m = static_cast<Eigen::Index>(labels.size());
  std::vector<std::string> header;
  for (const auto& l : labels) header.push_back("mu_" + l);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a; b < m; ++b)
      header.push_back("sigma_" + labels[static_cast<std::size_t>(a)] + "_" + labels[static_cast<std::size_t>(b)]);
  Eigen::MatrixXd t(static_cast<Eigen::Index>(draws.size()), static_cast<Eigen::Index>(header.size()));
  for (std::size_t k = 0; k < draws.size(); ++k) {
    Eigen::Index c = 0;
    const auto r = static_cast<Eigen::Index>(k);
    for (Eigen::Index a = 0; a < m; ++a) t(r, c++) = draws[k].mu[a];
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = a; b < m; ++b) t(r, c++) = draws[k].Sigma(a, b);
  }
  write_table_csv(path, header, {}, t);
}

void write_inclusion_csv(const std::string& path, const PosteriorDrawSet& draws) {
  Eigen::MatrixXd p = inclusion_probabilities(draws);
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p.data()[i] < 0.0) p.data()[i] = std::nan("");
  std::vector<std::string> header{"response"};
  header.insert(header.end(), draws.factor_labels.begin(), draws.factor_labels.end());
  header.insert(header.end(), draws.labels.begin(), draws.labels.end());
  write_table_csv(path, header, draws.labels, p);
}

}  // namespace monomvn
