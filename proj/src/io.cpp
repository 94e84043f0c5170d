#include "netar/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace netar {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(std::string_view s, T& value) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

Network read_edges(std::istream& in, const NormalizeOptions& opts) {
  EdgeList edges;
  std::optional<int> declared;
  int max_index = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      view = trim(view.substr(1));
      if (view.rfind("nodes:", 0) == 0) {
        int n = 0;
        if (!parse_number(view.substr(6), n) || n < 1)
          throw std::invalid_argument("edge list line " + std::to_string(lineno) + ": bad node count");
        declared = n;
      }
      continue;
    }
    std::istringstream fields{std::string(view)};
    std::string a, b, extra;
    int i = 0, j = 0;
    if (!(fields >> a >> b) || (fields >> extra) || !parse_number(a, i) || !parse_number(b, j))
      throw std::invalid_argument("edge list line " + std::to_string(lineno) + ": expected two integers");
    edges.emplace_back(i, j);
    max_index = std::max({max_index, i, j});
  }
  const int n = declared.value_or(max_index + 1);
  if (n < 1) throw std::invalid_argument("edge list is empty and declares no node count");
  return row_normalize(edges, n, opts);
}

Network load_edges(const std::string& path, const NormalizeOptions& opts) {
  auto in = open_in(path);
  return read_edges(in, opts);
}

void write_edges(std::ostream& out, const Network& net) {
  out << "# nodes: " << net.size() << '\n';
  for (const auto& [i, j] : net.edges()) out << i << ' ' << j << '\n';
}

void save_edges(const std::string& path, const Network& net) {
  auto out = open_out(path);
  write_edges(out, net);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Panel read_panel_csv(std::istream& in, Domain domain, std::optional<int> expected_nodes) {
  Panel panel;
  panel.domain = domain;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("panel csv is empty");
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) panel.labels.emplace_back(trim(cell));
  }
  const int n = static_cast<int>(panel.labels.size());
  if (expected_nodes && *expected_nodes != n)
    throw std::invalid_argument("panel has " + std::to_string(n) + " columns, network has " +
                                std::to_string(*expected_nodes) + " nodes");

  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++rows;
    std::stringstream row(line);
    std::string cell;
    int c = 0;
    while (std::getline(row, cell, ',')) {
      double v = 0.0;
      if (!parse_number(cell, v) || !std::isfinite(v))
        throw std::invalid_argument("panel row " + std::to_string(rows) + ": non-numeric cell '" + cell + "'");
      if (domain == Domain::Count) {
        if (v < 0.0) throw std::invalid_argument("panel row " + std::to_string(rows) + ": negative count");
        if (v != std::floor(v)) throw std::invalid_argument("panel row " + std::to_string(rows) + ": non-integer count");
      }
      values.push_back(v);
      ++c;
    }
    if (c != n)
      throw std::invalid_argument("panel row " + std::to_string(rows) + " has " + std::to_string(c) + " cells, expected " +
                                  std::to_string(n));
  }
  if (rows == 0) throw std::invalid_argument("panel csv has no data rows");
  panel.values.resize(n, rows);
  for (int t = 0; t < rows; ++t)
    for (int i = 0; i < n; ++i) panel.values(i, t) = values[static_cast<std::size_t>(t) * n + i];
  return panel;
}

Panel load_panel_csv(const std::string& path, Domain domain, std::optional<int> expected_nodes) {
  auto in = open_in(path);
  return read_panel_csv(in, domain, expected_nodes);
}

void write_panel_csv(std::ostream& out, const Panel& panel) {
  const auto labels = panel.labels.empty() ? default_labels(panel.nodes()) : panel.labels;
  for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? "," : "") << labels[i];
  out << '\n';
  char buf[32];
  for (int t = 0; t < panel.periods(); ++t) {
    for (int i = 0; i < panel.nodes(); ++i) {
      const double v = panel.values(i, t);
      if (panel.domain == Domain::Count)
        std::snprintf(buf, sizeof buf, "%.0f", v);
      else
        std::snprintf(buf, sizeof buf, "%.17g", v);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

void save_panel_csv(const std::string& path, const Panel& panel) {
  auto out = open_out(path);
  write_panel_csv(out, panel);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace netar
