#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "netar/dgp.hpp"
#include "netar/network.hpp"

namespace netar {

/// Edge list: one "i j" pair per line, 0-based; '#' starts a comment. A
/// "# nodes: N" comment fixes the node count, otherwise it is max index + 1.
Network read_edges(std::istream& in, const NormalizeOptions& opts = {});
Network load_edges(const std::string& path, const NormalizeOptions& opts = {});
void write_edges(std::ostream& out, const Network& net);
void save_edges(const std::string& path, const Network& net);

/// Panel CSV: a header of node labels, then one row per time step. Count
/// panels are written as integers, continuous ones with 17 significant
/// digits so a round trip is exact. Loading validates the domain and, when
/// a node count is given, the shape.
Panel read_panel_csv(std::istream& in, Domain domain, std::optional<int> expected_nodes = std::nullopt);
Panel load_panel_csv(const std::string& path, Domain domain, std::optional<int> expected_nodes = std::nullopt);
void write_panel_csv(std::ostream& out, const Panel& panel);
void save_panel_csv(const std::string& path, const Panel& panel);

}  // namespace netar
