#pragma once

#include <string>
#include <vector>

namespace myotrack::tools {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::vector<Series> series;
};

/// Panels stacked vertically, one line chart each, shared legend per panel.
std::string render_svg(const std::vector<Panel>& panels, int width = 760, int panel_height = 250);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// -1 when absent.
  int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace myotrack::tools
