// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>

#include "gcnm/error.hpp"
#include "gcnm/stats.hpp"

namespace gcnm {

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void emit_cd_diagram(const ComparisonResult& result, std::ostream& out) {
  const std::size_t k = result.models.size();
  constexpr double kLeft = 160.0, kRight = 560.0, kAxisY = 40.0, kWidth = 720.0;
  const double span = k > 1 ? static_cast<double>(k - 1) : 1.0;
  auto xpos = [&](double rank) { return kLeft + (rank - 1.0) / span * (kRight - kLeft); };

  std::vector<const std::vector<std::size_t>*> bars;
  for (const auto& c : result.cliques)
    if (c.size() >= 2) bars.push_back(&c);
  const double label_y0 = kAxisY + 24.0 + 8.0 * static_cast<double>(bars.size());
  const std::size_t left_count = (k + 1) / 2;
  const double height = label_y0 + 20.0 * static_cast<double>(left_count) + 10.0;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\"" << fmt(height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kAxisY) << "\" x2=\"" << fmt(kRight) << "\" y2=\""
      << fmt(kAxisY) << "\" stroke=\"black\"/>\n";
  for (std::size_t r = 1; r <= std::max<std::size_t>(k, 1); ++r) {
    const double x = xpos(static_cast<double>(r));
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kAxisY - 5.0) << "\" x2=\"" << fmt(x) << "\" y2=\""
        << fmt(kAxisY) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kAxisY - 10.0) << "\" text-anchor=\"middle\">" << r
        << "</text>\n";
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return result.average_ranks[a] < result.average_ranks[b]; });
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t m = order[i];
    const double x = xpos(result.average_ranks[m]);
    const bool left = i < left_count;
    const double y = label_y0 + 20.0 * static_cast<double>(left ? i : k - 1 - i);
    const double end = left ? kLeft - 10.0 : kRight + 10.0;
    out << "<polyline points=\"" << fmt(x) << "," << fmt(kAxisY) << " " << fmt(x) << "," << fmt(y) << " " << fmt(end)
        << "," << fmt(y) << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(left ? end - 4.0 : end + 4.0) << "\" y=\"" << fmt(y + 4.0) << "\" text-anchor=\""
        << (left ? "end" : "start") << "\">" << escape_xml(result.models[m]) << " (" << fmt(result.average_ranks[m])
        << ")</text>\n";
  }

  for (std::size_t b = 0; b < bars.size(); ++b) {
    double lo = result.average_ranks[bars[b]->front()], hi = lo;
    for (auto m : *bars[b]) {
      lo = std::min(lo, result.average_ranks[m]);
      hi = std::max(hi, result.average_ranks[m]);
    }
    const double y = kAxisY + 14.0 + 8.0 * static_cast<double>(b);
    out << "<line x1=\"" << fmt(xpos(lo) - 4.0) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(xpos(hi) + 4.0)
        << "\" y2=\"" << fmt(y) << "\" stroke=\"black\" stroke-width=\"4\"/>\n";
  }
  out << "</svg>\n";
}

void emit_cd_diagram(const ComparisonResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  emit_cd_diagram(result, out);
}

}  // namespace gcnm
