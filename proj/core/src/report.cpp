#include "scrublab/report.hpp"

#include <cstdio>
#include <fstream>

namespace scrublab {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct panel {
  double x0, y0, w, h;
};

double map_x(const panel& pn, double p) { return pn.x0 + p * pn.w; }
double map_y(const panel& pn, double v) { return pn.y0 + (1.0 - v) * pn.h; }

void polyline(std::ofstream& f, const panel& pn, const std::vector<double>& ps,
              const std::vector<double>& vs, const char* color, const char* dash) {
  f << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"";
  if (dash[0] != '\0') f << " stroke-dasharray=\"" << dash << "\"";
  f << " points=\"";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) f << " ";
    f << num(map_x(pn, ps[i])) << "," << num(map_y(pn, vs[i]));
  }
  f << "\" />\n";
}

void axes(std::ofstream& f, const panel& pn, const char* title, const char* ylab) {
  f << "  <rect x=\"" << num(pn.x0) << "\" y=\"" << num(pn.y0) << "\" width=\"" << num(pn.w)
    << "\" height=\"" << num(pn.h) << "\" fill=\"none\" stroke=\"#333333\" />\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    f << "  <text x=\"" << num(pn.x0 - 8) << "\" y=\"" << num(map_y(pn, v) + 4)
      << "\" font-size=\"11\" text-anchor=\"end\" fill=\"#333333\">" << num(v) << "</text>\n";
    f << "  <text x=\"" << num(map_x(pn, v)) << "\" y=\"" << num(pn.y0 + pn.h + 16)
      << "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333333\">" << num(v) << "</text>\n";
  }
  f << "  <text x=\"" << num(pn.x0 + pn.w / 2) << "\" y=\"" << num(pn.y0 - 10)
    << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#111111\">" << title << "</text>\n";
  f << "  <text x=\"" << num(pn.x0 - 40) << "\" y=\"" << num(pn.y0 + pn.h / 2)
    << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111111\" transform=\"rotate(-90 "
    << num(pn.x0 - 40) << " " << num(pn.y0 + pn.h / 2) << ")\">" << ylab << "</text>\n";
  f << "  <text x=\"" << num(pn.x0 + pn.w / 2) << "\" y=\"" << num(pn.y0 + pn.h + 34)
    << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111111\">top-p fraction</text>\n";
}

}  // namespace

void write_report_csv(const std::vector<report_row>& rows, const std::filesystem::path& file,
                      std::uint64_t spec_hash) {
  std::ofstream f(file);
  require_data(f.is_open(), "cannot write report: " + file.string());
  f << "# spec_hash=" << to_hex(spec_hash) << "\n";
  f << "backbone,task,data,criterion,modality,variant,val_accuracy,ipf,ham_aac,acc_auc,"
       "acc_at_1pct,acc_at_5pct,acc_at_100pct\n";
  for (const auto& r : rows) {
    f << r.backbone << "," << r.task << "," << r.data << "," << r.criterion << "," << r.modality
      << "," << r.variant << "," << num(r.val_accuracy) << "," << num(r.ipf) << ","
      << num(r.ham_aac) << "," << num(r.acc_auc) << "," << num(r.acc_at_1pct) << ","
      << num(r.acc_at_5pct) << "," << num(r.acc_at_100) << "\n";
  }
  require_data(static_cast<bool>(f), "report write failed: " + file.string());
}

void write_curves_csv(const curve_report& attack, const curve_report& baseline,
                      const std::filesystem::path& file, std::uint64_t spec_hash) {
  std::ofstream f(file);
  require_data(f.is_open(), "cannot write curves: " + file.string());
  f << "# spec_hash=" << to_hex(spec_hash) << "\n";
  f << "role,p,acc_at,ham_at\n";
  for (std::size_t i = 0; i < attack.p_grid.size(); ++i)
    f << "attack," << num(attack.p_grid[i]) << "," << num(attack.acc_at[i]) << ","
      << num(attack.ham_at[i]) << "\n";
  for (std::size_t i = 0; i < baseline.p_grid.size(); ++i)
    f << "baseline," << num(baseline.p_grid[i]) << "," << num(baseline.acc_at[i]) << ","
      << num(baseline.ham_at[i]) << "\n";
  require_data(static_cast<bool>(f), "curves write failed: " + file.string());
}

void write_curves_svg(const curve_report& attack, const curve_report& baseline,
                      const std::filesystem::path& file, std::uint64_t spec_hash) {
  std::ofstream f(file);
  require_data(f.is_open(), "cannot write svg: " + file.string());
  const panel top{70, 40, 520, 270};
  const panel bot{70, 410, 520, 270};
  f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  f << "<!-- spec_hash=" << to_hex(spec_hash) << " -->\n";
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"740\" "
       "viewBox=\"0 0 640 740\">\n";
  f << "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"740\" fill=\"#ffffff\" />\n";
  axes(f, top, "reconstruction accuracy in the top-p fields", "AccAt(p)");
  polyline(f, top, attack.p_grid, attack.acc_at, "#c0392b", "");
  polyline(f, top, baseline.p_grid, baseline.acc_at, "#2980b9", "6,4");
  axes(f, bot, "hamming distance in the top-p fields", "HamAt(p)");
  polyline(f, bot, attack.p_grid, attack.ham_at, "#c0392b", "");
  polyline(f, bot, baseline.p_grid, baseline.ham_at, "#2980b9", "6,4");
  f << "  <text x=\"480\" y=\"24\" font-size=\"12\" fill=\"#c0392b\">attack</text>\n";
  f << "  <text x=\"540\" y=\"24\" font-size=\"12\" fill=\"#2980b9\">baseline</text>\n";
  f << "</svg>\n";
  require_data(static_cast<bool>(f), "svg write failed: " + file.string());
}

}  // namespace scrublab
