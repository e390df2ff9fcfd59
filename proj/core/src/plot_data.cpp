#include "matzoh/plot_data.hpp"

#include <charconv>
#include <cstddef>
#include <fstream>
#include <string>

#include "matzoh/errors.hpp"

namespace matzoh {
namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void emit_plot_data(const Report& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream out = open_csv(out_dir / "residual_vs_time.csv");
    out << "time,invariance,affine_residual\n";
    for (std::size_t j = 0; j < report.invariance_residuals.size(); ++j) {
      out << fmt(report.eta.times[j]) << ',' << fmt(report.invariance_residuals[j]) << ',';
      if (j < report.affine.residual.size()) out << fmt(report.affine.residual[j]);
      out << '\n';
    }
  }

  {
    std::ofstream out = open_csv(out_dir / "eta_table.csv");
    out << "bin,s,count,time,eta,spread\n";
    for (std::size_t b = 0; b < report.eta.s.size(); ++b)
      for (std::size_t j = 0; j < report.eta.times.size(); ++j)
        out << b << ',' << fmt(report.eta.s[b]) << ',' << report.eta.counts[b] << ','
            << fmt(report.eta.times[j]) << ',' << fmt(report.eta.values[b][j]) << ','
            << fmt(report.eta.spread[b][j]) << '\n';
  }

  {
    std::ofstream out = open_csv(out_dir / "determinant.csv");
    out << "bin,s,time,det,f,g,significant\n";
    for (std::size_t b = 0; b < report.determinant.det.size(); ++b)
      for (std::size_t j = 0; j < report.determinant.det[b].size(); ++j)
        out << b << ',' << fmt(report.eta.s[b]) << ',' << fmt(report.eta.times[j]) << ','
            << fmt(report.determinant.det[b][j]) << ',' << fmt(report.determinant.f[b][j]) << ','
            << fmt(report.determinant.g[b][j]) << ','
            << (report.determinant.significant[b][j] ? 1 : 0) << '\n';
  }

  {
    std::ofstream out = open_csv(out_dir / "fg_fits.csv");
    out << "knot,f,f_derivative,g,g_derivative\n";
    if (report.iso) {
      const Report::LevelFit& f = report.iso->f;
      const Report::LevelFit& g = report.iso->g;
      const std::size_t n = std::min(f.knots.size(), g.knots.size());
      for (std::size_t k = 0; k < n; ++k)
        out << fmt(f.knots[k]) << ',' << fmt(f.values[k]) << ',' << fmt(f.derivative[k]) << ','
            << fmt(g.values[k]) << ',' << fmt(g.derivative[k]) << '\n';
    }
  }

  {
    std::ofstream out = open_csv(out_dir / "curvatures.csv");
    out << "cluster,value,multiplicity\n";
    if (report.surface) {
      const auto& clusters = report.surface->clusters;
      for (std::size_t c = 0; c < clusters.size(); ++c)
        out << c << ',' << fmt(clusters[c].value) << ',' << clusters[c].multiplicity << '\n';
    }
  }
}

}  // namespace matzoh
