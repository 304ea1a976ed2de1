#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "lrgemm/bench.hpp"
#include "lrgemm/error.hpp"

namespace lrgemm {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 30, kBottom = 50;

constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};

struct Series {
  KernelKind method;
  std::vector<std::pair<double, double>> points;  // (n, y)
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string svg_plot(const std::string& title, const std::string& y_label, const std::vector<Series>& series,
                     bool log_y) {
  double x_min = INFINITY, x_max = -INFINITY, y_min = INFINITY, y_max = -INFINITY;
  for (const auto& s : series) {
    for (const auto& [n, y] : s.points) {
      x_min = std::min(x_min, std::log2(n));
      x_max = std::max(x_max, std::log2(n));
      if (log_y && !(y > 0.0)) continue;
      const double yy = log_y ? std::log10(y) : y;
      y_min = std::min(y_min, yy);
      y_max = std::max(y_max, yy);
    }
  }
  if (!std::isfinite(y_min)) y_min = 0.0, y_max = 1.0;
  if (!log_y) y_min = std::min(y_min, 0.0);
  const double x_span = x_max > x_min ? x_max - x_min : 1.0;
  const double y_span = y_max > y_min ? y_max - y_min : 1.0;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const auto px = [&](double n) {
    const double x = x_max > x_min ? (std::log2(n) - x_min) / x_span : 0.5;
    return kLeft + x * plot_w;
  };
  const auto py = [&](double y) {
    const double yy = log_y ? std::log10(y) : y;
    return kTop + plot_h - (yy - y_min) / y_span * plot_h;
  };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
                    num(kHeight) + "\" data-x-min=\"" + num(x_min) + "\" data-x-max=\"" + num(x_max) +
                    "\">\n";
  out += "<title>" + title + "</title>\n";
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(plot_w) + "\" height=\"" +
         num(plot_h) + "\" fill=\"none\" stroke=\"#333\"/>\n";
  out += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 10) +
         "\" text-anchor=\"middle\">log2(n)</text>\n";
  out += "<text x=\"15\" y=\"" + num(kTop + plot_h / 2) + "\" transform=\"rotate(-90 15 " +
         num(kTop + plot_h / 2) + ")\" text-anchor=\"middle\">" + y_label + "</text>\n";
  // x ticks at every size present
  std::vector<double> sizes;
  for (const auto& s : series)
    for (const auto& p : s.points) sizes.push_back(p.first);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  for (double n : sizes) {
    out += "<text class=\"xtick\" x=\"" + num(px(n)) + "\" y=\"" + num(kTop + plot_h + 18) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + num(std::log2(n)) + "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double yy = y_min + y_span * i / 4.0;
    const double label = log_y ? std::pow(10.0, yy) : yy;
    out += "<text x=\"" + num(kLeft - 5) + "\" y=\"" + num(kTop + plot_h - plot_h * i / 4.0) +
           "\" text-anchor=\"end\" font-size=\"10\">" + num(label) + "</text>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[static_cast<std::size_t>(s.method) % std::size(kColors)];
    std::string pts;
    for (const auto& [n, y] : s.points) {
      if (log_y && !(y > 0.0)) continue;
      pts += num(px(n)) + "," + num(py(y)) + " ";
    }
    out += "<g class=\"series\" data-method=\"" + std::string(to_string(s.method)) + "\">\n";
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" points=\"" + pts + "\"/>\n";
    for (const auto& [n, y] : s.points) {
      if (log_y && !(y > 0.0)) continue;
      out += "<circle cx=\"" + num(px(n)) + "\" cy=\"" + num(py(y)) + "\" r=\"3\" fill=\"" + color +
             "\" data-n=\"" + num(n) + "\"/>\n";
    }
    out += "</g>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(si);
    out += "<text x=\"" + num(kWidth - kRight + 10) + "\" y=\"" + num(ly) + "\" fill=\"" + color +
           "\" font-size=\"11\">" + std::string(to_string(s.method)) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace

PlotOutput emit_plots(const std::vector<BenchRecord>& records, const std::filesystem::path& dir) {
  if (records.empty()) throw InvalidArgument("emit_plots: no records");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::map<KernelKind, std::vector<const BenchRecord*>> by_method;
  for (const auto& r : records) by_method[r.method].push_back(&r);
  for (auto& [_, rs] : by_method) {
    std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->n < b->n; });
  }
  const auto collect = [&](auto&& value) {
    std::vector<Series> out;
    for (const auto& [method, rs] : by_method) {
      Series s{method, {}};
      for (const auto* r : rs) {
        if (auto y = value(*r)) s.points.emplace_back(static_cast<double>(r->n), *y);
      }
      if (!s.points.empty()) out.push_back(std::move(s));
    }
    return out;
  };

  PlotOutput result;
  const auto emit = [&](const std::string& file, const std::string& text) {
    write_text(dir / file, text);
    result.written.push_back(dir / file);
  };
  emit("time.svg", svg_plot("Time to solution", "time (s)",
                            collect([](const BenchRecord& r) -> std::optional<double> { return r.time_s_mean; }),
                            true));
  emit("throughput.svg",
       svg_plot("Dense-equivalent throughput", "FLOP/s",
                collect([](const BenchRecord& r) -> std::optional<double> { return r.achieved_flops; }), true));
  emit("rel_error.svg",
       svg_plot("Relative error", "relative Frobenius error",
                collect([](const BenchRecord& r) -> std::optional<double> { return r.rel_error; }), false));

  const auto base = by_method.find(KernelKind::direct_fp32);
  if (base == by_method.end()) {
    result.notices.push_back("speedup.svg skipped: no direct_fp32 records to use as baseline");
    return result;
  }
  std::map<std::size_t, double> base_time;
  for (const auto* r : base->second) base_time[r->n] = r->time_s_mean;
  emit("speedup.svg", svg_plot("Speedup over direct_fp32", "speedup (x)",
                               collect([&](const BenchRecord& r) -> std::optional<double> {
                                 const auto it = base_time.find(r.n);
                                 if (it == base_time.end()) return std::nullopt;
                                 return it->second / r.time_s_mean;
                               }),
                               false));
  return result;
}

}  // namespace lrgemm
