// Report bundle: per-dispatcher aggregates over repetitions, written as TSV
// tables and static SVG charts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wmsim/errors.hpp"
#include "wmsim/experiment.hpp"
#include "wmsim/metrics.hpp"

namespace wmsim {

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct MeanSd {
  double mean = 0;
  double sd = 0;
};

// Sorted first so the result does not depend on repetition order.
MeanSd mean_sd(std::vector<double> v) {
  MeanSd r;
  if (v.empty()) return r;
  std::sort(v.begin(), v.end());
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

struct Series {
  std::string dispatcher;
  std::size_t runs = 0;
  BoxStats slowdown;
  BoxStats queue;
  std::vector<double> step_us, dispatch_us, total_dispatch_ms, wall_ms, peak_loaded, mean_loaded;
  std::map<std::int64_t, std::pair<std::size_t, std::int64_t>> bins;  // lower -> (samples, dispatch_us)
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

// Minimal SVG writer.
class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1) {
    body_ << "<line x1=\"" << fmt(x1, 2) << "\" y1=\"" << fmt(y1, 2) << "\" x2=\"" << fmt(x2, 2) << "\" y2=\""
          << fmt(y2, 2) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width, 1) << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "#333") {
    body_ << "<rect x=\"" << fmt(x, 2) << "\" y=\"" << fmt(y, 2) << "\" width=\"" << fmt(std::max(w, 0.0), 2)
          << "\" height=\"" << fmt(std::max(h, 0.0), 2) << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << fmt(x, 2) << "\" cy=\"" << fmt(y, 2) << "\" r=\"" << fmt(r, 1) << "\" fill=\"" << fill
          << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor = "middle", int size = 12,
            double rotate = 0) {
    body_ << "<text x=\"" << fmt(x, 2) << "\" y=\"" << fmt(y, 2) << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\"";
    if (rotate != 0) body_ << " transform=\"rotate(" << fmt(rotate, 0) << " " << fmt(x, 2) << " " << fmt(y, 2) << ")\"";
    body_ << ">" << escape(s) << "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) body_ << fmt(x, 2) << ',' << fmt(y, 2) << ' ';
    body_ << "\"/>\n";
  }
  void save(const fs::path& p) const {
    auto out = open_out(p);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_, 0) << "\" height=\"" << fmt(h_, 0)
        << "\" viewBox=\"0 0 " << fmt(w_, 0) << ' ' << fmt(h_, 0) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
  }

 private:
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else if (c == '&') out += "&amp;";
      else out += c;
    }
    return out;
  }
  double w_, h_;
  std::ostringstream body_;
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf"};

std::string colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

// Plot frame: left margin 70, right 20, top 40, bottom 90.
struct Frame {
  double w, h;
  double left = 70, right = 20, top = 40, bottom = 90;
  double x0() const { return left; }
  double x1() const { return w - right; }
  double y0() const { return h - bottom; }
  double y1() const { return top; }
};

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v, const Frame& f) const {
    double a = lo, b = hi, x = v;
    if (log) {
      a = std::log10(lo);
      b = std::log10(hi);
      x = std::log10(std::max(v, lo));
    }
    const double t = b > a ? (x - a) / (b - a) : 0.0;
    return f.y0() - t * (f.y0() - f.y1());
  }
  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double p = std::floor(std::log10(lo)); p <= std::ceil(std::log10(hi)) + 1e-9; p += 1) t.push_back(std::pow(10, p));
      return t;
    }
    const double span = hi - lo;
    double step = std::pow(10, std::floor(std::log10(span > 0 ? span : 1)));
    if (span / step < 4) step /= 2;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9; v += step) t.push_back(v);
    return t;
  }
  void widen() {
    if (log) {
      lo = std::pow(10, std::floor(std::log10(std::max(lo, 1e-9))));
      hi = std::pow(10, std::ceil(std::log10(std::max(hi, lo * 10))));
    } else if (hi <= lo) {
      hi = lo + 1;
    }
  }
};

void draw_y_axis(Svg& svg, const Frame& f, const Axis& a, const std::string& label) {
  svg.line(f.x0(), f.y0(), f.x0(), f.y1(), "#000");
  svg.line(f.x0(), f.y0(), f.x1(), f.y0(), "#000");
  for (double t : a.ticks()) {
    const double y = a.map(t, f);
    svg.line(f.x0() - 4, y, f.x1(), y, "#ddd", 0.5);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    svg.text(f.x0() - 6, y + 4, buf, "end", 10);
  }
  svg.text(18, (f.y0() + f.y1()) / 2, label, "middle", 12, -90);
}

void box_chart(const std::vector<Series>& series, bool slowdown, const std::string& title, const std::string& ylabel,
               const fs::path& path) {
  Frame f{std::max(320.0, 90.0 * static_cast<double>(series.size()) + 90), 420};
  Axis a;
  a.log = slowdown;
  a.lo = slowdown ? 1 : 0;
  a.hi = a.lo;
  for (const auto& s : series) a.hi = std::max(a.hi, (slowdown ? s.slowdown : s.queue).whisker_high);
  a.widen();
  Svg svg(f.w, f.h);
  svg.text(f.w / 2, 22, title, "middle", 14);
  draw_y_axis(svg, f, a, ylabel);
  const double slot = (f.x1() - f.x0()) / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (std::size_t i = 0; i < series.size(); ++i) {
    const BoxStats& b = slowdown ? series[i].slowdown : series[i].queue;
    const double cx = f.x0() + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(25.0, slot * 0.3);
    svg.line(cx, a.map(b.whisker_low, f), cx, a.map(b.q1, f), "#333");
    svg.line(cx, a.map(b.q3, f), cx, a.map(b.whisker_high, f), "#333");
    svg.line(cx - half / 2, a.map(b.whisker_low, f), cx + half / 2, a.map(b.whisker_low, f), "#333");
    svg.line(cx - half / 2, a.map(b.whisker_high, f), cx + half / 2, a.map(b.whisker_high, f), "#333");
    svg.rect(cx - half, a.map(b.q3, f), 2 * half, a.map(b.q1, f) - a.map(b.q3, f), colour(i));
    svg.line(cx - half, a.map(b.median, f), cx + half, a.map(b.median, f), "#000", 2);
    svg.circle(cx, a.map(b.mean, f), 3, "#000");
    svg.text(cx, f.y0() + 14, series[i].dispatcher, "end", 11, -40);
  }
  svg.save(path);
}

void box_table(const std::vector<Series>& series, bool slowdown, const fs::path& path) {
  auto out = open_out(path);
  out << "# dispatcher\truns\tcount\tmin\twhisker_low\tq1\tmedian\tq3\twhisker_high\tmax\tmean\n";
  for (const auto& s : series) {
    const BoxStats& b = slowdown ? s.slowdown : s.queue;
    out << s.dispatcher << '\t' << s.runs << '\t' << b.count << '\t' << fmt(b.min) << '\t' << fmt(b.whisker_low) << '\t'
        << fmt(b.q1) << '\t' << fmt(b.median) << '\t' << fmt(b.q3) << '\t' << fmt(b.whisker_high) << '\t' << fmt(b.max)
        << '\t' << fmt(b.mean) << '\n';
  }
}

void steptime(const std::vector<Series>& series, const fs::path& svg_path, const fs::path& tsv_path) {
  auto out = open_out(tsv_path);
  out << "# dispatcher\truns\tstep_us_mean\tstep_us_sd\tdispatch_us_mean\tdispatch_us_sd\n";
  std::vector<std::pair<MeanSd, MeanSd>> vals;
  double hi = 0;
  for (const auto& s : series) {
    const auto st = mean_sd(s.step_us);
    const auto di = mean_sd(s.dispatch_us);
    vals.emplace_back(st, di);
    hi = std::max({hi, st.mean + st.sd, di.mean + di.sd});
    out << s.dispatcher << '\t' << s.runs << '\t' << fmt(st.mean) << '\t' << fmt(st.sd) << '\t' << fmt(di.mean) << '\t'
        << fmt(di.sd) << '\n';
  }
  Frame f{std::max(360.0, 90.0 * static_cast<double>(series.size()) + 90), 420};
  Axis a{0, hi > 0 ? hi * 1.1 : 1, false};
  Svg svg(f.w, f.h);
  svg.text(f.w / 2, 22, "Mean CPU time per simulation time point", "middle", 14);
  draw_y_axis(svg, f, a, "microseconds");
  const double slot = (f.x1() - f.x0()) / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double x = f.x0() + slot * static_cast<double>(i);
    const double bw = slot * 0.35;
    const auto& [st, di] = vals[i];
    svg.rect(x + slot * 0.12, a.map(st.mean, f), bw, f.y0() - a.map(st.mean, f), "#1f77b4");
    svg.rect(x + slot * 0.12 + bw, a.map(di.mean, f), bw, f.y0() - a.map(di.mean, f), "#ff7f0e");
    const double cx1 = x + slot * 0.12 + bw / 2;
    const double cx2 = cx1 + bw;
    svg.line(cx1, a.map(st.mean - st.sd, f), cx1, a.map(st.mean + st.sd, f), "#000");
    svg.line(cx2, a.map(di.mean - di.sd, f), cx2, a.map(di.mean + di.sd, f), "#000");
    svg.text(x + slot / 2, f.y0() + 14, series[i].dispatcher, "end", 11, -40);
  }
  svg.rect(f.x1() - 150, f.y1(), 10, 10, "#1f77b4");
  svg.text(f.x1() - 135, f.y1() + 9, "step", "start", 10);
  svg.rect(f.x1() - 90, f.y1(), 10, 10, "#ff7f0e");
  svg.text(f.x1() - 75, f.y1() + 9, "dispatch", "start", 10);
  svg.save(svg_path);
}

void time_vs_queue(const std::vector<Series>& series, const fs::path& svg_path, const fs::path& tsv_path) {
  auto out = open_out(tsv_path);
  out << "# dispatcher\tqueue_bin_lower\tqueue_bin_upper\tsamples\tdispatch_us_mean\n";
  double xmax = kQueueBinWidth, ymax = 0;
  for (const auto& s : series) {
    for (const auto& [lower, agg] : s.bins) {
      const double mean = static_cast<double>(agg.second) / static_cast<double>(agg.first);
      out << s.dispatcher << '\t' << lower << '\t' << lower + kQueueBinWidth << '\t' << agg.first << '\t' << fmt(mean)
          << '\n';
      xmax = std::max(xmax, static_cast<double>(lower + kQueueBinWidth));
      ymax = std::max(ymax, mean);
    }
  }
  Frame f{640, 420};
  f.bottom = 60;
  f.right = 140;
  Axis a{0, ymax > 0 ? ymax * 1.1 : 1, false};
  Svg svg(f.w, f.h);
  svg.text(f.w / 2, 22, "Dispatch time by queue size", "middle", 14);
  draw_y_axis(svg, f, a, "microseconds");
  auto xmap = [&](double v) { return f.x0() + v / xmax * (f.x1() - f.x0()); };
  Axis xa{0, xmax, false};
  for (double t : xa.ticks()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    svg.line(xmap(t), f.y0(), xmap(t), f.y0() + 4, "#000");
    svg.text(xmap(t), f.y0() + 16, buf, "middle", 10);
  }
  svg.text((f.x0() + f.x1()) / 2, f.h - 18, "queued jobs", "middle", 12);
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [lower, agg] : series[i].bins) {
      const double mean = static_cast<double>(agg.second) / static_cast<double>(agg.first);
      pts.emplace_back(xmap(static_cast<double>(lower) + kQueueBinWidth / 2.0), a.map(mean, f));
    }
    if (!pts.empty()) svg.polyline(pts, colour(i));
    svg.rect(f.x1() + 10, f.y1() + 16.0 * static_cast<double>(i), 10, 10, colour(i));
    svg.text(f.x1() + 25, f.y1() + 16.0 * static_cast<double>(i) + 9, series[i].dispatcher, "start", 10);
  }
  svg.save(svg_path);
}

void usage_table(const std::vector<Series>& series, const std::vector<std::string>& notes, const fs::path& path) {
  auto out = open_out(path);
  const char* cols[] = {"total time [ms]", "dispatch time [ms]", "peak loaded records", "mean loaded records"};
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %4s", "dispatcher", "runs");
  out << buf;
  for (const char* c : cols) {
    std::snprintf(buf, sizeof buf, " | %-25s", c);
    out << buf;
  }
  out << '\n';
  std::snprintf(buf, sizeof buf, "%-14s %4s", "", "");
  out << buf;
  for (std::size_t i = 0; i < std::size(cols); ++i) {
    std::snprintf(buf, sizeof buf, " | %12s %12s", "mu", "sigma");
    out << buf;
  }
  out << '\n';
  for (const auto& s : series) {
    std::snprintf(buf, sizeof buf, "%-14s %4zu", s.dispatcher.c_str(), s.runs);
    out << buf;
    for (const auto* v : {&s.wall_ms, &s.total_dispatch_ms, &s.peak_loaded, &s.mean_loaded}) {
      const auto m = mean_sd(*v);
      std::snprintf(buf, sizeof buf, " | %12.3f %12.3f", m.mean, m.sd);
      out << buf;
    }
    out << '\n';
  }
  for (const auto& n : notes) out << "# note: " << n << '\n';
}

}  // namespace

ReportResult aggregate_and_render(const fs::path& root, const std::vector<RunOutcome>& outcomes) {
  std::vector<std::string> order;
  for (const auto& o : outcomes) {
    if (std::find(order.begin(), order.end(), o.spec.dispatcher) == order.end()) order.push_back(o.spec.dispatcher);
  }
  ReportResult result;
  result.dir = root / "report";
  std::vector<Series> series;
  for (const auto& name : order) {
    Series s;
    s.dispatcher = name;
    std::vector<double> slowdowns, queue;
    std::size_t failed = 0;
    for (const auto& o : outcomes) {
      if (o.spec.dispatcher != name) continue;
      if (!o.ok) {
        ++failed;
        continue;
      }
      const auto files = RunFiles::in(o.spec.dir, name);
      std::ifstream rin(files.results), bin(files.bench);
      if (!rin || !bin) {
        ++failed;
        continue;
      }
      RunFooter footer;
      const auto results = read_results_tsv(rin, &footer);
      const auto bench = read_bench_tsv(bin);
      const auto rep = summarize(results, bench, footer.wall_ms);
      for (const auto& r : results) slowdowns.push_back(r.slowdown);
      for (const auto& b : bench) {
        if (b.queued <= 0) continue;
        queue.push_back(static_cast<double>(b.queued));
        auto& agg = s.bins[(b.queued / kQueueBinWidth) * kQueueBinWidth];
        ++agg.first;
        agg.second += b.dispatch_us;
      }
      s.step_us.push_back(rep.mean_step_us);
      s.dispatch_us.push_back(rep.mean_dispatch_us);
      s.total_dispatch_ms.push_back(static_cast<double>(rep.total_dispatch_us) / 1000.0);
      s.wall_ms.push_back(static_cast<double>(rep.total_wall_ms));
      s.peak_loaded.push_back(static_cast<double>(rep.peak_loaded));
      s.mean_loaded.push_back(rep.mean_loaded);
      ++s.runs;
    }
    if (failed > 0) {
      result.notes.push_back(name + ": " + std::to_string(failed) + " run(s) failed or missing");
    }
    if (s.runs == 0) {
      result.notes.push_back(name + ": no completed runs, series omitted");
      continue;
    }
    s.slowdown = describe(std::move(slowdowns));
    s.queue = describe(std::move(queue));
    result.dispatchers.push_back(name);
    series.push_back(std::move(s));
  }
  if (series.empty()) throw std::runtime_error("no completed runs to report on");

  fs::create_directories(result.dir);
  const auto& d = result.dir;
  box_chart(series, true, "Job slowdown", "slowdown (log scale)", d / "slowdown.svg");
  box_table(series, true, d / "slowdown.tsv");
  box_chart(series, false, "Queue size at dispatch", "queued jobs", d / "queue.svg");
  box_table(series, false, d / "queue.tsv");
  steptime(series, d / "steptime.svg", d / "steptime.tsv");
  time_vs_queue(series, d / "time_vs_queue.svg", d / "time_vs_queue.tsv");
  usage_table(series, result.notes, d / "usage_table.txt");
  return result;
}

}  // namespace wmsim
