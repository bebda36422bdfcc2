#include "vcdd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace vcdd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s, const std::string& column, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0')
    throw DomainError("line " + std::to_string(line) + ": column " + column + " is not a number: '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& column, std::size_t line) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0')
    throw DomainError("line " + std::to_string(line) + ": column " + column + " is not an integer: '" + s + "'");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "sweep",          "learner",         "features",       "variant",        "a1",
      "a2",             "axis",            "seed",           "n_train",        "width",
      "epoch",          "train_error",     "test_error",     "train_residual", "norm_sq",
      "h",              "bound",           "epsilon",        "eta",            "n_support",
      "gate_epoch",     "interpolating",   "flags",          "n_seeds",        "train_error_mean",
      "test_error_mean", "test_error_min", "test_error_max", "bound_mean",     "bound_min",
      "bound_max",      "norm_sq_mean",    "norm_sq_min",    "norm_sq_max"};
  return cols;
}

void write_csv(const SweepResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : result.rows) {
    out << to_string(result.axis) << ',' << to_string(result.learner) << ',' << to_string(result.features) << ','
        << to_string(result.variant) << ',' << g17(result.constants.a1) << ',' << g17(result.constants.a2) << ','
        << r.axis_value << ',' << r.seed << ',' << r.n_train << ',' << r.width << ',' << r.epoch << ','
        << g17(r.train_error) << ',' << g17(r.test_error) << ',' << g17(r.train_residual) << ',' << g17(r.norm_sq)
        << ',' << g17(r.h) << ',' << g17(r.bound) << ',' << g17(r.epsilon) << ',' << g17(r.eta) << ','
        << r.n_support << ',' << r.gate_epoch << ',' << (r.interpolating ? 1 : 0) << ',' << r.flags << ','
        << r.n_seeds << ',' << g17(r.train_error_mean) << ',' << g17(r.test_error_mean) << ','
        << g17(r.test_error_min) << ',' << g17(r.test_error_max) << ',' << g17(r.bound_mean) << ','
        << g17(r.bound_min) << ',' << g17(r.bound_max) << ',' << g17(r.norm_sq_mean) << ',' << g17(r.norm_sq_min)
        << ',' << g17(r.norm_sq_max) << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

SweepResult read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line)) throw DomainError(path.string() + ": empty CSV");
  const auto header = split(line, ',');
  if (header != csv_columns()) throw DomainError(path.string() + ": unexpected CSV header");

  SweepResult result;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size())
      throw DomainError(path.string() + ": line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                        " fields, expected " + std::to_string(header.size()));
    std::size_t k = 0;
    const auto real = [&] {
      const double v = parse_real(f[k], header[k], lineno);
      ++k;
      return v;
    };
    const auto integer = [&] {
      const long long v = parse_int(f[k], header[k], lineno);
      ++k;
      return static_cast<Index>(v);
    };
    result.axis = parse_sweep_axis(f[k++]);
    result.learner = parse_learner(f[k++]);
    result.features = parse_feature_kind(f[k++]);
    result.variant = parse_bound_variant(f[k++]);
    result.constants.a1 = real();
    result.constants.a2 = real();
    SweepRow r;
    r.axis_value = integer();
    r.seed = std::stoull(f[k++]);
    r.n_train = integer();
    r.width = integer();
    r.epoch = integer();
    r.train_error = real();
    r.test_error = real();
    r.train_residual = real();
    r.norm_sq = real();
    r.h = real();
    r.bound = real();
    r.epsilon = real();
    r.eta = real();
    r.n_support = integer();
    r.gate_epoch = integer();
    r.interpolating = integer() != 0;
    r.flags = f[k++];
    r.n_seeds = integer();
    r.train_error_mean = real();
    r.test_error_mean = real();
    r.test_error_min = real();
    r.test_error_max = real();
    r.bound_mean = real();
    r.bound_min = real();
    r.bound_max = real();
    r.norm_sq_mean = real();
    r.norm_sq_min = real();
    r.norm_sq_max = real();
    result.rows.push_back(std::move(r));
  }
  return result;
}

void write_timing_csv(const SweepResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "axis,seed,width,epoch,wall_seconds\n";
  for (const auto& r : result.rows)
    out << r.axis_value << ',' << r.seed << ',' << r.width << ',' << r.epoch << ',' << g17(r.wall_seconds) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

namespace {

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Point {
  double x, y;
};

struct Panel {
  double left, top, width, height;
  double x0, x1;  // log10 range
  double y0, y1;
  bool log_y = false;

  double px(double x) const { return left + (std::log10(x) - x0) / (x1 - x0) * width; }
  double py(double y) const {
    const double v = log_y ? std::log10(std::max(y, 1e-300)) : y;
    const double t = std::clamp((v - y0) / (y1 - y0), 0.0, 1.0);
    return top + height - t * height;
  }
};

struct Series {
  std::string name;
  std::string colour;
  std::vector<Point> pts;
  bool dashed = false;
};

void frame(std::ostringstream& s, const Panel& p, const std::string& ylabel) {
  s << "<rect x=\"" << f2(p.left) << "\" y=\"" << f2(p.top) << "\" width=\"" << f2(p.width) << "\" height=\""
    << f2(p.height) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int d = static_cast<int>(std::ceil(p.x0 - 1e-9)); d <= static_cast<int>(std::floor(p.x1 + 1e-9)); ++d) {
    const double x = p.left + (d - p.x0) / (p.x1 - p.x0) * p.width;
    s << "<line x1=\"" << f2(x) << "\" y1=\"" << f2(p.top) << "\" x2=\"" << f2(x) << "\" y2=\"" << f2(p.top + p.height)
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << f2(x) << "\" y=\"" << f2(p.top + p.height + 14) << "\" text-anchor=\"middle\">"
      << label(std::pow(10.0, d)) << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = p.y0 + (p.y1 - p.y0) * k / 4.0;
    const double y = p.top + p.height - k / 4.0 * p.height;
    s << "<line x1=\"" << f2(p.left) << "\" y1=\"" << f2(y) << "\" x2=\"" << f2(p.left + p.width) << "\" y2=\""
      << f2(y) << "\" stroke=\"#eee\"/>\n";
    s << "<text x=\"" << f2(p.left - 4) << "\" y=\"" << f2(y + 4) << "\" text-anchor=\"end\">"
      << label(p.log_y ? std::pow(10.0, v) : std::round(v * 1000.0) / 1000.0) << "</text>\n";
  }
  s << "<text x=\"" << f2(p.left - 44) << "\" y=\"" << f2(p.top + p.height / 2) << "\" transform=\"rotate(-90 "
    << f2(p.left - 44) << ' ' << f2(p.top + p.height / 2) << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
}

void polyline(std::ostringstream& s, const Panel& p, const Series& ser) {
  std::vector<Point> pts;
  for (const auto& q : ser.pts)
    if (std::isfinite(q.y) && q.x > 0) pts.push_back(q);
  if (pts.empty()) return;
  s << "<polyline fill=\"none\" stroke=\"" << ser.colour << "\" stroke-width=\"1.5\""
    << (ser.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) s << (i ? " " : "") << f2(p.px(pts[i].x)) << ',' << f2(p.py(pts[i].y));
  s << "\"/>\n";
}

}  // namespace

std::string svg_string(const SweepResult& result, const SvgStyle& style) {
  // One point per (width, axis value); series per width for epoch sweeps.
  struct Agg {
    double x, tr, te, te_lo, te_hi, bound, norm, sv;
  };
  std::map<Index, std::map<Index, Agg>> groups;
  std::map<std::pair<Index, Index>, std::pair<double, int>> sv_sum;
  for (const auto& r : result.rows) {
    if (r.has_flag("failed") || r.has_flag("skipped") || r.n_seeds == 0) continue;
    const Index key = result.axis == SweepAxis::Width ? 0 : r.width;
    groups[key][r.axis_value] = {static_cast<double>(std::max<Index>(r.axis_value, 1)),
                                 r.train_error_mean,
                                 r.test_error_mean,
                                 r.test_error_min,
                                 r.test_error_max,
                                 r.bound_mean,
                                 r.norm_sq_mean,
                                 kNaN};
    auto& sv = sv_sum[{key, r.axis_value}];
    if (r.n_support >= 0) {
      sv.first += static_cast<double>(r.n_support);
      ++sv.second;
    }
  }
  for (auto& [key, g] : groups)
    for (auto& [x, a] : g) {
      const auto& sv = sv_sum[{key, x}];
      if (sv.second) a.sv = sv.first / sv.second;
    }

  const bool svm = result.learner == Learner::SVM;
  const int panels = svm ? 3 : 2;
  const double left = 70, right = 150, top = 40, gap = 40;
  const double pw = style.width - left - right;
  const double ph = style.panel_height;
  const double total_h = top + panels * (ph + gap) + 10;

  double xmin = std::numeric_limits<double>::infinity(), xmax = 0, emax = 0, nmin = std::numeric_limits<double>::infinity(),
         nmax = 0, svmax = 0;
  for (const auto& [key, g] : groups)
    for (const auto& [x, a] : g) {
      xmin = std::min(xmin, a.x);
      xmax = std::max(xmax, a.x);
      for (double v : {a.tr, a.te, a.te_hi, a.bound})
        if (std::isfinite(v)) emax = std::max(emax, v);
      if (std::isfinite(a.norm) && a.norm > 0) {
        nmin = std::min(nmin, a.norm);
        nmax = std::max(nmax, a.norm);
      }
      if (std::isfinite(a.sv)) svmax = std::max(svmax, a.sv);
    }
  if (!(xmax > 0)) xmin = 1, xmax = 10;
  double x0 = std::floor(std::log10(xmin)), x1 = std::ceil(std::log10(xmax));
  if (x1 <= x0) x1 = x0 + 1;
  if (!(nmax > 0)) nmin = 1, nmax = 10;
  double n0 = std::floor(std::log10(nmin)), n1 = std::ceil(std::log10(nmax));
  if (n1 <= n0) n1 = n0 + 1;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << f2(total_h)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::string title = style.title.empty() ? std::string(to_string(result.learner)) + " " +
                                                      std::string(to_string(result.axis)) + " sweep"
                                                : style.title;
  s << "<text x=\"" << f2(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
    << "</text>\n";

  static const char* palette[] = {"#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"};
  const auto legend = [&](double y, const std::vector<Series>& ser) {
    for (std::size_t i = 0; i < ser.size(); ++i) {
      const double yy = y + 16.0 * static_cast<double>(i);
      s << "<line x1=\"" << f2(left + pw + 12) << "\" y1=\"" << f2(yy) << "\" x2=\"" << f2(left + pw + 32) << "\" y2=\""
        << f2(yy) << "\" stroke=\"" << ser[i].colour << "\" stroke-width=\"2\""
        << (ser[i].dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
      s << "<text x=\"" << f2(left + pw + 36) << "\" y=\"" << f2(yy + 4) << "\">" << ser[i].name << "</text>\n";
    }
  };

  // Error panel
  Panel pe{left, top, pw, ph, x0, x1, 0.0, std::min(1.0, emax > 0 ? emax * 1.05 : 1.0)};
  frame(s, pe, "error");
  std::vector<Series> err;
  std::size_t gi = 0;
  for (const auto& [key, g] : groups) {
    const std::string suffix = result.axis == SweepAxis::Width ? "" : " N=" + std::to_string(key);
    Series tr{"train" + suffix, "#1f77b4", {}, false}, te{"test" + suffix, palette[gi % 6], {}, false},
        bd{"bound" + suffix, "#2ca02c", {}, true};
    std::vector<Point> lo, hi;
    for (const auto& [x, a] : g) {
      tr.pts.push_back({a.x, a.tr});
      te.pts.push_back({a.x, a.te});
      bd.pts.push_back({a.x, a.bound});
      lo.push_back({a.x, a.te_lo});
      hi.push_back({a.x, a.te_hi});
    }
    if (!lo.empty()) {
      s << "<polygon fill=\"" << te.colour << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      bool first = true;
      for (const auto& q : lo) {
        if (!std::isfinite(q.y)) continue;
        s << (first ? "" : " ") << f2(pe.px(q.x)) << ',' << f2(pe.py(q.y));
        first = false;
      }
      for (auto it = hi.rbegin(); it != hi.rend(); ++it)
        if (std::isfinite(it->y)) s << ' ' << f2(pe.px(it->x)) << ',' << f2(pe.py(it->y));
      s << "\"/>\n";
    }
    for (const auto* ser : {&tr, &te, &bd}) polyline(s, pe, *ser);
    err.push_back(tr);
    err.push_back(te);
    err.push_back(bd);
    ++gi;
  }
  legend(top + 10, err);

  // Norm panel
  Panel pn{left, top + ph + gap, pw, ph, x0, x1, n0, n1, true};
  frame(s, pn, "norm squared");
  std::vector<Series> norms;
  gi = 0;
  for (const auto& [key, g] : groups) {
    Series ns{result.axis == SweepAxis::Width ? "norm^2" : "norm^2 N=" + std::to_string(key), palette[(gi + 1) % 6],
              {}, false};
    for (const auto& [x, a] : g) ns.pts.push_back({a.x, a.norm});
    polyline(s, pn, ns);
    norms.push_back(ns);
    ++gi;
  }
  legend(pn.top + 10, norms);

  if (svm) {
    Panel psv{left, top + 2 * (ph + gap), pw, ph, x0, x1, 0.0, svmax > 0 ? svmax * 1.05 : 1.0};
    frame(s, psv, "support vectors");
    Series sv{"SV count", "#ff7f0e", {}, false};
    for (const auto& [key, g] : groups)
      for (const auto& [x, a] : g) sv.pts.push_back({a.x, a.sv});
    polyline(s, psv, sv);
    legend(psv.top + 10, {sv});
  }
  const double xl_y = top + panels * (ph + gap) - gap + 30;
  s << "<text x=\"" << f2(left + pw / 2) << "\" y=\"" << f2(xl_y) << "\" text-anchor=\"middle\">"
    << (result.axis == SweepAxis::Width ? "N (features)"
                                        : result.axis == SweepAxis::Epochs ? "epochs" : "n (training samples)")
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

void render_svg(const SweepResult& result, const std::filesystem::path& path, const SvgStyle& style) {
  if (result.rows.empty()) throw DomainError("nothing to plot: sweep has no rows");
  auto out = open_out(path);
  out << svg_string(result, style);
  if (!out) throw IoError("write failure on " + path.string());
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& [k, v] : manifest) {
    if (k.empty() || k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
        v.find('\n') != std::string::npos)
      throw DomainError("manifest entries must be single-line key=value pairs ('" + k + "')");
    out << k << '=' << v << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw DomainError(path.string() + ": line " + std::to_string(lineno) + " is not key=value");
    m.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

}  // namespace vcdd
