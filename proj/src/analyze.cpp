#include "feta/analyze.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "feta/cheb_filter.h"
#include "feta/config.h"
#include "feta/errors.h"

namespace feta {

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

double rescaled_lambda_max(const FetaConfig& cfg, const SpectralBasis& basis) {
  return cfg.fixed_lambda_max || basis.lambda_max <= 1e-12 ? 2.0 : basis.lambda_max;
}

}  // namespace

std::vector<double> filter_response(const FetaConfig& cfg, const std::vector<double>& alpha,
                                    const std::vector<double>& points) {
  if (alpha.size() != cfg.order + 1)
    throw DimensionError("filter_response: " + std::to_string(alpha.size()) + " coefficients for order " +
                         std::to_string(cfg.order));
  if (cfg.filter == FilterKind::kArma) {
    ArmaParams p;
    p.a = arma_default_poles(cfg.order);
    p.direct = Tensor::from({1, 1}, {alpha[0]});
    p.b = Tensor::from({1, cfg.order}, std::vector<double>(alpha.begin() + 1, alpha.end()));
    p.iterations = cfg.arma_iterations;
    return arma_frequency_response(p, points).magnitude;
  }
  FilterCoefficients c{Tensor::from({1, alpha.size()}, alpha)};
  return frequency_response(c, points).magnitude;
}

FilterAnalysis analyze_filters(const FetaConfig& cfg, const FetaParams& params, const std::vector<Graph>& graphs,
                               std::size_t first_id, std::size_t grid_size) {
  if (cfg.filter == FilterKind::kNone) throw ConfigError("analyze_filters: the model has no spectral filter");
  FilterAnalysis a;
  a.grid = response_grid(grid_size);
  const std::size_t k1 = cfg.order + 1;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    const GraphContext ctx = prepare_graph(cfg, g);
    const ModelOutput out = model_forward(cfg, params, ctx);
    const double lmax = rescaled_lambda_max(cfg, ctx.basis);
    std::vector<double> eig(g.n);
    for (std::size_t i = 0; i < g.n; ++i) eig[i] = std::clamp(2.0 * ctx.basis.lambda[i] / lmax - 1.0, -1.0, 1.0);
    for (std::size_t l = 0; l < out.alphas.size(); ++l) {
      const Tensor& alphas = out.alphas[l];  // (K+1) x h
      if (alphas.rows() != k1 || alphas.cols() != cfg.heads)
        throw ConfigError("analyze_filters: coefficient matrix " + shape_str(alphas.shape()) + " does not match order " +
                          std::to_string(cfg.order) + " and " + std::to_string(cfg.heads) + " heads");
      for (std::size_t h = 0; h < cfg.heads; ++h) {
        ResponseRecord r{first_id + gi, l, h, std::vector<double>(k1), {}};
        for (std::size_t k = 0; k < k1; ++k) r.alpha[k] = alphas(k, h);
        r.response = filter_response(cfg, r.alpha, a.grid);

        const std::vector<double> at_eig = filter_response(cfg, r.alpha, eig);
        std::size_t top = 0;
        for (std::size_t i = 1; i < g.n; ++i)
          if (std::abs(at_eig[i]) > std::abs(at_eig[top])) top = i;
        EigenvectorMap m{r.graph_id, l, h, top, eig[top], at_eig[top], std::vector<double>(g.n)};
        for (std::size_t v = 0; v < g.n; ++v) m.components[v] = ctx.basis.u(v, top);
        a.eigen_maps.push_back(std::move(m));
        a.records.push_back(std::move(r));
      }
    }
  }

  const std::size_t per_graph = cfg.layers * cfg.heads;
  for (std::size_t slot = 0; slot < per_graph; ++slot) {
    AggregateCurve c{slot / cfg.heads, slot % cfg.heads, std::vector<double>(grid_size, 0.0),
                     std::vector<double>(grid_size, 0.0)};
    const std::size_t count = graphs.size();
    if (count > 0) {
      for (std::size_t gi = 0; gi < count; ++gi)
        for (std::size_t j = 0; j < grid_size; ++j) c.mean[j] += a.records[gi * per_graph + slot].response[j];
      for (double& v : c.mean) v /= static_cast<double>(count);
      for (std::size_t gi = 0; gi < count; ++gi)
        for (std::size_t j = 0; j < grid_size; ++j) {
          const double d = a.records[gi * per_graph + slot].response[j] - c.mean[j];
          c.stddev[j] += d * d;
        }
      for (double& v : c.stddev) v = std::sqrt(v / static_cast<double>(count));
    }
    a.aggregate.push_back(std::move(c));
  }
  return a;
}

std::string response_csv(const FilterAnalysis& a) {
  const std::size_t k1 = a.records.empty() ? 0 : a.records.front().alpha.size();
  std::string out = "graph_id,layer,head";
  for (std::size_t k = 0; k < k1; ++k) out += ",alpha_" + std::to_string(k);
  for (std::size_t j = 0; j < a.grid.size(); ++j) out += ",r_" + std::to_string(j);
  out += "\n";
  for (const ResponseRecord& r : a.records) {
    out += std::to_string(r.graph_id) + "," + std::to_string(r.layer) + "," + std::to_string(r.head);
    for (double v : r.alpha) out += "," + format_double(v);
    for (double v : r.response) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

std::string aggregate_csv(const FilterAnalysis& a) {
  std::string out = "layer,head,point,lambda,mean,std\n";
  for (const AggregateCurve& c : a.aggregate)
    for (std::size_t j = 0; j < a.grid.size(); ++j)
      out += std::to_string(c.layer) + "," + std::to_string(c.head) + "," + std::to_string(j) + "," +
             format_double(a.grid[j]) + "," + format_double(c.mean[j]) + "," + format_double(c.stddev[j]) + "\n";
  return out;
}

std::string eigenvector_csv(const FilterAnalysis& a) {
  std::string out = "graph_id,layer,head,eig_index,eigenvalue,response,node,component\n";
  for (const EigenvectorMap& m : a.eigen_maps) {
    const std::string prefix = std::to_string(m.graph_id) + "," + std::to_string(m.layer) + "," +
                               std::to_string(m.head) + "," + std::to_string(m.eig_index) + "," +
                               format_double(m.eigenvalue) + "," + format_double(m.response) + ",";
    for (std::size_t v = 0; v < m.components.size(); ++v)
      out += prefix + std::to_string(v) + "," + format_double(m.components[v]) + "\n";
  }
  return out;
}

std::string layer_svg(const FilterAnalysis& a, std::size_t layer) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
                                  "#7f7f7f"};
  const double width = 640, height = 400, left = 60, right = 20, top = 30, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const AggregateCurve& c : a.aggregate) {
    if (c.layer != layer) continue;
    for (double v : c.mean) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  auto sx = [&](double x) { return left + (x + 1.0) / 2.0 * plot_w; };
  auto sy = [&](double y) { return top + (hi - y) / (hi - lo) * plot_h; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">Layer " +
       std::to_string(layer) + " mean filter response</text>\n";
  s += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(plot_w) + "\" height=\"" +
       fixed(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double x = -1.0 + 0.5 * t, px = sx(x);
    s += "<line x1=\"" + fixed(px) + "\" y1=\"" + fixed(top + plot_h) + "\" x2=\"" + fixed(px) + "\" y2=\"" +
         fixed(top + plot_h + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fixed(px) + "\" y=\"" + fixed(top + plot_h + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + tick_label(x) + "</text>\n";
    const double y = lo + (hi - lo) * t / 4.0, py = sy(y);
    s += "<line x1=\"" + fixed(left - 5) + "\" y1=\"" + fixed(py) + "\" x2=\"" + fixed(left) + "\" y2=\"" + fixed(py) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(py + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + tick_label(y) + "</text>\n";
  }
  s += "<text x=\"" + fixed(left + plot_w / 2) + "\" y=\"" + fixed(height - 12) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">normalized frequency</text>\n";
  s += "<text x=\"15\" y=\"" + fixed(top + plot_h / 2) + "\" transform=\"rotate(-90 15 " + fixed(top + plot_h / 2) +
       ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">magnitude</text>\n";
  for (const AggregateCurve& c : a.aggregate) {
    if (c.layer != layer) continue;
    std::string pts;
    for (std::size_t j = 0; j < a.grid.size(); ++j) {
      if (j) pts += " ";
      pts += fixed(sx(a.grid[j])) + "," + fixed(sy(c.mean[j]));
    }
    const char* color = kColors[c.head % (sizeof kColors / sizeof *kColors)];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
         "\"/>\n";
    const double ly = top + 14 + 14 * static_cast<double>(c.head);
    s += "<text x=\"" + fixed(left + plot_w - 8) + "\" y=\"" + fixed(ly) + "\" text-anchor=\"end\" fill=\"" + color +
         "\" font-family=\"sans-serif\" font-size=\"11\">head " + std::to_string(c.head) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

void write_analysis(const FilterAnalysis& a, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
  write_text_file(dir / "responses.csv", response_csv(a));
  write_text_file(dir / "aggregate.csv", aggregate_csv(a));
  write_text_file(dir / "eigenvectors.csv", eigenvector_csv(a));
  std::size_t layers = 0;
  for (const AggregateCurve& c : a.aggregate) layers = std::max(layers, c.layer + 1);
  for (std::size_t l = 0; l < layers; ++l) write_text_file(dir / ("layer" + std::to_string(l) + ".svg"), layer_svg(a, l));
}

}  // namespace feta
