#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "feta/graph.h"
#include "feta/model.h"

namespace feta {

// One head's filter on one graph.
struct ResponseRecord {
  std::size_t graph_id = 0;
  std::size_t layer = 0;
  std::size_t head = 0;
  std::vector<double> alpha;     // K+1 coefficients
  std::vector<double> response;  // sampled on the analysis grid
};

// Mean and population standard deviation of one head's response across graphs.
struct AggregateCurve {
  std::size_t layer = 0;
  std::size_t head = 0;
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Node components of the eigenvector whose eigenvalue has the largest
// |response| for one head on one graph.
struct EigenvectorMap {
  std::size_t graph_id = 0;
  std::size_t layer = 0;
  std::size_t head = 0;
  std::size_t eig_index = 0;  // ascending eigenvalue order
  double eigenvalue = 0.0;    // rescaled to [-1, 1]
  double response = 0.0;
  std::vector<double> components;
};

struct FilterAnalysis {
  std::vector<double> grid;
  std::vector<ResponseRecord> records;  // graph-major, then layer, then head
  std::vector<AggregateCurve> aggregate;
  std::vector<EigenvectorMap> eigen_maps;
};

// Filter response of `alpha` as the model applies it (Chebyshev sum, or the
// unrolled rational filter for kind arma).
std::vector<double> filter_response(const FetaConfig& cfg, const std::vector<double>& alpha,
                                    const std::vector<double>& points);

// Runs the model on every graph and samples each head's response on a
// `grid_size`-point grid. Graph ids start at first_id. ConfigError for
// models without a spectral filter.
FilterAnalysis analyze_filters(const FetaConfig& cfg, const FetaParams& params, const std::vector<Graph>& graphs,
                               std::size_t first_id = 0, std::size_t grid_size = 256);

// graph_id,layer,head,alpha_0..alpha_K,r_0..r_{m-1}
std::string response_csv(const FilterAnalysis& a);
// layer,head,point,lambda,mean,std
std::string aggregate_csv(const FilterAnalysis& a);
// graph_id,layer,head,eig_index,eigenvalue,response,node,component
std::string eigenvector_csv(const FilterAnalysis& a);
// Mean response of every head of one layer against normalized frequency.
std::string layer_svg(const FilterAnalysis& a, std::size_t layer);

// responses.csv, aggregate.csv, eigenvectors.csv and layer<l>.svg.
void write_analysis(const FilterAnalysis& a, const std::filesystem::path& dir);

}  // namespace feta
