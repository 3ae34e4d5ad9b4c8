#pragma once
#include <geetgdr/dataset.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace geetgdr::cli {

struct FitOptions
{
    std::string expression;
    std::string outcomes;
    std::string out_dir;
    FitConfig config;
    bool raw_scale = false;
};

struct CvOptions
{
    FitOptions fit;
    std::string k_grid; // "a:b:step" or "k1,k2,..."; empty = default grid
    int folds = 5;
};

struct SimulateOptions
{
    long n = 60;
    long p = 200;
    long t = 4;
    std::string structure = "exchangeable";
    double alpha = 0.5;
    std::string support = "1,2,3,4,5"; // 1-based
    double coef = 1.0;
    std::string noise_sd = "1";        // one value or one per time point
    std::uint64_t seed = 1;
    std::string out_dir;
};

struct AssocOptions
{
    std::string expression;
    std::string targets;
    std::string selection; // selection.csv from fit; union members form the panel
    std::string features;  // comma list, alternative to selection
    double rho_min = 0.6;
    double fdr = 0.001;
    std::string out_dir;
};

/// File name -> contents, written only after every output has been computed.
using OutputSet = std::map<std::string, std::string>;

std::vector<int> parse_k_grid(const std::string& spec, int k_max);

OutputSet cmd_fit(const FitOptions& opts);
OutputSet cmd_cv(const CvOptions& opts);
OutputSet cmd_compare(const CvOptions& opts);
OutputSet cmd_simulate(const SimulateOptions& opts);
OutputSet cmd_assoc(const AssocOptions& opts);

/// Writes every output plus manifest.json into `dir` (created if needed).
void write_outputs(const std::string& dir, const OutputSet& outputs);

/// Full command line entry point; returns the process exit status.
int run(int argc, char** argv);

} // namespace geetgdr::cli
