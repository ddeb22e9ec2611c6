#pragma once

#include <string>
#include <vector>

#include "alphagan/imgcore.hpp"

namespace alphagan {

struct MetricParams {
    double grad_sigma = 1.4;   // Gaussian-derivative scale
    double conn_theta = 0.15;  // connectivity penalty threshold
    double conn_delta = 0.1;   // connectivity level step
    double sad_scale = 1000.0; // reporting divisor for SAD
};

struct ImageMetrics {
    std::string name;
    double sad_raw = 0, sad = 0, mse = 0, grad = 0, conn = 0;
    size_t unknown = 0;
    bool conn_degenerate = false;
};

struct MetricReport {
    std::vector<ImageMetrics> per_image;
    ImageMetrics aggregate;  // mean of each column
    MetricParams params;
    std::vector<std::string> warnings;
};

// Raw sum of absolute differences over the unknown region.
double sad(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& unknown);

double mse(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& unknown);

// Squared difference of Gaussian-derivative gradient magnitudes, summed over
// the unknown region. Kernels truncated at radius ceil(3*sigma), reflected
// borders.
double gradient_error(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& unknown,
                      double sigma = 1.4);

// Discrepancy of per-pixel connectedness-to-foreground degree. Returns 0 with
// *degenerate=true when no pixel is fully opaque in both mattes.
double connectivity_error(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& unknown,
                          double theta = 0.15, double delta = 0.1, bool* degenerate = nullptr);

ImageMetrics evaluate_pair(const std::string& name, const AlphaMatte& pred, const AlphaMatte& gt,
                           const RegionMask& unknown, const MetricParams& p = {});

MetricReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir,
                           const std::string& trimap_dir, const MetricParams& p = {});

void write_report_json(const MetricReport& r, const std::string& path, bool thousands_scale);
void write_report_csv(const MetricReport& r, const std::string& path, bool thousands_scale);

}  // namespace alphagan
