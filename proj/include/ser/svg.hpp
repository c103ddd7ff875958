#pragma once

#include <string>
#include <vector>

#include "ser/nn/train.hpp"
#include "ser/tensor.hpp"

namespace ser::svg {

// Train/val loss curves: two polylines, one x-tick per epoch, axis labels.
std::string loss_curves(const nn::History& history);

// Grayscale heat map; one 4x4 px rect per matrix cell, row 0 at the bottom.
std::string heatmap(const Tensor& m);

// Downsampled waveform polyline on a fixed 800x200 canvas.
std::string waveform(const std::vector<double>& samples, int max_points = 2000);

}  // namespace ser::svg
