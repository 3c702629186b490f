#pragma once

#include <vector>

#include "gdi/simulate.hpp"

namespace gdi::detail {

struct Cell {
  std::size_t theta_index = 0;
  std::size_t sigma_index = 0;
  std::size_t replicate = 0;
};

void validate_study(const StudyConfig& config);

/// Every (θ, σ, replicate) in θ-major order.
std::vector<Cell> dataset_cells(const StudyConfig& config);

std::vector<double> dataset_response(const StudyConfig& config, const Cell& cell);

std::vector<RobustnessRecord> robustness_work(const StudyConfig& config, const Cell& cell);
std::vector<SelectionRecord> selection_work(const StudyConfig& config, const Cell& cell);
ReparamRecord reparam_work(const StudyConfig& config, const Cell& cell);

void summarize_robustness(const StudyConfig& config, StudySummary& summary);
void summarize_selection(const StudyConfig& config, StudySummary& summary);
void summarize_reparam(const StudyConfig& config, StudySummary& summary);

}  // namespace gdi::detail
