#include "study_detail.hpp"

namespace gdi {

StudySummary run_study_serial(const StudyConfig& config) {
  detail::validate_study(config);
  const auto cells = detail::dataset_cells(config);
  StudySummary summary;
  for (StudyKind kind : config.studies) {
    switch (kind) {
      case StudyKind::Robustness:
        summary.robustness.clear();
        for (const auto& cell : cells)
          for (auto& r : detail::robustness_work(config, cell)) summary.robustness.push_back(std::move(r));
        detail::summarize_robustness(config, summary);
        break;
      case StudyKind::Selection:
        summary.selection.clear();
        for (const auto& cell : cells)
          for (auto& r : detail::selection_work(config, cell)) summary.selection.push_back(std::move(r));
        detail::summarize_selection(config, summary);
        break;
      case StudyKind::Reparam:
        summary.reparam.clear();
        for (const auto& cell : cells) summary.reparam.push_back(detail::reparam_work(config, cell));
        detail::summarize_reparam(config, summary);
        break;
    }
  }
  return summary;
}

}  // namespace gdi
