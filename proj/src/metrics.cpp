#include <cmath>
#include <map>
#include <stdexcept>

#include "uwsim/learner.hpp"
#include "uwsim/tasks.hpp"

namespace uwsim {

double e_action(const std::vector<std::vector<double>>& predicted, const std::vector<std::vector<double>>& recorded) {
  if (predicted.size() != recorded.size()) {
    throw std::invalid_argument("e_action: frame counts differ");
  }
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    if (predicted[k].size() != recorded[k].size()) {
      throw std::invalid_argument("e_action: action dimensions differ");
    }
    for (std::size_t i = 0; i < predicted[k].size(); ++i) {
      acc += std::abs(predicted[k][i] - recorded[k][i]);
      ++n;
    }
  }
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

double e_target(const std::vector<std::array<double, 7>>& predicted, const std::vector<std::array<double, 7>>& truth,
                bool include_orientation) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("e_target: frame counts differ");
  }
  if (predicted.empty()) {
    return 0.0;
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const auto& p = predicted[k];
    const auto& t = truth[k];
    acc += std::sqrt((p[4] - t[4]) * (p[4] - t[4]) + (p[5] - t[5]) * (p[5] - t[5]) + (p[6] - t[6]) * (p[6] - t[6]));
    if (include_orientation) {
      acc += rotation_angle_between(Quat(p[0], p[1], p[2], p[3]).normalized(), Quat(t[0], t[1], t[2], t[3]));
    }
  }
  return acc / static_cast<double>(predicted.size());
}

std::vector<OfflineRow> evaluate_offline(const Model& model, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("offline evaluation needs at least one sample");
  }
  struct Group {
    std::vector<std::vector<double>> pred_a, rec_a;
    std::vector<std::array<double, 7>> pred_t, truth, base;
  };
  std::map<std::uint32_t, Group> groups;
  Group all;
  std::array<double, 7> baseline{};
  for (int i = 0; i < 7; ++i) baseline[i] = model.stats.target.mean[i];
  for (const auto& s : samples) {
    const Prediction p = predict(model, s.grid, s.observation);
    for (Group* g : {&groups[s.instruction_id], &all}) {
      g->pred_a.emplace_back(p.action.begin(), p.action.end());
      g->rec_a.emplace_back(s.action.begin(), s.action.end());
      g->pred_t.push_back(p.target);
      g->truth.push_back(s.raw_label);
      g->base.push_back(baseline);
    }
  }
  std::vector<OfflineRow> rows;
  auto row = [](const std::string& name, const Group& g) {
    return OfflineRow{name, g.truth.size(), e_action(g.pred_a, g.rec_a), e_target(g.pred_t, g.truth),
                      e_target(g.base, g.truth)};
  };
  for (const auto& [id, g] : groups) {
    rows.push_back(row(instruction_set().at(id), g));
  }
  rows.push_back(row("overall", all));
  return rows;
}

}  // namespace uwsim
