#include <cmath>
#include <sstream>

#include "lc/engine.hpp"

namespace lc {

std::vector<MonitorEvent> monitor_check(const std::vector<StepRecord>& history) {
  constexpr double kTolerance = 1e-10;
  std::vector<MonitorEvent> events;
  for (const StepRecord& rec : history) {
    if (rec.l_loss_before && rec.l_loss_after && !(*rec.l_loss_after <= *rec.l_loss_before)) {
      std::ostringstream os;
      os.precision(17);
      os << "L step increased the penalized loss from " << *rec.l_loss_before << " to "
         << *rec.l_loss_after;
      events.push_back({Severity::kWarning, rec.step, std::nullopt, os.str()});
    }
    for (std::size_t t = 0; t < rec.c_steps.size(); ++t) {
      const CStepStats& s = rec.c_steps[t];
      if (std::isnan(s.pre_objective)) continue;
      const double slack = kTolerance * std::max(1.0, std::abs(s.pre_objective));
      if (!(s.objective <= s.pre_objective + slack)) {
        std::ostringstream os;
        os.precision(17);
        os << "C step objective rose from " << s.pre_objective << " to " << s.objective;
        events.push_back({Severity::kViolation, rec.step, t, os.str()});
      }
    }
  }
  return events;
}

}  // namespace lc
