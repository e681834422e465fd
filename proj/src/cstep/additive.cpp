#include <optional>
#include <sstream>

#include "lc/errors.hpp"
#include "lc/schemes.hpp"

namespace lc {

namespace {

struct Descent {
  std::vector<std::optional<CompressedForm>> forms;
  std::vector<std::vector<double>> parts;  // Δ of each component
  double objective = 0.0;
};

double objective_of(std::span<const double> u, const ViewShape& view,
                    const std::vector<SchemePtr>& schemes, const Descent& d, double mu) {
  std::vector<double> sum(u.size(), 0.0);
  double penalty = 0.0;
  for (std::size_t j = 0; j < schemes.size(); ++j) {
    for (std::size_t i = 0; i < u.size(); ++i) sum[i] += d.parts[j][i];
    if (d.forms[j] && schemes[j]->is_penalty()) penalty += schemes[j]->penalty(*d.forms[j], view);
  }
  const double dist = squared_distance(u, sum);
  return penalty == 0.0 ? dist : dist + 2.0 / mu * penalty;
}

void run_descent(std::span<const double> u, const ViewShape& view,
                 const std::vector<SchemePtr>& schemes, double mu, const AdditiveOptions& opt,
                 Descent& d) {
  const std::size_t p = u.size();
  const double tol = opt.relative_tol * squared_norm(u);
  std::vector<double> residual(p);
  d.objective = objective_of(u, view, schemes, d, mu);
  for (int iter = 0; iter < opt.max_iters; ++iter) {
    const double before = d.objective;
    for (std::size_t j = 0; j < schemes.size(); ++j) {
      for (std::size_t i = 0; i < p; ++i) {
        double others = 0.0;
        for (std::size_t k = 0; k < schemes.size(); ++k)
          if (k != j) others += d.parts[k][i];
        residual[i] = u[i] - others;
      }
      const CompressionScheme& s = *schemes[j];
      CStepResult r = s.compress(residual, view, mu, d.forms[j] ? &*d.forms[j] : nullptr);
      if (decompressed_size(r.form) != p) {
        throw ArgumentError("additive: component " + std::to_string(j) + " (" + s.name() +
                            ") returned a form of the wrong size");
      }
      if (d.forms[j]) {
        // Keep the current block if a non-exact solver failed to improve it.
        const double cur = c_step_objective(s, *d.forms[j], view,
                                            squared_distance(residual, d.parts[j]), mu);
        const double next = c_step_objective(s, r.form, view, r.distortion, mu);
        if (next > cur) continue;
      }
      d.parts[j] = decompress(r.form);
      d.forms[j] = std::move(r.form);
    }
    d.objective = objective_of(u, view, schemes, d, mu);
    if (before - d.objective <= tol) break;
  }
}

}  // namespace

CStepResult additive_cstep(std::span<const double> u, const ViewShape& view,
                           const std::vector<SchemePtr>& schemes, double mu,
                           const AdditiveOptions& options, const CompressedForm* warm_start) {
  if (schemes.size() < 2) throw ArgumentError("additive: needs at least two components");
  if (u.size() != view.size()) {
    throw ArgumentError("additive: target length " + std::to_string(u.size()) +
                        " does not match view size " + std::to_string(view.size()));
  }
  for (const SchemePtr& s : schemes) s->validate(view);

  Descent cold;
  cold.forms.resize(schemes.size());
  cold.parts.assign(schemes.size(), std::vector<double>(u.size(), 0.0));
  run_descent(u, view, schemes, mu, options, cold);
  Descent* best = &cold;

  Descent warm;
  if (warm_start) {
    const auto* add = std::get_if<AdditiveForm>(&warm_start->value);
    if (add && add->components.size() == schemes.size()) {
      warm.forms.resize(schemes.size());
      warm.parts.resize(schemes.size());
      bool usable = true;
      for (std::size_t j = 0; j < schemes.size() && usable; ++j) {
        usable = decompressed_size(add->components[j]) == u.size();
        if (!usable) break;
        warm.forms[j] = add->components[j];
        warm.parts[j] = decompress(add->components[j]);
      }
      if (usable) {
        run_descent(u, view, schemes, mu, options, warm);
        if (warm.objective < cold.objective) best = &warm;
      }
    }
  }

  AdditiveForm out;
  for (std::size_t j = 0; j < schemes.size(); ++j) {
    if (!best->forms[j]) {
      throw NumericError("additive: component " + std::to_string(j) + " was never solved");
    }
    out.components.push_back(std::move(*best->forms[j]));
  }
  CStepResult r{CompressedForm(std::move(out)), 0.0};
  r.distortion = distortion(u, r.form);
  return r;
}

Additive::Additive(std::vector<SchemePtr> components, AdditiveOptions options)
    : components_(std::move(components)), options_(options) {
  if (components_.size() < 2) throw ArgumentError("additive: needs at least two components");
}

std::string Additive::summary() const {
  std::ostringstream os;
  os << "additive[";
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (i) os << " + ";
    os << components_[i]->summary();
  }
  os << "]";
  return os.str();
}

void Additive::validate(const ViewShape& view) const {
  for (const SchemePtr& s : components_) s->validate(view);
}

CStepResult Additive::compress(std::span<const double> u, const ViewShape& view, double mu,
                               const CompressedForm* previous) const {
  return additive_cstep(u, view, components_, mu, options_, previous);
}

bool Additive::is_penalty() const {
  for (const SchemePtr& s : components_)
    if (s->is_penalty()) return true;
  return false;
}

double Additive::penalty(const CompressedForm& form, const ViewShape& view) const {
  const auto& add = std::get<AdditiveForm>(form.value);
  double total = 0.0;
  for (std::size_t j = 0; j < components_.size(); ++j)
    if (components_[j]->is_penalty()) total += components_[j]->penalty(add.components[j], view);
  return total;
}

}  // namespace lc
