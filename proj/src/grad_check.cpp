#include "mspl/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "mspl/errors.hpp"

namespace mspl::ad {

bool GradCheckReport::passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradCheckReport::max_relative_error() const {
    double worst = 0.0;
    for (const auto& e : entries) worst = std::max(worst, e.max_relative_error);
    return worst;
}

std::vector<Tensor> analytic_gradients(const std::vector<Parameter*>& params, const LossBuilder& loss) {
    for (auto* p : params) p->zero_grad();
    Graph graph;
    Var l = loss(graph);
    graph.backward(l);
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (auto* p : params) grads.push_back(p->grad);
    return grads;
}

GradCheckReport compare_with_finite_differences(const std::vector<Parameter*>& params, const LossBuilder& loss,
                                                const std::vector<Tensor>& gradients, GradCheckOptions options) {
    if (gradients.size() != params.size()) throw UsageError("grad_check: gradient count does not match parameters");
    auto evaluate = [&] {
        Graph graph;
        return loss(graph).value().item();
    };

    GradCheckReport report;
    report.tolerance = options.tolerance;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        GradCheckEntry entry;
        entry.parameter = p.name;
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double saved = p.value[k];
            p.value[k] = saved + options.step;
            const double up = evaluate();
            p.value[k] = saved - options.step;
            const double down = evaluate();
            p.value[k] = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double analytic = gradients[pi][k];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
            const double rel = std::abs(analytic - numeric) / denom;
            if (!(rel <= entry.max_relative_error)) {
                entry.max_relative_error = std::isnan(rel) ? INFINITY : rel;
                entry.worst_index = k;
            }
        }
        entry.passed = entry.max_relative_error <= options.tolerance;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

GradCheckReport grad_check(const std::vector<Parameter*>& params, const LossBuilder& loss, GradCheckOptions options) {
    const auto grads = analytic_gradients(params, loss);
    return compare_with_finite_differences(params, loss, grads, options);
}

}  // namespace mspl::ad
