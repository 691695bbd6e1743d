#include "edenet/grad_check.hpp"

#include <cmath>

#include "edenet/errors.hpp"

namespace edenet {

namespace {

double eval_loss(const LossFn& f) {
    NoGradGuard ng;
    const double v = f()->item();
    if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
    return v;
}

}  // namespace

GradCheckReport grad_check_detailed(const LossFn& f, const std::vector<std::string>& names,
                                    const std::vector<TensorPtr>& params, double h,
                                    const std::string& corrupt_name) {
    if (names.size() != params.size())
        throw UsageError("grad_check: names and params must be the same length");
    if (h <= 0.0) throw UsageError("grad_check: step h must be positive");

    for (const auto& p : params) p->zero_grad();
    auto loss = f();
    if (!std::isfinite(loss->item())) throw NumericError("grad_check: loss is not finite");
    loss->backward();

    std::vector<std::vector<double>> analytic(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i]->ensure_grad();
        analytic[i] = params[i]->grad;
        if (!corrupt_name.empty() && names[i] == corrupt_name)
            analytic[i][0] += 1.0;
    }

    GradCheckReport report;
    report.names = names;
    report.max_rel_error.assign(params.size(), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            const double saved = p.data[j];
            p.data[j] = saved + h;
            const double f_plus = eval_loss(f);
            p.data[j] = saved - h;
            const double f_minus = eval_loss(f);
            p.data[j] = saved;

            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double a = analytic[i][j];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            const double rel = std::fabs(a - numeric) / denom;
            report.max_rel_error[i] = std::max(report.max_rel_error[i], rel);
        }
        report.overall = std::max(report.overall, report.max_rel_error[i]);
    }
    return report;
}

double grad_check(const LossFn& f, const std::vector<TensorPtr>& params, double h) {
    std::vector<std::string> names(params.size());
    for (std::size_t i = 0; i < names.size(); ++i) names[i] = "p" + std::to_string(i);
    return grad_check_detailed(f, names, params, h).overall;
}

}  // namespace edenet
