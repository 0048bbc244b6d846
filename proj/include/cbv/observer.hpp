#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbv/types.hpp"

namespace cbv {

enum class Basis { fair_value, historical_cost, realizable };
enum class Regime { A, B };

std::string_view to_string(Basis basis) noexcept;
std::string_view to_string(Regime regime) noexcept;
Basis basis_from_string(std::string_view text);
Regime regime_from_string(std::string_view text);

enum class ControlOption { A_threshold, B_herfindahl, B_prime, C_attenuated };

std::string_view to_string(ControlOption option) noexcept;
ControlOption control_option_from_string(std::string_view text);

struct ControlRuleSpec {
    ControlOption option = ControlOption::A_threshold;
    double tau = 0.5;
    double alpha = 0.6;
    bool normalize = false;
    std::optional<int> reachability_depth;
    /// Free-form cycle attenuation note carried into disclosure.
    std::optional<std::string> cycle_attenuation;

    void validate() const;
};

/// Units / FX / PPP conversion applied as one positive scale.
struct FxPpp {
    double kappa = 1.0;
    std::string fx_source;
    std::string ppp_source;
    std::string deflator;
};

/// One-period SDF described per state. The pricing factor applied to every
/// boundary amount is sum_s prob_s * m_s * lambda_s.
struct SdfSpec {
    std::string measure;
    std::string curve_source;
    std::string horizon;
    std::vector<double> state_probabilities;
    std::vector<double> discount;          // m
    std::vector<double> change_of_measure; // Lambda

    double pricing_factor() const;
};

struct Tolerances {
    double rounding_threshold = 1e-8;
    double solver_eps = 1e-10;
    int max_iters = 10000;
};

struct Observer {
    std::string perimeter_ref;
    NodeIds perimeter;
    Basis basis = Basis::fair_value;
    std::string units = "EUR";
    std::string date;
    std::optional<FxPpp> fx_ppp;
    std::optional<SdfSpec> sdf;
    Regime regime = Regime::A;
    ControlRuleSpec control_rule;
    Tolerances tolerances;

    /// kappa times the SDF factor; 1 when neither is set.
    double pricing_factor() const;

    /// Throws a domain error on kappa <= 0, tau < 0, eps <= 0, K_max < 1,
    /// a malformed currency code or date.
    void validate() const;
};

bool is_iso4217(std::string_view code) noexcept;
bool is_iso_date(std::string_view date) noexcept;

}  // namespace cbv
