#include "cbv/observer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>

#include "cbv/errors.hpp"

namespace cbv {

std::string_view to_string(Basis basis) noexcept {
    switch (basis) {
        case Basis::fair_value: return "fair_value";
        case Basis::historical_cost: return "historical_cost";
        case Basis::realizable: return "realizable";
    }
    return "fair_value";
}

std::string_view to_string(Regime regime) noexcept { return regime == Regime::A ? "A" : "B"; }

Basis basis_from_string(std::string_view text) {
    for (auto b : {Basis::fair_value, Basis::historical_cost, Basis::realizable})
        if (to_string(b) == text) return b;
    fail(ErrorKind::domain, "unknown basis '" + std::string(text) + "'");
}

Regime regime_from_string(std::string_view text) {
    if (text == "A") return Regime::A;
    if (text == "B") return Regime::B;
    fail(ErrorKind::domain, "unknown information regime '" + std::string(text) + "'");
}

std::string_view to_string(ControlOption option) noexcept {
    switch (option) {
        case ControlOption::A_threshold: return "A";
        case ControlOption::B_herfindahl: return "B";
        case ControlOption::B_prime: return "B'";
        case ControlOption::C_attenuated: return "C";
    }
    return "A";
}

ControlOption control_option_from_string(std::string_view text) {
    if (text == "A" || text == "A_threshold") return ControlOption::A_threshold;
    if (text == "B" || text == "B_herfindahl") return ControlOption::B_herfindahl;
    if (text == "B'" || text == "B_prime") return ControlOption::B_prime;
    if (text == "C" || text == "C_attenuated") return ControlOption::C_attenuated;
    fail(ErrorKind::domain, "unknown control option '" + std::string(text) + "'");
}

void ControlRuleSpec::validate() const {
    if (!(tau > 0.0 && tau <= 1.0)) fail(ErrorKind::domain, "control threshold tau must lie in (0,1]");
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::domain, "attenuation alpha must lie in (0,1)");
    if (reachability_depth && *reachability_depth < 1)
        fail(ErrorKind::domain, "reachability depth must be >= 1");
}

double SdfSpec::pricing_factor() const {
    const auto n = state_probabilities.size();
    if (n == 0) return 1.0;
    auto at = [](const std::vector<double>& v, std::size_t i) { return v.empty() ? 1.0 : v[i]; };
    if ((!discount.empty() && discount.size() != n) || (!change_of_measure.empty() && change_of_measure.size() != n))
        fail(ErrorKind::domain, "SDF weight vectors must match the state count");
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const double p = state_probabilities[s];
        if (p < 0.0 || at(discount, s) < 0.0 || at(change_of_measure, s) < 0.0)
            fail(ErrorKind::domain, "SDF probabilities and weights must be nonnegative");
        total += p * at(discount, s) * at(change_of_measure, s);
    }
    return total;
}

double Observer::pricing_factor() const {
    double factor = fx_ppp ? fx_ppp->kappa : 1.0;
    if (sdf) factor *= sdf->pricing_factor();
    return factor;
}

void Observer::validate() const {
    if (fx_ppp && !(fx_ppp->kappa > 0.0 && std::isfinite(fx_ppp->kappa)))
        fail(ErrorKind::domain, "FX/PPP scale kappa must be positive");
    if (sdf) {
        const double f = sdf->pricing_factor();
        if (!(f > 0.0)) fail(ErrorKind::domain, "SDF pricing factor must be positive");
    }
    if (!(tolerances.rounding_threshold >= 0.0)) fail(ErrorKind::domain, "rounding threshold must be >= 0");
    if (!(tolerances.solver_eps > 0.0)) fail(ErrorKind::domain, "solver eps must be > 0");
    if (tolerances.max_iters < 1) fail(ErrorKind::domain, "max_iters must be >= 1");
    if (!is_iso4217(units)) fail(ErrorKind::domain, "units '" + units + "' is not an ISO-4217 code");
    if (!date.empty() && !is_iso_date(date)) fail(ErrorKind::domain, "date '" + date + "' is not YYYY-MM-DD");
    control_rule.validate();
}

namespace {

// Active ISO-4217 alphabetic codes plus the X-codes in use for funds/metals.
constexpr std::array<std::string_view, 180> kIso4217{
    "AED", "AFN", "ALL", "AMD", "ANG", "AOA", "ARS", "AUD", "AWG", "AZN", "BAM", "BBD", "BDT", "BGN", "BHD",
    "BIF", "BMD", "BND", "BOB", "BOV", "BRL", "BSD", "BTN", "BWP", "BYN", "BZD", "CAD", "CDF", "CHE", "CHF",
    "CHW", "CLF", "CLP", "CNY", "COP", "COU", "CRC", "CUP", "CVE", "CZK", "DJF", "DKK", "DOP", "DZD", "EGP",
    "ERN", "ETB", "EUR", "FJD", "FKP", "GBP", "GEL", "GHS", "GIP", "GMD", "GNF", "GTQ", "GYD", "HKD", "HNL",
    "HTG", "HUF", "IDR", "ILS", "INR", "IQD", "IRR", "ISK", "JMD", "JOD", "JPY", "KES", "KGS", "KHR", "KMF",
    "KPW", "KRW", "KWD", "KYD", "KZT", "LAK", "LBP", "LKR", "LRD", "LSL", "LYD", "MAD", "MDL", "MGA", "MKD",
    "MMK", "MNT", "MOP", "MRU", "MUR", "MVR", "MWK", "MXN", "MXV", "MYR", "MZN", "NAD", "NGN", "NIO", "NOK",
    "NPR", "NZD", "OMR", "PAB", "PEN", "PGK", "PHP", "PKR", "PLN", "PYG", "QAR", "RON", "RSD", "RUB", "RWF",
    "SAR", "SBD", "SCR", "SDG", "SEK", "SGD", "SHP", "SLE", "SOS", "SRD", "SSP", "STN", "SVC", "SYP", "SZL",
    "THB", "TJS", "TMT", "TND", "TOP", "TRY", "TTD", "TWD", "TZS", "UAH", "UGX", "USD", "USN", "UYI", "UYU",
    "UYW", "UZS", "VED", "VES", "VND", "VUV", "WST", "XAF", "XAG", "XAU", "XCD", "XCG", "XDR", "XOF", "XPD",
    "XPF", "XPT", "XSU", "XUA", "YER", "ZAR", "ZMW", "ZWG", "ZWL", "XBA", "XBB", "XBC", "XBD", "XTS", "XXX"};

}  // namespace

bool is_iso4217(std::string_view code) noexcept {
    return std::find(kIso4217.begin(), kIso4217.end(), code) != kIso4217.end();
}

bool is_iso_date(std::string_view date) noexcept {
    if (date.size() != 10 || date[4] != '-' || date[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(date[i]))) return false;
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (date[i] - '0');
        return v;
    };
    const std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                          std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                          std::chrono::day{static_cast<unsigned>(num(8, 2))}};
    return ymd.ok();
}

}  // namespace cbv
