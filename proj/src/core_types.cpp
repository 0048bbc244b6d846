#include <algorithm>
#include <array>

#include "cbv/errors.hpp"
#include "cbv/types.hpp"
#include "cbv/validation.hpp"

namespace cbv {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::membership: return "membership";
        case ErrorKind::domain: return "domain";
        case ErrorKind::regime: return "regime";
        case ErrorKind::validation: return "validation";
        case ErrorKind::stability: return "stability";
        case ErrorKind::convergence: return "convergence";
        case ErrorKind::sign: return "sign";
        case ErrorKind::protocol: return "protocol";
        case ErrorKind::integrity: return "integrity";
        case ErrorKind::package: return "package";
        case ErrorKind::emission: return "emission";
    }
    return "unknown";
}

NodeId::NodeId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) fail(ErrorKind::domain, "node id must be non-empty");
}

NodeIds make_ids(std::initializer_list<std::string_view> ids) {
    NodeIds out;
    out.reserve(ids.size());
    for (auto id : ids) out.emplace_back(std::string(id));
    return out;
}

std::string_view to_string(EdgeType type) noexcept {
    switch (type) {
        case EdgeType::equity: return "equity";
        case EdgeType::debt: return "debt";
        case EdgeType::derivative: return "derivative";
        case EdgeType::cashflow: return "cashflow";
    }
    return "equity";
}

EdgeType edge_type_from_string(std::string_view text) {
    constexpr std::array types{EdgeType::equity, EdgeType::debt, EdgeType::derivative, EdgeType::cashflow};
    for (auto t : types)
        if (to_string(t) == text) return t;
    fail(ErrorKind::domain, "unknown edge type '" + std::string(text) + "'");
}

std::string_view to_string(Severity severity) noexcept {
    switch (severity) {
        case Severity::note: return "note";
        case Severity::warning: return "warning";
        case Severity::error: return "error";
    }
    return "error";
}

bool ValidationReport::passes() const noexcept {
    return std::none_of(findings.begin(), findings.end(),
                        [](const Finding& f) { return f.severity == Severity::error; });
}

std::size_t ValidationReport::count(std::string_view rule) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [&](const Finding& f) { return f.rule == rule; }));
}

void ValidationReport::add(std::string rule, Severity severity, std::string message, std::string location) {
    findings.push_back({std::move(rule), severity, std::move(message), std::move(location)});
}

void ValidationReport::merge(const ValidationReport& other) {
    findings.insert(findings.end(), other.findings.begin(), other.findings.end());
}

}  // namespace cbv
