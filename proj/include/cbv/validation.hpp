#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cbv {

enum class Severity { note, warning, error };

std::string_view to_string(Severity severity) noexcept;

/// One validation finding. `rule` is one of D1..D5, "hash" or "schema".
struct Finding {
    std::string rule;
    Severity severity = Severity::error;
    std::string message;
    std::string location;
};

struct ValidationReport {
    std::vector<Finding> findings;

    /// A package passes when it carries no error-severity finding.
    bool passes() const noexcept;
    bool empty() const noexcept { return findings.empty(); }
    std::size_t count(std::string_view rule) const noexcept;

    void add(std::string rule, Severity severity, std::string message, std::string location = {});
    void merge(const ValidationReport& other);
};

}  // namespace cbv
