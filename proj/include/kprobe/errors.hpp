#pragma once

#include <stdexcept>
#include <string>

namespace kprobe {

enum class ErrorKind {
    OutOfDomain,
    SingularMetric,
    UnknownMetric,
    DegenerateResult,
    LeftDomain,
    StepFailure,
    NoConvergence,
    LightLike,
    IllConditioned,
    ConfigurationExhausted,
    ConfigError,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::OutOfDomain: return "OutOfDomain";
        case ErrorKind::SingularMetric: return "SingularMetric";
        case ErrorKind::UnknownMetric: return "UnknownMetric";
        case ErrorKind::DegenerateResult: return "DegenerateResult";
        case ErrorKind::LeftDomain: return "LeftDomain";
        case ErrorKind::StepFailure: return "StepFailure";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::LightLike: return "LightLike";
        case ErrorKind::IllConditioned: return "IllConditioned";
        case ErrorKind::ConfigurationExhausted: return "ConfigurationExhausted";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    // CLI contract: 2 for configuration mistakes, 1 for numerical failures
    int exit_code() const {
        return (kind_ == ErrorKind::ConfigError || kind_ == ErrorKind::UnknownMetric) ? 2 : 1;
    }

private:
    ErrorKind kind_;
};

} // namespace kprobe
