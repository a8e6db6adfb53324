#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asri {

// Failure categories. The CLI maps them onto exit codes.
enum class ErrorKind {
    parameter,          // bad argument or configuration
    missing_data,       // required input absent
    insufficient_data,  // too few observations for the estimator
    data,               // malformed or conflicting input
    domain,             // value outside the mathematical domain
    degenerate,         // zero variance, singular matrix, reducible chain
    numerical,          // iteration failed or produced non-finite values
    io,
};

inline std::string_view to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::parameter: return "parameter";
        case ErrorKind::missing_data: return "missing_data";
        case ErrorKind::insufficient_data: return "insufficient_data";
        case ErrorKind::data: return "data";
        case ErrorKind::domain: return "domain";
        case ErrorKind::degenerate: return "degenerate";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) throw Error(kind, msg);
}

// 0 ok, 2 usage, 3 data, 4 numerical
inline int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::parameter: return 2;
        case ErrorKind::missing_data:
        case ErrorKind::insufficient_data:
        case ErrorKind::data:
        case ErrorKind::io: return 3;
        case ErrorKind::domain:
        case ErrorKind::degenerate:
        case ErrorKind::numerical: return 4;
    }
    return 4;
}

}  // namespace asri
