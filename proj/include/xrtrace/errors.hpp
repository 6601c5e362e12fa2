#ifndef XRTRACE_ERRORS_HPP
#define XRTRACE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace xrtrace {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside its documented range (window sizes, lags, probabilities).
struct RangeError : Error {
    using Error::Error;
};

// Series too short for the requested operation.
struct InsufficientDataError : Error {
    using Error::Error;
};

// Zero-variance series where a correlation is requested.
struct DegenerateSeriesError : Error {
    using Error::Error;
};

// Unstable synthetic-generator coefficient.
struct StabilityError : Error {
    using Error::Error;
};

// Rank-deficient design matrix with the ridge fallback disabled.
struct SingularityError : Error {
    using Error::Error;
};

// Iterative fit did not converge within its budget; carries the last loss.
struct ConvergenceError : Error {
    double final_loss;
    ConvergenceError(const std::string& msg, double loss)
        : Error(msg), final_loss(loss) {}
};

// Malformed input file; line is 1-based, 0 when not line-specific.
struct ParseError : Error {
    int line;
    ParseError(const std::string& msg, int line_no = 0)
        : Error(line_no > 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
};

// Incompatible model/trace/policy configuration.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace xrtrace

#endif
