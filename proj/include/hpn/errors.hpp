#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hpn {

/// Base class for engine errors. `subject` names the offending node, file
/// field or model id when one is known.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message, std::string subject = {})
        : std::runtime_error(message), subject_(std::move(subject)) {}

    [[nodiscard]] const std::string& subject() const noexcept { return subject_; }

private:
    std::string subject_;
};

/// Malformed net/scenario/fusion document. Carries line and field context.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A structurally invalid net reached an operation that requires a valid one.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An effective conflict exists at a place that has no conflict policy.
class UnresolvedConflict : public Error {
public:
    using Error::Error;
};

/// The speed-vector fixed point was not reached within the iteration limit,
/// or the marking lies outside the class of nets the solver supports.
class NonConvergence : public Error {
public:
    using Error::Error;
};

/// Unknown transition/place id, model id or history id.
class NotFound : public Error {
public:
    using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Fusion of two nets failed: kind/marking/timing mismatch or a policy clash.
class CompositionError : public Error {
public:
    using Error::Error;
};

}  // namespace hpn
