#pragma once

#include <stdexcept>
#include <string>

namespace raterlab {

// Base class for all raterlab exceptions.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input that could not be tokenized or parsed (bad CSV row, bad JSON).
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input whose value is outside the permitted domain
// (score off the scale, non-integer doubling, ensemble size too large, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// The same (essay, rater, aspect) triple appeared more than once.
class DuplicateError : public Error {
public:
    using Error::Error;
};

// An aspect name that is not one of the known aspects.
class UnknownAspectError : public Error {
public:
    using Error::Error;
};

// Not enough data to compute the requested statistic at all.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// The statistic is undefined on this data (zero variance, zero expected
// disagreement, zero total information).
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Estimation failed to reach the convergence tolerance. Only thrown when a
// caller requests strict fitting; the default path returns the last iterate
// with converged = false.
class NonConvergenceError : public Error {
public:
    using Error::Error;
};

// The data violates a structural precondition of the model (e.g. a rater or
// essay with no observed cells in the fitting subset).
class StructuralError : public Error {
public:
    using Error::Error;
};

// Rater screening left no rater passing on every aspect.
class EmptySelectionError : public Error {
public:
    using Error::Error;
};

// A feedback target column contains no positive cells.
class NoPositivesError : public Error {
public:
    using Error::Error;
};

// A scoring response contained no digit token.
class EmptyDistributionError : public Error {
public:
    using Error::Error;
};

// HTTP-level failure talking to a scoring endpoint (after retries).
class TransportError : public Error {
public:
    using Error::Error;
};

// A (essay, aspect, model) triple is absent from the response cache while
// running offline.
class CacheMissError : public Error {
public:
    using Error::Error;
};

} // namespace raterlab
