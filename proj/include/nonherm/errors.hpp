// errors.hpp
// Exception types shared across the library.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nonherm {

// Requested measurement outcome has (numerically) zero probability.
class impossible_outcome_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation called outside its spectral regime (e.g. stationary value for gamma <= theta).
class regime_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Repeat-until-success loop hit its attempt budget.
class exhaustion_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Search did not locate a degeneracy in the given range.
class not_found_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical routine failed to converge.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// State has no usable norm (all amplitudes zero).
class invalid_state_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input failed structural validation; carries the offending field names.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& msg, std::vector<std::string> fields = {})
        : std::invalid_argument(msg), fields_(std::move(fields)) {}

    const std::vector<std::string>& fields() const { return fields_; }

private:
    std::vector<std::string> fields_;
};

} // namespace nonherm
