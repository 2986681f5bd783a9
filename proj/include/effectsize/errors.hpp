#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace effectsize {

// Invalid input: a violated type invariant or precondition. `field` names
// the offending input where one can be singled out.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& message, std::string field = {})
        : std::invalid_argument(message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class StageMismatchError : public std::logic_error {
public:
    StageMismatchError(const std::string& message, std::string expected_stage)
        : std::logic_error(message), expected_stage_(std::move(expected_stage)) {}

    const std::string& expected_stage() const noexcept { return expected_stage_; }

private:
    std::string expected_stage_;
};

class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Another writer committed first; the caller may re-read and retry.
class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaVersionError : public std::runtime_error {
public:
    SchemaVersionError(int found, int supported)
        : std::runtime_error("unsupported schema_version " + std::to_string(found) +
                             " (this reader supports version " + std::to_string(supported) + ")"),
          found_(found), supported_(supported) {}

    int found() const noexcept { return found_; }
    int supported() const noexcept { return supported_; }

private:
    int found_;
    int supported_;
};

} // namespace effectsize
