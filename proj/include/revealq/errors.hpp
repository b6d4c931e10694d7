#pragma once

#include <stdexcept>
#include <string>

namespace revealq {

// Base for every error the library raises. `code()` is a stable machine
// token used by the service layer when mapping errors onto HTTP responses.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& what) : Error("contract_violation", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

class UnsupportedQuestion : public Error {
public:
    explicit UnsupportedQuestion(const std::string& what) : Error("unsupported_question", what) {}
};

class DegenerateEvidence : public Error {
public:
    explicit DegenerateEvidence(const std::string& what) : Error("degenerate_evidence", what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error("validation_error", what) {}
};

class ConflictError : public Error {
public:
    explicit ConflictError(const std::string& what) : Error("conflict", what) {}
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& what) : Error("not_found", what) {}
};

}  // namespace revealq
