#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmstock {

// Two families: InputError covers anything wrong with files, schemas or
// arguments (CLI exit 2); RuntimeFailure covers failures that happen while
// computing on valid inputs (CLI exit 3).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- ingest ---------------------------------------------------------------

class MissingColumn : public InputError {
public:
    explicit MissingColumn(const std::string& column)
        : InputError("missing column '" + column + "'"), column_(column) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class UnparsableRow : public InputError {
public:
    UnparsableRow(std::size_t line, const std::string& why)
        : InputError("line " + std::to_string(line) + ": " + why), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateDate : public InputError {
public:
    explicit DuplicateDate(const std::string& date)
        : InputError("duplicate date " + date), date_(date) {}
    const std::string& date() const noexcept { return date_; }

private:
    std::string date_;
};

class NonMonotonicDate : public InputError {
public:
    explicit NonMonotonicDate(const std::string& date)
        : InputError("date out of order: " + date), date_(date) {}
    const std::string& date() const noexcept { return date_; }

private:
    std::string date_;
};

class UnparsableLine : public InputError {
public:
    UnparsableLine(std::size_t line, const std::string& why)
        : InputError("line " + std::to_string(line) + ": " + why), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class MissingField : public InputError {
public:
    MissingField(const std::string& name, std::size_t line)
        : InputError("line " + std::to_string(line) + ": missing field '" + name + "'"),
          name_(name), line_(line) {}
    const std::string& name() const noexcept { return name_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string name_;
    std::size_t line_;
};

class NoPriorValue : public InputError {
public:
    explicit NoPriorValue(const std::string& date)
        : InputError("no value on or before " + date + " and no initial value"), date_(date) {}
    const std::string& date() const noexcept { return date_; }

private:
    std::string date_;
};

// ---- sentiment ------------------------------------------------------------

class UnknownPostId : public InputError {
public:
    explicit UnknownPostId(const std::string& id)
        : InputError("no score for post id '" + id + "'"), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class MalformedResponse : public InputError {
public:
    MalformedResponse(std::size_t index, const std::string& why)
        : InputError("response item " + std::to_string(index) + ": " + why), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// ---- features -------------------------------------------------------------

class SeriesTooShort : public InputError {
public:
    SeriesTooShort(std::size_t length, std::size_t needed)
        : InputError("series of length " + std::to_string(length) + " needs at least " +
                     std::to_string(needed)) {}
};

class EmptyColumn : public InputError {
public:
    using InputError::InputError;
};

class MisalignedInputs : public InputError {
public:
    explicit MisalignedInputs(const std::string& date)
        : InputError("inputs not aligned at " + date), date_(date) {}
    const std::string& date() const noexcept { return date_; }

private:
    std::string date_;
};

class InsufficientHistory : public InputError {
public:
    using InputError::InputError;
};

// ---- forecaster / evaluation ----------------------------------------------

class LengthMismatch : public InputError {
public:
    LengthMismatch(std::size_t a, std::size_t b)
        : InputError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class NonFiniteActivation : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

class TrainingDiverged : public RuntimeFailure {
public:
    explicit TrainingDiverged(std::size_t epoch)
        : RuntimeFailure("training diverged in epoch " + std::to_string(epoch)), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

class ConstantTarget : public InputError {
public:
    ConstantTarget() : InputError("R^2 undefined for a constant target") {}
};

class MixedFeatureSets : public InputError {
public:
    using InputError::InputError;
};

// ---- market simulation ----------------------------------------------------

class NonPositiveOpen : public InputError {
public:
    explicit NonPositiveOpen(double open)
        : InputError("opening price must be positive, got " + std::to_string(open)) {}
};

class MisalignedSeries : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

}  // namespace mmstock
