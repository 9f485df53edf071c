#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stancekit {

/// Coarse failure class; the CLI maps each one to an exit status.
enum class ErrorCategory { usage, data, backend };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string kind, const std::string &message)
        : std::runtime_error(message), category_(category), kind_(std::move(kind)) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }
    /// Stable machine-readable name, e.g. "UnknownLabel".
    [[nodiscard]] const std::string &kind() const noexcept { return kind_; }

private:
    ErrorCategory category_;
    std::string kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string &message)
        : Error(ErrorCategory::usage, "InvalidArgument", message) {}
};

class MissingFile : public Error {
public:
    explicit MissingFile(const std::string &path)
        : Error(ErrorCategory::data, "MissingFile", "file not found: " + path), path_(path) {}
    [[nodiscard]] const std::string &path() const noexcept { return path_; }

private:
    std::string path_;
};

class MalformedRow : public Error {
public:
    MalformedRow(std::size_t row, const std::string &detail)
        : Error(ErrorCategory::data, "MalformedRow", "malformed row " + std::to_string(row) + ": " + detail), row_(row) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class UnknownLabel : public Error {
public:
    UnknownLabel(const std::string &label, std::size_t row)
        : Error(ErrorCategory::data, "UnknownLabel", "unknown label '" + label + "' at row " + std::to_string(row)),
          label_(label), row_(row) {}
    [[nodiscard]] const std::string &label() const noexcept { return label_; }
    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::string label_;
    std::size_t row_;
};

class DuplicateId : public Error {
public:
    DuplicateId(const std::string &id, std::size_t row)
        : Error(ErrorCategory::data, "DuplicateId", "duplicate example id '" + id + "' at row " + std::to_string(row)) {}
};

class EmptyDataset : public Error {
public:
    explicit EmptyDataset(const std::string &what = "no labeled examples")
        : Error(ErrorCategory::data, "EmptyDataset", what) {}
};

class TranslationFailure : public Error {
public:
    TranslationFailure(const std::string &message, bool transient, std::size_t step = 0)
        : Error(ErrorCategory::backend, "TranslationFailure", message), transient_(transient), step_(step) {}
    [[nodiscard]] bool transient() const noexcept { return transient_; }
    /// Zero-based hop index within the chain.
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    bool transient_;
    std::size_t step_;
};

class InsufficientExemplars : public Error {
public:
    InsufficientExemplars(const std::string &label, std::size_t have, std::size_t need)
        : Error(ErrorCategory::data, "InsufficientExemplars",
                "label '" + label + "' has " + std::to_string(have) + " exemplars, " + std::to_string(need) + " required"),
          label_(label) {}
    [[nodiscard]] const std::string &label() const noexcept { return label_; }

private:
    std::string label_;
};

class LabelCardinalityMismatch : public Error {
public:
    LabelCardinalityMismatch(std::size_t head, std::size_t labels)
        : Error(ErrorCategory::data, "LabelCardinalityMismatch",
                "head has " + std::to_string(head) + " outputs but the task has " + std::to_string(labels) + " labels") {}
};

class OutOfMemory : public Error {
public:
    explicit OutOfMemory(std::size_t batch_size)
        : Error(ErrorCategory::backend, "OutOfMemory",
                "allocation failed while training with batch size " + std::to_string(batch_size)),
          batch_size_(batch_size) {}
    [[nodiscard]] std::size_t batch_size() const noexcept { return batch_size_; }

private:
    std::size_t batch_size_;
};

class TaskMismatch : public Error {
public:
    explicit TaskMismatch(const std::string &message)
        : Error(ErrorCategory::data, "TaskMismatch", message) {}
};

class UnsupportedEncoder : public Error {
public:
    explicit UnsupportedEncoder(const std::string &encoder_ref)
        : Error(ErrorCategory::backend, "UnsupportedEncoder",
                "no in-process backend for encoder '" + encoder_ref + "'; map the registry key to a tiny: encoder in the config") {}
};

class MemberCountMismatch : public Error {
public:
    MemberCountMismatch(std::size_t members, std::size_t predictions)
        : Error(ErrorCategory::data, "MemberCountMismatch",
                "ensemble has " + std::to_string(members) + " members but got " + std::to_string(predictions) + " predictions") {}
    explicit MemberCountMismatch(const std::string &message)
        : Error(ErrorCategory::data, "MemberCountMismatch", message) {}
};

class NegativeWeight : public Error {
public:
    NegativeWeight(const std::string &member, double weight)
        : Error(ErrorCategory::usage, "NegativeWeight",
                "member '" + member + "' has negative weight " + std::to_string(weight)) {}
};

class ExampleUniverseMismatch : public Error {
public:
    explicit ExampleUniverseMismatch(std::vector<std::string> ids);
    /// Symmetric difference of the two id sets, sorted.
    [[nodiscard]] const std::vector<std::string> &ids() const noexcept { return ids_; }

private:
    std::vector<std::string> ids_;
};

class UnlabeledGold : public Error {
public:
    explicit UnlabeledGold(const std::string &id)
        : Error(ErrorCategory::data, "UnlabeledGold", "gold example '" + id + "' has no label; refusing to score") {}
};

class UnwritablePath : public Error {
public:
    explicit UnwritablePath(const std::string &path)
        : Error(ErrorCategory::data, "UnwritablePath", "cannot write to " + path) {}
};

class ClientFailure : public Error {
public:
    explicit ClientFailure(const std::string &message)
        : Error(ErrorCategory::backend, "ClientFailure", message) {}
};

}  // namespace stancekit
