#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pathqa {

// Malformed input data. Carries the 1-based line number when one is known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& message, std::size_t line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                      : message),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// A caller violated an operation's preconditions (dimension mismatch,
// zero-norm vector, empty path, invalid id, ...).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// File could not be opened / read / written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A pipeline stage failed; remembers which one so runners can report it.
class PipelineError : public std::runtime_error {
public:
    PipelineError(const std::string& stage, const std::string& message)
        : std::runtime_error("stage " + stage + ": " + message), stage_(stage) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// Non-finite loss encountered while training.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(int epoch, std::size_t batch)
        : std::runtime_error("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(batch)),
          epoch_(epoch),
          batch_(batch) {}

    int epoch() const { return epoch_; }
    std::size_t batch() const { return batch_; }

private:
    int epoch_;
    std::size_t batch_;
};

}  // namespace pathqa
