#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wcae {

/// Precondition violated by a caller-supplied value (shape, length, range).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A ModelSpec that cannot be instantiated.
class InvalidSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed external file. Carries the byte offset where parsing stopped.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          message_(what),
          offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }
    /// The description without the offset suffix.
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
    std::uint64_t offset_;
};

/// Not enough retained windows to satisfy a requested selection.
class ShortageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int epoch, int batch)
        : std::runtime_error(what), epoch_(epoch), batch_(batch) {}

    int epoch() const noexcept { return epoch_; }
    int batch() const noexcept { return batch_; }

private:
    int epoch_;
    int batch_;
};

}  // namespace wcae
