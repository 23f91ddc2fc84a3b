#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmrag {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- corpus ---

class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line_number, const std::string& detail)
        : Error("malformed record at line " + std::to_string(line_number) + ": " + detail),
          line_number(line_number) {}
    std::size_t line_number;
};

class DuplicateId : public Error {
public:
    explicit DuplicateId(std::string id)
        : Error("duplicate example id \"" + id + "\""), id(std::move(id)) {}
    std::string id;
};

class LabelOutsideSet : public Error {
public:
    LabelOutsideSet(std::string id, std::string label)
        : Error("example \"" + id + "\" has class label \"" + label + "\" outside the task label set"),
          id(std::move(id)), label(std::move(label)) {}
    std::string id;
    std::string label;
};

class EmptyCorpus : public Error {
public:
    explicit EmptyCorpus(const std::string& what) : Error(what) {}
};

class MissingClassLabel : public Error {
public:
    explicit MissingClassLabel(std::string id)
        : Error("example \"" + id + "\" has no class label"), id(std::move(id)) {}
    std::string id;
};

class InvalidTaskSpec : public Error {
public:
    explicit InvalidTaskSpec(const std::string& what) : Error(what) {}
};

// --- embedding ---

class EmptyAfterTokenization : public Error {
public:
    explicit EmptyAfterTokenization(const std::string& what) : Error(what) {}
};

class ZeroVector : public Error {
public:
    explicit ZeroVector(const std::string& what) : Error(what) {}
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t got)
        : Error("dimension mismatch: expected " + std::to_string(expected) +
                ", got " + std::to_string(got)),
          expected(expected), got(got) {}
    std::size_t expected;
    std::size_t got;
};

// --- remote clients ---

class TransportError : public Error {
public:
    using Error::Error;
};

class MalformedResponse : public Error {
public:
    using Error::Error;
};

class ContextLengthExceeded : public Error {
public:
    using Error::Error;
};

// --- selection ---

class KTooLarge : public Error {
public:
    KTooLarge(std::size_t k, std::size_t n)
        : Error("k = " + std::to_string(k) + " exceeds corpus size " + std::to_string(n)),
          k(k), n(n) {}
    std::size_t k;
    std::size_t n;
};

class InsufficientCorpus : public Error {
public:
    InsufficientCorpus(std::size_t needed, std::size_t have)
        : Error("diversity selection needs " + std::to_string(needed) +
                " ranked examples, have " + std::to_string(have)),
          needed(needed), have(have) {}
    std::size_t needed;
    std::size_t have;
};

class EmptyClass : public Error {
public:
    explicit EmptyClass(std::string label)
        : Error("no training example carries class label \"" + label + "\""),
          label(std::move(label)) {}
    std::string label;
};

// --- evaluation ---

class AlignmentError : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

// --- runner ---

class ConfigInvalid : public Error {
public:
    ConfigInvalid(std::string field_path, const std::string& detail)
        : Error("invalid config at " + field_path + ": " + detail),
          field_path(std::move(field_path)) {}
    std::string field_path;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace mmrag
