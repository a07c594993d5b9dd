#pragma once

#include <stdexcept>
#include <string>

namespace selficl {

// Base for everything this library throws on purpose. Callers that only
// want "did it work" can catch this one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// configuration / input documents
class ConfigError : public Error {
public:
    using Error::Error;
};

class MalformedDataset : public Error {
public:
    using Error::Error;
};

class TargetOutsideLabelSpace : public Error {
public:
    using Error::Error;
};

// evaluation bookkeeping
class DuplicateQueryId : public Error {
public:
    using Error::Error;
};

class TaskSetMismatch : public Error {
public:
    using Error::Error;
};

class EmptyList : public Error {
public:
    using Error::Error;
};

// prompting / extraction
class NoLabelSpace : public Error {
public:
    using Error::Error;
};

class InsufficientPseudoInputs : public Error {
public:
    InsufficientPseudoInputs(std::size_t found, std::size_t wanted)
        : Error("parsed " + std::to_string(found) + " pseudo inputs, need "
                + std::to_string(wanted)),
          found(found), wanted(wanted) {}
    std::size_t found;
    std::size_t wanted;
};

class UnmatchableLabel : public Error {
public:
    explicit UnmatchableLabel(const std::string& msg, bool ambiguous = false)
        : Error(msg), ambiguous(ambiguous) {}
    // true when the text prefix-matched more than one label
    bool ambiguous;
};

class NoAnswerFound : public Error {
public:
    using Error::Error;
};

// backends / cache
class BackendUnavailable : public Error {
public:
    using Error::Error;
};

class MalformedResponse : public Error {
public:
    using Error::Error;
};

class CacheCorrupt : public Error {
public:
    using Error::Error;
};

// pipeline
class InvalidShotCount : public Error {
public:
    using Error::Error;
};

// analysis
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class ZeroVector : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class ProviderUnavailable : public Error {
public:
    using Error::Error;
};

// reporting
class OutputUnwritable : public Error {
public:
    using Error::Error;
};

}  // namespace selficl
