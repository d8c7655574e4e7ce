#pragma once

#include <stdexcept>
#include <string>

namespace cmine {

// Base for every error the pipeline raises. `kind()` is a stable machine-readable tag
// used in the CLI's stderr error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("io_error", what) {}
};

// Corpus JSONL with too many malformed lines.
struct CorpusFormatError : Error {
    explicit CorpusFormatError(const std::string& what) : Error("corpus_format_error", what) {}
};

// Binary vector file or sidecar index that does not match the expected layout.
struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error("format_error", what) {}
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& what) : Error("argument_error", what) {}
};

// Numerically undefined input, e.g. a zero vector under cosine.
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error("domain_error", what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

// Network or provider failure; the embedder retries these.
struct TransportError : Error {
    explicit TransportError(const std::string& what) : Error("transport_error", what) {}
};

struct ProtocolError : Error {
    explicit ProtocolError(const std::string& what) : Error("protocol_error", what) {}
};

// Raised by a pipeline run; carries the failing stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage_error", stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace cmine
