#pragma once

#include <stdexcept>
#include <string>

namespace dirspeech {

/// Error categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
    Argument,    // caller broke a precondition
    Validation,  // input data violates a documented invariant
    Format,      // unsupported or malformed file encoding
    Parse,       // text/JSON that does not parse
    Io,          // filesystem or truncated-read failures
    Backend,     // external separator / SLM service failures
    Config,      // missing or inconsistent configuration
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define DIRSPEECH_DEFINE_ERROR(Name, Kind)                                       \
    class Name : public Error {                                                  \
    public:                                                                      \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    };

DIRSPEECH_DEFINE_ERROR(ArgumentError, Argument)
DIRSPEECH_DEFINE_ERROR(ValidationError, Validation)
DIRSPEECH_DEFINE_ERROR(FormatError, Format)
DIRSPEECH_DEFINE_ERROR(ParseError, Parse)
DIRSPEECH_DEFINE_ERROR(IoError, Io)
DIRSPEECH_DEFINE_ERROR(BackendError, Backend)
DIRSPEECH_DEFINE_ERROR(ConfigError, Config)

#undef DIRSPEECH_DEFINE_ERROR

}  // namespace dirspeech
