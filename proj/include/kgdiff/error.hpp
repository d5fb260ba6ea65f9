#pragma once

#include <stdexcept>
#include <string>

namespace kgdiff {

/// Base for every error raised by the library. `code()` is a stable,
/// machine-readable name used by the HTTP error envelope and the C API.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define KGDIFF_DEFINE_ERROR(Name)                                            \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : Error("ParseError", "line " + std::to_string(line) + ", column " +
                                  std::to_string(column) + ": " + message),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// ontology
KGDIFF_DEFINE_ERROR(CyclicHierarchyError);
KGDIFF_DEFINE_ERROR(UnknownClassError);

// prototype graph
KGDIFF_DEFINE_ERROR(UnknownElementError);
KGDIFF_DEFINE_ERROR(TypeMismatchError);
KGDIFF_DEFINE_ERROR(PropertyDomainError);
KGDIFF_DEFINE_ERROR(OperatorKindError);
KGDIFF_DEFINE_ERROR(GraphFormatError);

// diffing
KGDIFF_DEFINE_ERROR(IncomparableResultsError);
KGDIFF_DEFINE_ERROR(ValueSelectionMismatchError);

// query generation and execution
KGDIFF_DEFINE_ERROR(InvalidGraphError);
KGDIFF_DEFINE_ERROR(EmptyGraphError);
KGDIFF_DEFINE_ERROR(NetworkError);
KGDIFF_DEFINE_ERROR(TimeoutError);
KGDIFF_DEFINE_ERROR(MalformedResultsError);
KGDIFF_DEFINE_ERROR(ProjectionMismatchError);
KGDIFF_DEFINE_ERROR(UnsupportedQueryError);

class EndpointError : public Error {
public:
    EndpointError(int status, const std::string& body)
        : Error("EndpointError", "endpoint returned HTTP " + std::to_string(status) + ": " + body),
          status_(status),
          body_(body) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

// result overview
KGDIFF_DEFINE_ERROR(UnsupportedSelectionError);
KGDIFF_DEFINE_ERROR(EmptySeriesError);
KGDIFF_DEFINE_ERROR(ChartKindMismatchError);

// natural-language change sets
KGDIFF_DEFINE_ERROR(EmbedderError);
KGDIFF_DEFINE_ERROR(StorageError);
KGDIFF_DEFINE_ERROR(LmError);
KGDIFF_DEFINE_ERROR(SchemaViolationError);
KGDIFF_DEFINE_ERROR(UnrepairableError);

#undef KGDIFF_DEFINE_ERROR

}  // namespace kgdiff
