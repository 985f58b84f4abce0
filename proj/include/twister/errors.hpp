#ifndef TWISTER_ERRORS_HPP
#define TWISTER_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twister {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or stream. Line numbers are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A phoneme symbol (IPA or ARPABET) that the loaded inventory does not know.
class UnknownPhonemeError : public Error {
 public:
  explicit UnknownPhonemeError(const std::string& symbol)
      : Error("unknown phoneme '" + symbol + "'"), symbol_(symbol) {}
  const std::string& symbol() const { return symbol_; }

 private:
  std::string symbol_;
};

// Precondition violation on an operation's arguments (empty inputs etc.).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Failure talking to a language-model provider. Transport failures are
// retriable; non-2xx responses and malformed bodies are not.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, bool retriable, int status = 0)
      : Error(what), retriable_(retriable), status_(status) {}
  bool retriable() const { return retriable_; }
  int status() const { return status_; }

 private:
  bool retriable_;
  int status_;
};

}  // namespace twister

#endif  // TWISTER_ERRORS_HPP
