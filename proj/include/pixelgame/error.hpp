#pragma once

#include <stdexcept>
#include <string>

namespace pixelgame {

enum class ErrorKind {
  Dimension,
  Config,
  Data,
  Divergence,
  Generation,
  Io,
  Version,
  EmptyTarget,
  DegenerateBackground,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by scr() when the neighborhood has zero spread. Carries the two
/// means so callers can still report the contrast.
class DegenerateBackgroundError : public Error {
 public:
  DegenerateBackgroundError(double mu_t, double mu_c)
      : Error(ErrorKind::DegenerateBackground,
              "degenerate background: neighborhood standard deviation is zero (mu_t=" +
                  std::to_string(mu_t) + ", mu_c=" + std::to_string(mu_c) + ")"),
        mu_t(mu_t),
        mu_c(mu_c) {}

  double mu_t;
  double mu_c;
};

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, int batch, const std::string& what)
      : Error(ErrorKind::Divergence, "training diverged at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch) + ": " + what),
        epoch(epoch),
        batch(batch) {}

  int epoch;
  int batch;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace pixelgame
