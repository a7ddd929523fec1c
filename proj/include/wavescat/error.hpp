#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace wavescat {

/// Base of every error the library throws. The category selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  enum class Category { Config, Physics, Io };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

/// Invalid or inconsistent configuration (scheme/boundary mismatch, packet outside grid, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::Config, what) {}
};

/// A physical or numerical precondition does not hold (E <= 0, empty region, no collision, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(Category::Physics, what) {}
};

/// The propagated field reached the edge of the grid.
class BoundaryContactError : public Error {
 public:
  BoundaryContactError(double time, double edge_probability)
      : Error(Category::Physics,
              "packet touched the domain boundary at t=" + format(time) + " (edge probability " +
                  format(edge_probability) + ")"),
        time_(time),
        edge_probability_(edge_probability) {}

  double time() const noexcept { return time_; }
  double edge_probability() const noexcept { return edge_probability_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }

  double time_;
  double edge_probability_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(Category::Io, path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace wavescat
