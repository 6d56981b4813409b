#pragma once

#include <stdexcept>
#include <string>

namespace nestavg {

// Group m of the design adds no new directions beyond the earlier groups.
class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(int group, const std::string& msg)
      : std::runtime_error(msg), group_(group) {}
  int group() const noexcept { return group_; }

 private:
  int group_;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Some leverage h_i >= 1 - 1e-12: leave-one-out residuals are undefined.
class LeverageError : public std::runtime_error {
 public:
  LeverageError(int model, const std::string& msg)
      : std::runtime_error(msg), model_(model) {}
  int model() const noexcept { return model_; }

 private:
  int model_;
};

class NotPsdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TooLargeGridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// tr((P_m - P_{m-1}) Omega) vanished; impossible for a PD covariance.
class ZeroVarianceError : public std::runtime_error {
 public:
  ZeroVarianceError(int group, const std::string& msg)
      : std::runtime_error(msg), group_(group) {}
  int group() const noexcept { return group_; }

 private:
  int group_;
};

class NegativeBetaError : public std::runtime_error {
 public:
  NegativeBetaError(int index, const std::string& msg)
      : std::runtime_error(msg), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RegimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TooShortError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nestavg
