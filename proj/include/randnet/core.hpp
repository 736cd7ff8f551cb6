#ifndef RANDNET_CORE_HPP
#define RANDNET_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace randnet {

using Index = Eigen::Index;

// Column-major throughout: a dictionary's storage is its stacked columns.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class ErrorKind {
  Dimension,
  Sparsity,
  DegenerateDictionary,
  Divergence,
  Format,
  Length,
  Consistency,
  Rank,
  Config,
  Dependency,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Sparsity: return "sparsity error";
    case ErrorKind::DegenerateDictionary: return "degenerate dictionary";
    case ErrorKind::Divergence: return "numerical divergence";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Length: return "length error";
    case ErrorKind::Consistency: return "consistency error";
    case ErrorKind::Rank: return "rank error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Dependency: return "dependency error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

inline std::string dims(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace randnet

#endif  // RANDNET_CORE_HPP
