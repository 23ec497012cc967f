#ifndef MFL_CORE_HPP
#define MFL_CORE_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mfl {

template <class S> using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S> using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
using VecX = Vec<double>;
using MatX = Mat<double>;

enum class ErrorKind {
  input,
  configuration,
  parameter,
  unsupported,
  capacity,
  construction,
  numeric,
  search,
  dependency,
  geometry,
  prediction,
  divergence,
  analytic,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::input: return "input error";
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::parameter: return "parameter error";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::capacity: return "capacity error";
    case ErrorKind::construction: return "construction error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::search: return "search error";
    case ErrorKind::dependency: return "dependency error";
    case ErrorKind::geometry: return "geometry error";
    case ErrorKind::prediction: return "prediction error";
    case ErrorKind::divergence: return "divergence error";
    case ErrorKind::analytic: return "analytic error";
  }
  return "error";
}

/// Every error carries its kind and the "module.operation" that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string where, const std::string& what)
      : std::runtime_error(where + ": " + to_string(kind) + ": " + what),
        kind_(kind),
        where_(std::move(where)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& where() const { return where_; }

  /// Errors caused by the caller's inputs rather than by the numerics.
  bool is_configuration() const {
    switch (kind_) {
      case ErrorKind::input:
      case ErrorKind::configuration:
      case ErrorKind::parameter:
      case ErrorKind::unsupported:
      case ErrorKind::capacity:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
  std::string where_;
};

}  // namespace mfl

#endif
