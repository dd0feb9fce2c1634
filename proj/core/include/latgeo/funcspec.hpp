#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latgeo/types.hpp"

namespace latgeo::funcspec {

inline constexpr int kMaxVariables = 6;
inline constexpr std::size_t kMaxSourceBytes = 64 * 1024;

/// Syntax error or unknown identifier. what() reads "line:col:message".
class ParseError : public InputError {
 public:
  ParseError(std::size_t offset, int line, int col, const std::string& message);
  std::size_t offset() const { return offset_; }
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  std::size_t offset_;
  int line_;
  int col_;
};

/// Evaluation left the domain: division by zero, sqrt or log of an invalid
/// argument, or a non-finite intermediate.
class DomainError : public InputError {
 public:
  using InputError::InputError;
};

enum class Kind { Number, Constant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };
enum class Function { Sin, Cos, Sqrt, Exp, Log, Abs };
enum class Named { Pi, E };

struct Node;

/// Immutable expression tree; copies share structure.
class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static Expr number(double v);
  static Expr constant(Named c);
  static Expr variable(int index);  // 0-based; prints as s{index+1}
  static Expr unary(Kind k, Expr a);
  static Expr binary(Kind k, Expr a, Expr b);
  static Expr call(Function f, Expr a);

  const Node& node() const { return *node_; }
  bool valid() const { return static_cast<bool>(node_); }
  /// Highest variable index used plus one.
  int arity() const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  Kind kind = Kind::Number;
  double value = 0.0;
  int index = 0;
  Named named = Named::Pi;
  Function fn = Function::Sin;
  Expr lhs;
  Expr rhs;
};

/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?            right-associative
///   primary := number | 'pi' | 'e' | s<k> | fn '(' expr ')' | '(' expr ')'
/// with fn in sin cos sqrt exp log abs and 1 <= k <= max_vars.
Expr parse(std::string_view text, int max_vars = kMaxVariables);
/// Fully parenthesized text that parses back to an equal tree.
std::string to_string(const Expr& e);
double evaluate(const Expr& e, std::span<const double> s);

/// Output of a family is a rows x cols matrix filled row-major from exprs.
class FuncFamily {
 public:
  /// Empty 0 x 0 family; a placeholder until assigned.
  FuncFamily() = default;
  FuncFamily(std::vector<Expr> exprs, int rows, int cols, int inputs, bool normalize = false);
  static FuncFamily parse(const std::vector<std::string>& texts, int rows, int cols, int inputs,
                          bool normalize = false);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int inputs() const { return inputs_; }
  bool normalized() const { return normalize_; }
  const std::vector<Expr>& exprs() const { return exprs_; }

  /// Unit-normalizes when the flag is set; raw norms below 1e-9 are rejected.
  Mat evaluate(std::span<const double> s) const;
  Mat evaluate(const Vec& s) const;
  Eigen::VectorXd evaluate_flat(std::span<const double> s) const;

 private:
  std::vector<Expr> exprs_;
  int rows_ = 0;
  int cols_ = 0;
  int inputs_ = 0;
  bool normalize_ = false;
};

/// Central-difference Jacobian, one row per flattened output, one column
/// per input. h must lie in [1e-8, 1e-3].
Eigen::MatrixXd fd_jacobian(const FuncFamily& fam, std::span<const double> s, double h = 1e-5);
/// Numerical rank: singular values above rel_tol * max(1, sigma_max).
int jacobian_rank(const FuncFamily& fam, std::span<const double> s, double h = 1e-5,
                  double rel_tol = 1e-6);

/// Axis box U in parameter space; grids are cell-centred with n points per axis.
struct ParamBox {
  Vec lo;
  Vec hi;
  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const { return (hi - lo).prod(); }
};

/// Point `index` of the cell-centred grid with n points per axis; the first
/// axis varies fastest.
Vec grid_point(const ParamBox& box, int n, std::size_t index);
std::size_t grid_size(const ParamBox& box, int n);

struct GenericityWitness {
  Vec s;
  double t = 0.0;
  IVec k;
  double distance = 0.0;
};

struct GenericityReport {
  std::size_t grid_points = 0;
  std::size_t flagged = 0;
  double flagged_fraction = 0.0;
  std::vector<GenericityWitness> witnesses;  // one per flagged grid point
};

/// Bounded-height violation search: flags grid points s where
/// |sum_j m_j (phi_j(s) - theta(s)) - t f(s) - k| < tol for some |t| <= t_bound
/// and integer k with |k|_inf <= k_bound. f is used unit-normalized.
GenericityReport theta_genericity_scan(const FuncFamily& theta, const FuncFamily& f,
                                       const std::vector<FuncFamily>& phis, const ParamBox& box,
                                       const IVec& m, double t_bound, int k_bound, double tol,
                                       int grid);

}  // namespace latgeo::funcspec
