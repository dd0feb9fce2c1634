#include "latgeo/funcspec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace latgeo::funcspec {

namespace {

std::pair<int, int> line_col(std::string_view text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::shared_ptr<Node> make(Kind k) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  return n;
}

const char* function_name(Function f) {
  switch (f) {
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Sqrt: return "sqrt";
    case Function::Exp: return "exp";
    case Function::Log: return "log";
    case Function::Abs: return "abs";
  }
  return "?";
}

class Parser {
 public:
  Parser(std::string_view text, int max_vars) : text_(text), max_vars_(max_vars) {}

  Expr run() {
    if (text_.size() > kMaxSourceBytes) fail(0, "expression exceeds 64 KiB");
    Expr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail(pos_, std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& msg) {
    auto [line, col] = line_col(text_, at);
    throw ParseError(at, line, col, msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = Expr::binary(Kind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = Expr::binary(Kind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = Expr::binary(Kind::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = Expr::binary(Kind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::unary(Kind::Negate, unary());
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return Expr::binary(Kind::Pow, base, unary());
    return base;
  }

  Expr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail(pos_, "unexpected end of expression");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    if (accept('(')) {
      Expr inner = expr();
      if (!accept(')')) fail(pos_, "expected ')'");
      return inner;
    }
    fail(pos_, std::string("unexpected '") + c + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
        pos_ = q;
        digits();
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) fail(start, "malformed number");
    return Expr::number(v);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "pi") return Expr::constant(Named::Pi);
    if (name == "e") return Expr::constant(Named::E);
    if (name.size() >= 2 && name[0] == 's' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(ch); })) {
      int idx = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (idx < 1 || idx > max_vars_) fail(start, "unknown identifier '" + std::string(name) + "'");
      return Expr::variable(idx - 1);
    }
    static constexpr Function kFns[] = {Function::Sin, Function::Cos, Function::Sqrt,
                                        Function::Exp, Function::Log, Function::Abs};
    for (Function f : kFns) {
      if (name == function_name(f)) {
        if (!accept('(')) fail(pos_, "expected '(' after " + std::string(name));
        Expr arg = expr();
        if (!accept(')')) fail(pos_, "expected ')'");
        return Expr::call(f, arg);
      }
    }
    fail(start, "unknown identifier '" + std::string(name) + "'");
  }

  std::string_view text_;
  int max_vars_;
  std::size_t pos_ = 0;
};

void print(const Expr& e, std::string& out) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Number: {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, n.value);
      out.append(buf, res.ptr);
      return;
    }
    case Kind::Constant:
      out += n.named == Named::Pi ? "pi" : "e";
      return;
    case Kind::Variable:
      out += "s" + std::to_string(n.index + 1);
      return;
    case Kind::Negate:
      out += "(-";
      print(n.lhs, out);
      out += ")";
      return;
    case Kind::Call:
      out += function_name(n.fn);
      out += "(";
      print(n.lhs, out);
      out += ")";
      return;
    default: break;
  }
  const char* op = n.kind == Kind::Add   ? " + "
                   : n.kind == Kind::Sub ? " - "
                   : n.kind == Kind::Mul ? " * "
                   : n.kind == Kind::Div ? " / "
                                         : " ^ ";
  out += "(";
  print(n.lhs, out);
  out += op;
  print(n.rhs, out);
  out += ")";
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + what);
  return v;
}

}  // namespace

ParseError::ParseError(std::size_t offset, int line, int col, const std::string& message)
    : InputError(std::to_string(line) + ":" + std::to_string(col) + ":" + message),
      offset_(offset),
      line_(line),
      col_(col) {}

Expr Expr::number(double v) {
  auto n = make(Kind::Number);
  n->value = v;
  return Expr(n);
}

Expr Expr::constant(Named c) {
  auto n = make(Kind::Constant);
  n->named = c;
  return Expr(n);
}

Expr Expr::variable(int index) {
  auto n = make(Kind::Variable);
  n->index = index;
  return Expr(n);
}

Expr Expr::unary(Kind k, Expr a) {
  auto n = make(k);
  n->lhs = std::move(a);
  return Expr(n);
}

Expr Expr::binary(Kind k, Expr a, Expr b) {
  auto n = make(k);
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return Expr(n);
}

Expr Expr::call(Function f, Expr a) {
  auto n = make(Kind::Call);
  n->fn = f;
  n->lhs = std::move(a);
  return Expr(n);
}

int Expr::arity() const {
  const Node& n = node();
  int a = n.kind == Kind::Variable ? n.index + 1 : 0;
  if (n.lhs.valid()) a = std::max(a, n.lhs.arity());
  if (n.rhs.valid()) a = std::max(a, n.rhs.arity());
  return a;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.valid() != b.valid()) return false;
  if (!a.valid()) return true;
  const Node& x = a.node();
  const Node& y = b.node();
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case Kind::Number: return x.value == y.value;
    case Kind::Constant: return x.named == y.named;
    case Kind::Variable: return x.index == y.index;
    case Kind::Call: return x.fn == y.fn && x.lhs == y.lhs;
    default: return x.lhs == y.lhs && x.rhs == y.rhs;
  }
}

Expr parse(std::string_view text, int max_vars) { return Parser(text, max_vars).run(); }

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

double evaluate(const Expr& e, std::span<const double> s) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Number: return n.value;
    case Kind::Constant: return n.named == Named::Pi ? std::numbers::pi : std::numbers::e;
    case Kind::Variable:
      if (static_cast<std::size_t>(n.index) >= s.size()) {
        throw DomainError("variable s" + std::to_string(n.index + 1) + " is not bound");
      }
      return s[n.index];
    case Kind::Negate: return -evaluate(n.lhs, s);
    case Kind::Add: return checked(evaluate(n.lhs, s) + evaluate(n.rhs, s), "addition");
    case Kind::Sub: return checked(evaluate(n.lhs, s) - evaluate(n.rhs, s), "subtraction");
    case Kind::Mul: return checked(evaluate(n.lhs, s) * evaluate(n.rhs, s), "product");
    case Kind::Div: {
      const double num = evaluate(n.lhs, s);
      const double den = evaluate(n.rhs, s);
      if (den == 0.0) throw DomainError("division by zero");
      return checked(num / den, "division");
    }
    case Kind::Pow: return checked(std::pow(evaluate(n.lhs, s), evaluate(n.rhs, s)), "power");
    case Kind::Call: {
      const double x = evaluate(n.lhs, s);
      switch (n.fn) {
        case Function::Sin: return std::sin(x);
        case Function::Cos: return std::cos(x);
        case Function::Sqrt:
          if (x < 0.0) throw DomainError("sqrt of a negative number");
          return std::sqrt(x);
        case Function::Exp: return checked(std::exp(x), "exp");
        case Function::Log:
          if (x <= 0.0) throw DomainError("log of a non-positive number");
          return std::log(x);
        case Function::Abs: return std::abs(x);
      }
    }
  }
  throw Error("corrupt expression tree");
}

FuncFamily::FuncFamily(std::vector<Expr> exprs, int rows, int cols, int inputs, bool normalize)
    : exprs_(std::move(exprs)), rows_(rows), cols_(cols), inputs_(inputs), normalize_(normalize) {
  if (rows < 1 || cols < 1) throw InputError("family shape must be positive");
  if (static_cast<int>(exprs_.size()) != rows * cols) {
    throw InputError("family needs " + std::to_string(rows * cols) + " expressions, got " +
                     std::to_string(exprs_.size()));
  }
  if (inputs < 0 || inputs > kMaxVariables) throw InputError("family input count out of range");
  if (normalize && cols != 1) throw InputError("only vector families can be normalized");
  for (const Expr& e : exprs_) {
    if (!e.valid()) throw InputError("empty expression in family");
    if (e.arity() > inputs) throw InputError("expression uses more variables than the family has");
  }
}

FuncFamily FuncFamily::parse(const std::vector<std::string>& texts, int rows, int cols, int inputs,
                             bool normalize) {
  std::vector<Expr> exprs;
  exprs.reserve(texts.size());
  for (const std::string& t : texts) exprs.push_back(funcspec::parse(t, inputs));
  return FuncFamily(std::move(exprs), rows, cols, inputs, normalize);
}

Eigen::VectorXd FuncFamily::evaluate_flat(std::span<const double> s) const {
  if (static_cast<int>(s.size()) != inputs_) throw InputError("wrong number of family inputs");
  Eigen::VectorXd out(exprs_.size());
  for (std::size_t i = 0; i < exprs_.size(); ++i) out(i) = funcspec::evaluate(exprs_[i], s);
  if (normalize_) {
    const double norm = out.norm();
    if (!(norm >= 1e-9)) throw DomainError("cannot normalize a vector of norm below 1e-9");
    out /= norm;
  }
  return out;
}

Mat FuncFamily::evaluate(std::span<const double> s) const {
  const Eigen::VectorXd flat = evaluate_flat(s);
  Mat out(rows_, cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) out(r, c) = flat(r * cols_ + c);
  }
  return out;
}

Mat FuncFamily::evaluate(const Vec& s) const {
  return evaluate(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
}

Eigen::MatrixXd fd_jacobian(const FuncFamily& fam, std::span<const double> s, double h) {
  if (!(h >= 1e-8 && h <= 1e-3)) throw InputError("finite-difference step must lie in [1e-8, 1e-3]");
  const int n = fam.inputs();
  const int outs = fam.rows() * fam.cols();
  Eigen::MatrixXd jac(outs, n);
  std::vector<double> p(s.begin(), s.end());
  for (int i = 0; i < n; ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    const Eigen::VectorXd plus = fam.evaluate_flat(p);
    p[i] = orig - h;
    const Eigen::VectorXd minus = fam.evaluate_flat(p);
    p[i] = orig;
    jac.col(i) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

int jacobian_rank(const FuncFamily& fam, std::span<const double> s, double h, double rel_tol) {
  const Eigen::MatrixXd jac = fd_jacobian(fam, s, h);
  if (jac.size() == 0) return 0;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(jac).singularValues();
  const double cut = rel_tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) rank += sv(i) > cut ? 1 : 0;
  return rank;
}

std::size_t grid_size(const ParamBox& box, int n) {
  if (n < 1) throw InputError("grid needs at least one point per axis");
  std::size_t total = 1;
  for (int i = 0; i < box.dim(); ++i) total *= static_cast<std::size_t>(n);
  return total;
}

Vec grid_point(const ParamBox& box, int n, std::size_t index) {
  Vec s(box.dim());
  for (int i = 0; i < box.dim(); ++i) {
    const std::size_t cell = index % static_cast<std::size_t>(n);
    index /= static_cast<std::size_t>(n);
    s(i) = box.lo(i) + (box.hi(i) - box.lo(i)) * (static_cast<double>(cell) + 0.5) / n;
  }
  return s;
}

GenericityReport theta_genericity_scan(const FuncFamily& theta, const FuncFamily& f,
                                       const std::vector<FuncFamily>& phis, const ParamBox& box,
                                       const IVec& m, double t_bound, int k_bound, double tol,
                                       int grid) {
  if (phis.empty() || static_cast<int>(phis.size()) != m.size()) {
    throw InputError("m must have one entry per target");
  }
  if (!(tol > 0.0) || !(t_bound >= 0.0) || k_bound < 0) throw InputError("invalid scan bounds");
  const int d = theta.rows();
  GenericityReport rep;
  rep.grid_points = grid_size(box, grid);
  for (std::size_t idx = 0; idx < rep.grid_points; ++idx) {
    const Vec s = grid_point(box, grid, idx);
    const Mat th = theta.evaluate(s);
    Vec fv = f.evaluate(s).col(0);
    fv /= fv.norm();
    Vec w = Vec::Zero(d);
    for (std::size_t j = 0; j < phis.size(); ++j) {
      w += static_cast<double>(m(static_cast<int>(j))) * (phis[j].evaluate(s).col(0) - th.col(0));
    }
    // Integer points near the segment {w - t f : |t| <= t_bound}.
    IVec lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
      const double a = w(i) - t_bound * std::abs(fv(i)) - tol;
      const double b = w(i) + t_bound * std::abs(fv(i)) + tol;
      lo(i) = std::max<std::int64_t>(-k_bound, static_cast<std::int64_t>(std::ceil(a)));
      hi(i) = std::min<std::int64_t>(k_bound, static_cast<std::int64_t>(std::floor(b)));
    }
    bool empty = false;
    for (int i = 0; i < d; ++i) empty = empty || hi(i) < lo(i);
    if (empty) continue;
    GenericityWitness best;
    best.distance = std::numeric_limits<double>::infinity();
    IVec k = lo;
    while (true) {
      const Vec diff = w - k.cast<double>();
      const double t = std::clamp(diff.dot(fv), -t_bound, t_bound);
      const double dist = (diff - t * fv).norm();
      if (dist < best.distance) {
        best.distance = dist;
        best.t = t;
        best.k = k;
      }
      int pos = 0;
      while (pos < d && k(pos) == hi(pos)) {
        k(pos) = lo(pos);
        ++pos;
      }
      if (pos == d) break;
      ++k(pos);
    }
    if (best.distance < tol) {
      best.s = s;
      rep.witnesses.push_back(best);
      ++rep.flagged;
    }
  }
  rep.flagged_fraction = static_cast<double>(rep.flagged) / static_cast<double>(rep.grid_points);
  return rep;
}

}  // namespace latgeo::funcspec
