#include "basis.hpp"

#include <sstream>
#include <stdexcept>
#include <utility>

namespace mfdpc {

MonomialBasis::MonomialBasis(std::vector<Monomial> terms, Eigen::VectorXd scaling)
    : terms_(std::move(terms)), scaling_(std::move(scaling)) {
  for (const auto& m : terms_) {
    if (m.empty()) throw std::invalid_argument("constant term not allowed");
    for (int i : m)
      if (i < 0 || i >= scaling_.size()) throw std::invalid_argument("monomial index out of range");
  }
  if ((scaling_.array() <= 0.0).any()) throw std::invalid_argument("scaling must be positive");
}

Eigen::VectorXd MonomialBasis::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd z = x.cwiseQuotient(scaling_);
  Eigen::VectorXd out(size());
  for (Eigen::Index a = 0; a < size(); ++a) {
    double v = 1.0;
    for (int i : terms_[static_cast<std::size_t>(a)]) v *= z(i);
    out(a) = v;
  }
  return out;
}

Eigen::MatrixXd MonomialBasis::jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd z = x.cwiseQuotient(scaling_);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(size(), state_dim());
  for (Eigen::Index a = 0; a < size(); ++a) {
    const Monomial& m = terms_[static_cast<std::size_t>(a)];
    for (std::size_t pos = 0; pos < m.size(); ++pos) {
      double v = 1.0;
      for (std::size_t o = 0; o < m.size(); ++o)
        if (o != pos) v *= z(m[o]);
      J(a, m[pos]) += v / scaling_(m[pos]);
    }
  }
  return J;
}

std::string MonomialBasis::describe() const {
  std::ostringstream os;
  for (std::size_t a = 0; a < terms_.size(); ++a) {
    if (a) os << ' ';
    for (std::size_t k = 0; k < terms_[a].size(); ++k) {
      if (k) os << '*';
      os << terms_[a][k];
    }
  }
  return os.str();
}

std::vector<Monomial> MonomialBasis::parse_terms(const std::string& text) {
  std::vector<Monomial> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    Monomial m;
    std::istringstream ts(tok);
    std::string part;
    while (std::getline(ts, part, '*')) m.push_back(std::stoi(part));
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

void combos(int n, int deg, int start, Monomial& cur, std::vector<Monomial>& out) {
  if (static_cast<int>(cur.size()) == deg) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < n; ++i) {
    cur.push_back(i);
    combos(n, deg, i, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<Monomial> all_monomials(int state_dim, const std::vector<int>& degrees) {
  std::vector<Monomial> out;
  for (int d : degrees) {
    Monomial cur;
    combos(state_dim, d, 0, cur, out);
  }
  return out;
}

BasisSpec full_quadratic_basis(const Eigen::VectorXd& scaling) {
  const int n = static_cast<int>(scaling.size());
  return {MonomialBasis(all_monomials(n, {2}), scaling), MonomialBasis(all_monomials(n, {1, 2}), scaling),
          "full_quadratic"};
}

BasisSpec anchored_basis(int ne, int nr, const Eigen::VectorXd& scaling) {
  if (scaling.size() != ne + nr) throw std::invalid_argument("scaling length must equal ne + nr");
  std::vector<Monomial> crit, act;
  const std::vector<Monomial> ee = all_monomials(ne, {2});
  crit = ee;
  for (const auto& m : ee)
    for (int k = 0; k < nr; ++k) crit.push_back({m[0], m[1], ne + k});
  for (int i = 0; i < ne; ++i) act.push_back({i});
  for (const auto& m : ee) act.push_back(m);
  for (int i = 0; i < ne; ++i)
    for (int k = 0; k < nr; ++k) act.push_back({i, ne + k});
  return {MonomialBasis(std::move(crit), scaling), MonomialBasis(std::move(act), scaling), "anchored"};
}

BasisSpec make_basis(const std::string& kind, const Eigen::VectorXd& scaling, int ne) {
  if (kind == "anchored") return anchored_basis(ne, static_cast<int>(scaling.size()) - ne, scaling);
  if (kind == "full_quadratic") return full_quadratic_basis(scaling);
  throw std::invalid_argument("unknown basis kind: " + kind);
}

}  // namespace mfdpc
