// Linear-in-parameters polynomial features over a scaled state.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mfdpc {

using Monomial = std::vector<int>;  // state indices, repeated for powers

class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(std::vector<Monomial> terms, Eigen::VectorXd scaling);

  Eigen::Index size() const { return static_cast<Eigen::Index>(terms_.size()); }
  Eigen::Index state_dim() const { return scaling_.size(); }
  const std::vector<Monomial>& terms() const { return terms_; }
  const Eigen::VectorXd& scaling() const { return scaling_; }

  Eigen::VectorXd value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // p x state_dim, d phi_a / d x_i
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // "0*1 0*0*5 ..." one token per term
  std::string describe() const;
  static std::vector<Monomial> parse_terms(const std::string& text);

  bool operator==(const MonomialBasis& o) const { return terms_ == o.terms_ && scaling_ == o.scaling_; }

 private:
  std::vector<Monomial> terms_;
  Eigen::VectorXd scaling_;
};

// Every monomial of exactly the listed degrees over all state_dim components.
std::vector<Monomial> all_monomials(int state_dim, const std::vector<int>& degrees);

struct BasisSpec {
  MonomialBasis critic;
  MonomialBasis actor;
  std::string kind;
};

// Degree-2 critic (p = 36 for 8 states) and degree-1,2 actor (p_a = 44).
BasisSpec full_quadratic_basis(const Eigen::VectorXd& scaling);

// Error-anchored bases over N = [e; r] with ne error and nr reference components:
// critic e_i e_j and e_i e_j r_k, actor e_i, e_i e_j and e_i r_k. Every term
// vanishes at e = 0, so V(0, r) = 0 and mu(0, r) = 0 hold by construction.
BasisSpec anchored_basis(int ne, int nr, const Eigen::VectorXd& scaling);

BasisSpec make_basis(const std::string& kind, const Eigen::VectorXd& scaling, int ne);

}  // namespace mfdpc
