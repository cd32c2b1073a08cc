#include "slowvar/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <sstream>

#include <Eigen/CholmodSupport>
#include <Eigen/SparseCholesky>

#include "slowvar/errors.hpp"

namespace slowvar {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;

// Solves K y = b with K = (1 + shift) D - W, symmetric positive definite.
class ShiftedSolver {
 public:
  ShiftedSolver(const SparseSimilarity& g, double shift) {
    ColMatrix K = -ColMatrix(g.W);
    for (Eigen::Index i = 0; i < K.rows(); ++i) K.coeffRef(i, i) = (1.0 + shift) * g.degree(i);
    K.makeCompressed();
    cholmod_ = std::make_unique<Eigen::CholmodSupernodalLLT<ColMatrix>>();
    cholmod_->compute(K);
    if (cholmod_->info() != Eigen::Success) {
      cholmod_.reset();
      ldlt_ = std::make_unique<Eigen::SimplicialLDLT<ColMatrix>>(K);
      if (ldlt_->info() != Eigen::Success) throw NumericalError("shifted Laplacian factorization failed");
    }
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    if (cholmod_) return cholmod_->solve(b);
    return ldlt_->solve(b);
  }

 private:
  std::unique_ptr<Eigen::CholmodSupernodalLLT<ColMatrix>> cholmod_;
  std::unique_ptr<Eigen::SimplicialLDLT<ColMatrix>> ldlt_;
};

void orthonormalize(Eigen::MatrixXd& Q) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Q);
  Q = qr.householderQ() * Eigen::MatrixXd::Identity(Q.rows(), Q.cols());
}

void deflate(Eigen::MatrixXd& Q, const Eigen::VectorXd& u0) {
  // Twice is enough to reach working precision.
  for (int pass = 0; pass < 2; ++pass) Q -= u0 * (u0.transpose() * Q);
}

}  // namespace

EigenResult top_eigenpairs(const SparseSimilarity& g, int d, const EigenOptions& opt) {
  const auto n = Eigen::Index(g.node_count());
  if (d < 1) throw ConfigError("top_eigenpairs: d must be at least 1");
  if (d > n - 1) throw ConfigError("top_eigenpairs: d exceeds the number of nontrivial eigenpairs");
  if (!(opt.tol > 0.0) || opt.max_iters < 1) throw ConfigError("top_eigenpairs: bad tolerance or iteration limit");
  const Eigen::Index p = std::min<Eigen::Index>(d + 2, n - 1);

  const Eigen::VectorXd sqrt_deg = g.degree.cwiseSqrt();
  const Eigen::VectorXd inv_sqrt_deg = sqrt_deg.cwiseInverse();
  const Eigen::VectorXd u0 = sqrt_deg / sqrt_deg.norm();
  // A = D^-1/2 W D^-1/2 applied to a block.
  auto apply_a = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
    Eigen::MatrixXd Y = inv_sqrt_deg.asDiagonal() * X;
    Y = g.W * Y;
    return inv_sqrt_deg.asDiagonal() * Y;
  };

  const ShiftedSolver solver(g, opt.shift);

  // Deterministic start: smooth functions of the node index plus a fixed pseudo-random part.
  Eigen::MatrixXd Q(n, p);
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index i = 0; i < n; ++i) {
      state = state * 6364136223846793005ull + 1442695040888963407ull;
      const double noise = double(state >> 11) * 0x1.0p-53 - 0.5;
      Q(i, c) = std::cos(M_PI * double(c + 1) * (double(i) + 0.5) / double(n)) + 0.1 * noise;
    }
  deflate(Q, u0);
  orthonormalize(Q);

  EigenResult res;
  Eigen::VectorXd theta;
  Eigen::VectorXd resid(d);
  for (int it = 1; it <= opt.max_iters; ++it) {
    // Y = D^1/2 K^-1 D^1/2 Q
    Eigen::MatrixXd Y = sqrt_deg.asDiagonal() * Q;
    Y = solver.solve(Y);
    Y = sqrt_deg.asDiagonal() * Y;
    deflate(Y, u0);
    orthonormalize(Y);
    deflate(Y, u0);
    orthonormalize(Y);

    // Rayleigh-Ritz on A.
    const Eigen::MatrixXd AY = apply_a(Y);
    Eigen::MatrixXd H = Y.transpose() * AY;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    theta = es.eigenvalues().reverse();
    const Eigen::MatrixXd V = es.eigenvectors().rowwise().reverse();
    Q = Y * V;
    const Eigen::MatrixXd AQ = AY * V;

    for (int k = 0; k < d; ++k) {
      const Eigen::VectorXd r = AQ.col(k) - theta(k) * Q.col(k);
      resid(k) = inv_sqrt_deg.cwiseProduct(r).norm();
    }
    res.iterations = it;
    if (resid.maxCoeff() <= opt.tol) break;
    if (it == opt.max_iters) {
      std::ostringstream msg;
      msg << "eigensolver did not converge in " << opt.max_iters << " iterations, last residual " << resid.maxCoeff();
      throw NumericalError(msg.str());
    }
  }

  res.values = theta.head(d);
  res.residuals = resid;
  res.vectors.resize(n, d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd phi = inv_sqrt_deg.cwiseProduct(Q.col(k));
    // Unit norm in the degree-weighted inner product.
    phi /= std::sqrt(phi.dot(g.degree.cwiseProduct(phi)));
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(phi(i)) > best) {
        best = std::abs(phi(i));
        arg = i;
      }
    if (phi(arg) < 0.0) phi = -phi;
    res.vectors.col(k) = phi;
  }
  return res;
}

std::vector<double> combinatorial_spectrum(const SparseSimilarity& g, int k, const EigenOptions& opt) {
  if (k < 1 || std::size_t(k) > g.node_count()) throw ConfigError("combinatorial_spectrum: need 1 <= k <= N");
  std::vector<double> out{0.0};
  if (k == 1) return out;
  const EigenResult r = top_eigenpairs(g, k - 1, opt);
  for (Eigen::Index i = 0; i < r.values.size(); ++i) out.push_back(1.0 - r.values(i));
  return out;
}

void write_eigenvectors_csv(std::ostream& out, const EigenResult& r, const LatticeDomain& domain) {
  out << "i";
  for (std::size_t k = 0; k < domain.dim(); ++k) out << ",x" << k + 1;
  for (Eigen::Index k = 0; k < r.vectors.cols(); ++k) out << ",phi" << k + 1;
  out << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < r.vectors.rows(); ++i) {
    out << i;
    for (int v : domain.state(std::size_t(i))) out << "," << v;
    for (Eigen::Index k = 0; k < r.vectors.cols(); ++k) out << "," << r.vectors(i, k);
    out << "\n";
  }
}

}  // namespace slowvar
