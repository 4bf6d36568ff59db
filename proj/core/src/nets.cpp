#include "tsg/nets.hpp"

#include <cmath>

namespace tsg {

DenseNet::DenseNet(const std::vector<int>& layer_sizes, Rng& rng)
    : sizes(layer_sizes) {
  W.reserve(sizes.size() - 1);
  b.reserve(sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    double bound = std::sqrt(6.0 / sizes[l]);
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    W.push_back(std::move(w));
    b.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& X, Cache* cache) const {
  Eigen::MatrixXd h = X;
  if (cache) {
    cache->act.clear();
    cache->act.push_back(h);
  }
  for (int l = 0; l < num_layers(); ++l) {
    h = (W[l] * h).colwise() + b[l];
    if (l + 1 < num_layers()) h = h.cwiseMax(0.0);
    if (cache) cache->act.push_back(h);
  }
  return h;
}

DenseNet::Grads DenseNet::zero_grads() const {
  Grads g;
  for (int l = 0; l < num_layers(); ++l) {
    g.W.push_back(Eigen::MatrixXd::Zero(W[l].rows(), W[l].cols()));
    g.b.push_back(Eigen::VectorXd::Zero(b[l].size()));
  }
  return g;
}

Eigen::MatrixXd DenseNet::backward(const Eigen::MatrixXd& dY,
                                   const Cache& cache, Grads& grads) const {
  Eigen::MatrixXd delta = dY;
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (l + 1 < num_layers()) {
      // act[l+1] is already rectified; its sign pattern gates the gradient.
      delta = delta.cwiseProduct(
          (cache.act[l + 1].array() > 0.0).cast<double>().matrix());
    }
    grads.W[l] += delta * cache.act[l].transpose();
    grads.b[l] += delta.rowwise().sum();
    if (l > 0) delta = W[l].transpose() * delta;
  }
  return W[0].transpose() * delta;
}

void DenseNet::soft_update_from(const DenseNet& src, double rho) {
  for (int l = 0; l < num_layers(); ++l) {
    W[l] = (1.0 - rho) * W[l] + rho * src.W[l];
    b[l] = (1.0 - rho) * b[l] + rho * src.b[l];
  }
}

Adam::Adam(const DenseNet& net) {
  for (int l = 0; l < net.num_layers(); ++l) {
    mW.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    vW.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    mb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
    vb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }
}

double Adam::step(DenseNet& net, const DenseNet::Grads& grads, double lr,
                  double clip) {
  double sq = 0.0;
  for (std::size_t l = 0; l < grads.W.size(); ++l) {
    sq += grads.W[l].squaredNorm() + grads.b[l].squaredNorm();
  }
  double norm = std::sqrt(sq);
  double scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;

  ++t;
  double c1 = 1.0 - std::pow(beta1, t);
  double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t l = 0; l < grads.W.size(); ++l) {
    Eigen::MatrixXd gw = scale * grads.W[l];
    Eigen::VectorXd gb = scale * grads.b[l];
    mW[l] = beta1 * mW[l] + (1.0 - beta1) * gw;
    vW[l] = beta2 * vW[l] + (1.0 - beta2) * gw.cwiseProduct(gw);
    mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb;
    vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb.cwiseProduct(gb);
    net.W[l] -= lr * (mW[l] / c1).cwiseQuotient(
                         ((vW[l] / c2).cwiseSqrt().array() + eps).matrix());
    net.b[l] -= lr * (mb[l] / c1).cwiseQuotient(
                         ((vb[l] / c2).cwiseSqrt().array() + eps).matrix());
  }
  return norm;
}

}  // namespace tsg
