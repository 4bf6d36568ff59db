#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tsg/rng.hpp"

namespace tsg {

// Fully connected net, rectifier on hidden layers, identity output. Batches
// are column-major: forward maps (in x B) to (out x B).
struct DenseNet {
  std::vector<int> sizes;            // {in, hidden..., out}
  std::vector<Eigen::MatrixXd> W;    // W[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> b;

  DenseNet() = default;
  DenseNet(const std::vector<int>& layer_sizes, Rng& rng);

  int num_layers() const { return static_cast<int>(W.size()); }
  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }

  struct Cache {
    std::vector<Eigen::MatrixXd> act;  // act[0] = input, act[l+1] = layer l output
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& X, Cache* cache = nullptr) const;

  struct Grads {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;
  };
  Grads zero_grads() const;

  // Backprop from dL/dY; accumulates parameter grads, returns dL/dX.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dY, const Cache& cache,
                           Grads& grads) const;

  void soft_update_from(const DenseNet& src, double rho);
};

// Adam with bias correction; one state per net.
struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;

  explicit Adam(const DenseNet& net);
  // Applies grads (descent) with global-norm clipping; returns the grad norm.
  double step(DenseNet& net, const DenseNet::Grads& grads, double lr,
              double clip);
};

}  // namespace tsg
