// Copyright 2026 The dsgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dsgd/semi_supervised.hpp"

#include <cmath>
#include <string>

#include "dsgd/errors.hpp"

namespace dsgd {

void AugmentationPolicy::validate() const {
  if (!(sigma_weak >= 0.0) || !(sigma_weak < sigma_strong)) {
    throw InvalidParameter("augmentation requires 0 <= sigma_weak < sigma_strong");
  }
}

namespace {

double sigma_for(const AugmentationPolicy& policy, AugmentStrength strength) {
  return strength == AugmentStrength::kWeak ? policy.sigma_weak : policy.sigma_strong;
}

}  // namespace

Vector augment(const Vector& x, const AugmentationPolicy& policy, AugmentStrength strength,
               Rng& rng) {
  const double sigma = sigma_for(policy, strength);
  if (sigma == 0.0) return x;
  std::normal_distribution<double> noise(0.0, sigma);
  Vector out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += noise(rng);
  return out;
}

Matrix augment_rows(const Matrix& x, const AugmentationPolicy& policy, AugmentStrength strength,
                    Rng& rng) {
  const double sigma = sigma_for(policy, strength);
  if (sigma == 0.0) return x;
  std::normal_distribution<double> noise(0.0, sigma);
  Matrix out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += noise(rng);
  }
  return out;
}

FixMatchResult fixmatch_loss(const Matrix& probs_weak, const Matrix& logits_strong, double tau) {
  if (probs_weak.rows() != logits_strong.rows() || probs_weak.cols() != logits_strong.cols()) {
    throw AlignmentError("weak probabilities and strong logits differ in shape");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidParameter("tau must lie in (0, 1]");

  FixMatchResult out;
  out.grad_logits = Matrix::Zero(logits_strong.rows(), logits_strong.cols());
  const Eigen::Index m = probs_weak.rows();
  if (m == 0) return out;

  const Matrix strong = softmax_rows(logits_strong);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index target = argmax(probs_weak.row(i));
    if (probs_weak(i, target) < tau) continue;
    ++out.confident_rows;
    const double mx = logits_strong.row(i).maxCoeff();
    const double lse = mx + std::log((logits_strong.row(i).array() - mx).exp().sum());
    total += lse - logits_strong(i, target);
    out.grad_logits.row(i) = strong.row(i);
    out.grad_logits(i, target) -= 1.0;
  }
  out.loss = total / static_cast<double>(m);
  out.grad_logits /= static_cast<double>(m);
  return out;
}

double alpha_schedule(int task) {
  if (task < 1) throw InvalidParameter("task index starts at 1");
  return 1.0 / (1.0 + std::exp(-(1.0 + task / 2.0)));
}

Eigen::RowVectorXd ensemble_pseudo(const Eigen::RowVectorXd& p_old, const Eigen::RowVectorXd& p_new,
                                   double alpha) {
  if (p_old.size() > p_new.size()) {
    throw AlignmentError("old prediction is wider than the current head");
  }
  if ((p_old.size() > 0 && p_old.minCoeff() < 0.0) || p_new.minCoeff() < 0.0) {
    throw InvalidInput("probability vectors must be nonnegative");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must lie in [0, 1]");
  Eigen::RowVectorXd padded = Eigen::RowVectorXd::Zero(p_new.size());
  padded.head(p_old.size()) = p_old;
  return alpha * padded + (1.0 - alpha) * p_new;
}

}  // namespace dsgd
