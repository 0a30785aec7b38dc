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

#pragma once

#include "dsgd/linalg.hpp"

namespace dsgd {

enum class AugmentStrength { kWeak, kStrong };

struct AugmentationPolicy {
  double sigma_weak = 0.05;
  double sigma_strong = 0.25;

  // Throws InvalidParameter unless 0 <= weak < strong.
  void validate() const;
};

inline constexpr double kDefaultTau = 0.95;

// x plus isotropic Gaussian noise of the selected scale.
Vector augment(const Vector& x, const AugmentationPolicy& policy, AugmentStrength strength,
               Rng& rng);
// Row-wise version for a batch.
Matrix augment_rows(const Matrix& x, const AugmentationPolicy& policy, AugmentStrength strength,
                    Rng& rng);

struct FixMatchResult {
  double loss = 0.0;
  Matrix grad_logits;   // d loss / d logits_strong
  int confident_rows = 0;
};

// Hard pseudo-label consistency. Rows of probs_weak with max >= tau supply
// argmax targets for the strong logits; the mean runs over all rows.
FixMatchResult fixmatch_loss(const Matrix& probs_weak, const Matrix& logits_strong, double tau);

// Logistic weight of the stored prediction for replayed unlabeled samples.
double alpha_schedule(int task);

// alpha * p_old + (1 - alpha) * p_new; p_old is zero-padded to p_new's width.
Eigen::RowVectorXd ensemble_pseudo(const Eigen::RowVectorXd& p_old, const Eigen::RowVectorXd& p_new,
                                   double alpha);

}  // namespace dsgd
