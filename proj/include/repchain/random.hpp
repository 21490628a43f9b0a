// Copyright 2026 The repchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace repchain {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for sweep point / stream `index` under `master`. Depends only on the
/// pair, so adding points never perturbs existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Independent, individually reproducible random stream identified by
/// (master seed, stream id).
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    /// Uniform on the open interval (0, 1).
    double uniform_open();
    bool bernoulli(double p) { return uniform_open() < p; }
    /// Attempts up to and including the first success, each succeeding with
    /// probability p in (0, 1]. Inverse-CDF sampling, O(1) per draw.
    std::uint64_t geometric(double p);

    std::uint64_t stream_id() const { return stream_id_; }

  private:
    std::mt19937_64 gen_;
    std::uint64_t stream_id_;
};

}  // namespace repchain
