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

#include "repchain/random.hpp"

#include <cmath>
#include <stdexcept>

namespace repchain {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t master, std::uint64_t stream) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : gen_(seeded_engine(master_seed, stream_id)), stream_id_(stream_id) {}

double RngStream::uniform_open() {
    // 53 random mantissa bits centred in their cell: never 0, never 1.
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::geometric(double p) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw std::invalid_argument("RngStream::geometric: p must lie in (0, 1]");
    }
    if (p == 1.0) {
        return 1;
    }
    constexpr double kCap = 0x1.0p62;
    const double k = std::ceil(std::log(uniform_open()) / std::log1p(-p));
    if (!(k < kCap)) {
        return static_cast<std::uint64_t>(kCap);
    }
    return k < 1.0 ? 1 : static_cast<std::uint64_t>(k);
}

}  // namespace repchain
