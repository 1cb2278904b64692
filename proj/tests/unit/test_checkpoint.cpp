// Copyright 2026 The repkd Authors.
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

#include "doctest.h"
#include "helpers.hpp"
#include "repkd/binio.hpp"
#include "repkd/checkpoint.hpp"

using namespace repkd;

TEST_CASE("model survives save and load") {
  testing::TempDir dir("ckpt");
  auto m = nn::Model<float>::init(testing::tiny_config(), 3);
  m.add_regression(7, 4);
  save_model(dir / "m.tkdm", m);
  const auto back = load_model<float>(dir / "m.tkdm", m.config);
  CHECK(back.hash() == m.hash());
  CHECK(!back.regression.empty());
  // write -> read -> write is byte exact
  const auto bytes = binio::read_file(dir / "m.tkdm");
  CHECK(encode_checkpoint(decode_checkpoint(bytes, "m")) == bytes);
}

TEST_CASE("config digest mismatch is a consistency error") {
  testing::TempDir dir("ckpt");
  const auto m = nn::Model<float>::init(testing::tiny_config(), 3);
  save_model(dir / "m.tkdm", m);
  auto other = testing::tiny_config();
  other.joint_dim += 1;
  CHECK_THROWS_AS(load_model<float>(dir / "m.tkdm", other), ConsistencyError);
}

TEST_CASE("missing, misshapen and unknown blobs") {
  const auto m = nn::Model<float>::init(testing::tiny_config(), 3);
  auto file = checkpoint_from_model(m);
  {
    auto f = file;
    f.blobs.erase(f.blobs.begin());
    CHECK_THROWS_AS(model_from_checkpoint<float>(f, m.config), FormatError);
  }
  {
    auto f = file;
    f.blobs[0].dims[0] += 1;
    f.blobs[0].data.resize(f.blobs[0].data.size() + f.blobs[0].dims[1]);
    CHECK_THROWS_AS(model_from_checkpoint<float>(f, m.config), FormatError);
  }
  {
    auto f = file;
    f.blobs.push_back({"mystery", {1}, {0.0f}});
    CHECK_THROWS_AS(model_from_checkpoint<float>(f, m.config), FormatError);
  }
  {
    auto f = file;
    f.blobs.push_back({"optimizer.first.joint.bias", {1}, {0.0f}});
    CHECK(model_from_checkpoint<float>(f, m.config).hash() == m.hash());
  }
}

TEST_CASE("corrupted checkpoint bytes never crash") {
  const auto m = nn::Model<float>::init(testing::tiny_config(), 3);
  const auto bytes = encode_checkpoint(checkpoint_from_model(m));
  for (std::size_t cut = 0; cut < bytes.size(); cut += 7) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    CHECK_THROWS_AS(decode_checkpoint(part, "cut"), FormatError);
  }
  auto bad = bytes;
  bad[4] = 9;  // version
  CHECK_THROWS_AS(decode_checkpoint(bad, "bad"), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing, "trailing"), FormatError);
}
