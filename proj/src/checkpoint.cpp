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

#include "repkd/checkpoint.hpp"

#include <sstream>

#include "repkd/binio.hpp"

namespace repkd {

const NamedBlob* CheckpointFile::find(const std::string& name) const {
  for (const auto& b : blobs) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const CheckpointFile& file) {
  binio::Writer w;
  w.magic("TKDM");
  w.u32(file.version);
  w.u64(file.config_digest);
  w.u32(static_cast<std::uint32_t>(file.blobs.size()));
  for (const auto& b : file.blobs) {
    w.short_string(b.name);
    w.u8(static_cast<std::uint8_t>(b.dims.size()));
    for (auto d : b.dims) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(b.data);
  }
  return w.bytes();
}

CheckpointFile decode_checkpoint(std::vector<std::uint8_t> bytes, const std::string& what) {
  binio::Reader r(std::move(bytes), what);
  r.expect_magic("TKDM");
  CheckpointFile file;
  file.version = r.u32();
  if (file.version != kCheckpointVersion) {
    throw FormatError(what + ": unsupported checkpoint version " + std::to_string(file.version));
  }
  file.config_digest = r.u64();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedBlob b;
    b.name = r.short_string();
    const std::uint8_t rank = r.u8();
    std::size_t n = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      b.dims.push_back(r.u32());
      n *= b.dims.back();
    }
    if (n > r.remaining() / sizeof(float)) {
      throw FormatError(what + ": truncated data for parameter " + b.name);
    }
    b.data.resize(n);
    r.f32s(b.data);
    file.blobs.push_back(std::move(b));
  }
  if (!r.at_end()) throw FormatError(what + ": trailing bytes after last parameter");
  return file;
}

CheckpointFile read_checkpoint_file(const std::filesystem::path& path) {
  return decode_checkpoint(binio::read_file(path), path.string());
}

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file) {
  binio::write_file(path, encode_checkpoint(file));
}

template <typename S>
CheckpointFile checkpoint_from_model(const nn::Model<S>& model) {
  CheckpointFile file;
  file.config_digest = model.config.digest();
  model.visit([&](const std::string& name, const Tensor<S>& t) {
    NamedBlob b;
    b.name = name;
    b.dims = t.dims();
    b.data.assign(t.flat().begin(), t.flat().end());
    file.blobs.push_back(std::move(b));
  });
  return file;
}

template <typename S>
nn::Model<S> model_from_checkpoint(const CheckpointFile& file, const nn::ModelConfig& config) {
  if (file.config_digest != config.digest()) {
    std::ostringstream os;
    os << "checkpoint was written for a different model configuration (digest " << std::hex
       << file.config_digest << ", expected " << config.digest() << " for "
       << config.canonical() << ")";
    throw ConsistencyError(os.str());
  }
  nn::Model<S> model = nn::Model<S>::init(config, 0);
  if (const NamedBlob* rw = file.find("regression.weight")) {
    if (rw->dims.size() != 2) throw FormatError("regression.weight must be rank 2");
    model.add_regression(rw->dims[0], 0);
  }
  model.visit([&](const std::string& name, Tensor<S>& t) {
    const NamedBlob* b = file.find(name);
    if (!b) throw FormatError("checkpoint is missing parameter " + name);
    if (b->dims != t.dims()) {
      throw FormatError("parameter " + name + " has shape " + shape_string(b->dims) +
                        ", expected " + shape_string(t.dims()));
    }
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(b->data[i]);
  });
  for (const auto& b : file.blobs) {
    if (b.name.rfind("optimizer.", 0) == 0) continue;
    bool known = false;
    model.visit([&](const std::string& name, const Tensor<S>&) { known = known || name == b.name; });
    if (!known) throw FormatError("checkpoint has unknown parameter " + b.name);
  }
  return model;
}

template CheckpointFile checkpoint_from_model(const nn::Model<float>&);
template CheckpointFile checkpoint_from_model(const nn::Model<double>&);
template nn::Model<float> model_from_checkpoint(const CheckpointFile&, const nn::ModelConfig&);
template nn::Model<double> model_from_checkpoint(const CheckpointFile&, const nn::ModelConfig&);

}  // namespace repkd
