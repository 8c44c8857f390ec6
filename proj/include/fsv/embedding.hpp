// fsv/embedding.hpp

// Copyright 2026 The fsv Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "fsv/common.hpp"

namespace fsv {

/// Utterance-level speaker vector with provenance.
struct Embedding {
  Vector vector;
  std::string extractor;  // e.g. "ivector", "softmax", "asoftmax"
  bool dereverberated = false;

  Index dim() const { return vector.size(); }
};

/// Row-aligned collection of embeddings keyed by utterance id.
struct EmbeddingSet {
  std::vector<std::string> ids;
  Matrix data;  // one row per utterance
  std::string extractor;
  bool dereverberated = false;

  Index size() const { return data.rows(); }
  Index dim() const { return data.cols(); }

  void validate() const {
    require_dims(static_cast<Index>(ids.size()) == data.rows(),
                 "embedding set: id count does not match rows");
  }

  void append(const std::string &id, const Embedding &e) {
    if (data.rows() == 0 && ids.empty()) {
      data.resize(0, e.dim());
      extractor = e.extractor;
      dereverberated = e.dereverberated;
    }
    require_dims(e.dim() == data.cols(), "embedding set: dimension mismatch for " + id);
    data.conservativeResize(data.rows() + 1, Eigen::NoChange);
    data.row(data.rows() - 1) = e.vector.transpose();
    ids.push_back(id);
  }

  std::unordered_map<std::string, Index> index() const {
    std::unordered_map<std::string, Index> out;
    for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], static_cast<Index>(i));
    return out;
  }

  Vector row(const std::string &id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return data.row(static_cast<Index>(i)).transpose();
    throw ConfigError("embedding set: unknown utterance " + id);
  }
};

}  // namespace fsv
