// Copyright (c) 2026 The mrtts Authors
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

#ifndef MRTTS_EVAL_EMBEDDINGS_H_
#define MRTTS_EVAL_EMBEDDINGS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrtts/corpus/dataset.h"
#include "mrtts/eval/classifier.h"
#include "mrtts/eval/confusion.h"
#include "mrtts/matrix.h"

namespace mrtts::eval {

struct EmbeddingTable {
  std::vector<std::string> classes;
  std::vector<std::string> ids;
  std::vector<int> labels;
  Matrix values;  // one row per sample
};

// Up to n_per_class samples of each class in the classifier's dimension,
// drawn with a seeded shuffle, embedded by the classifier's reference
// encoder. Classes with fewer samples are emitted whole with a warning.
EmbeddingTable export_embeddings(const StyleClassifier& classifier,
                                 const corpus::Corpus& samples,
                                 int n_per_class, std::uint64_t seed = 1);

// Header "id<TAB>label<TAB>e0...", then one row per sample.
std::string embeddings_tsv(const EmbeddingTable& table);
void write_embeddings_tsv(const std::string& path, const EmbeddingTable& table);

// Mean silhouette coefficient under Euclidean distance. Points alone in
// their cluster score 0. Throws std::invalid_argument with fewer than two
// clusters.
double silhouette_score(const Matrix& points, std::span<const int> labels);

// Projection onto the two leading principal components.
Matrix pca_2d(const Matrix& points);

// Scatter plot of the 2-D projection, one colour per class, with a colour
// key along the top edge in class order.
void plot_embeddings_png(const std::string& path, const EmbeddingTable& table);
// Heat map of row-normalised counts, rows = true class.
void plot_confusion_png(const std::string& path, const ConfusionMatrix& cm);

// 8-bit RGB image written through libpng to a temporary file and renamed.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;

  Image(int w, int h);
  void fill_rect(int x0, int y0, int x1, int y1, unsigned r, unsigned g,
                 unsigned b);
};
void write_png(const std::string& path, const Image& image);

}  // namespace mrtts::eval

#endif  // MRTTS_EVAL_EMBEDDINGS_H_
