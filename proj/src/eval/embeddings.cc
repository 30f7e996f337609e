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

#include "mrtts/eval/embeddings.h"

#include <png.h>
#include <spdlog/spdlog.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "mrtts/errors.h"
#include "mrtts/io.h"

namespace mrtts::eval {

EmbeddingTable export_embeddings(const StyleClassifier& classifier,
                                 const corpus::Corpus& samples,
                                 int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw UsageError("n_per_class must be positive");
  const int dim = classifier.dimension();
  if (dim >= samples.dimensions() ||
      samples.manifest.dimensions[dim].classes != classifier.labels().classes) {
    throw DataError("samples are labelled differently from the classifier");
  }
  EmbeddingTable table;
  table.classes = classifier.labels().classes;
  std::mt19937_64 rng(seed);
  std::vector<Matrix> mels;
  for (int c = 0; c < classifier.class_count(); ++c) {
    std::vector<int> members = samples.by_class[dim][c];
    if (static_cast<int>(members.size()) < n_per_class) {
      spdlog::warn("class '{}' has {} samples, fewer than {}", table.classes[c],
                   members.size(), n_per_class);
    }
    std::shuffle(members.begin(), members.end(), rng);
    members.resize(std::min<std::size_t>(members.size(), n_per_class));
    std::sort(members.begin(), members.end());
    for (int pos : members) {
      mels.push_back(samples.mels[pos]);
      table.ids.push_back(samples.record(pos).utt_id);
      table.labels.push_back(c);
    }
  }
  table.values = mels.empty() ? Matrix(0, classifier.embedding_dim())
                              : classifier.embed(mels);
  return table;
}

std::string embeddings_tsv(const EmbeddingTable& t) {
  std::string out = "id\tlabel";
  for (int c = 0; c < t.values.cols(); ++c) out += "\te" + std::to_string(c);
  out += "\n";
  char buf[32];
  for (int r = 0; r < t.values.rows(); ++r) {
    out += t.ids[r] + "\t" + t.classes[t.labels[r]];
    for (int c = 0; c < t.values.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "\t%.9g", t.values(r, c));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void write_embeddings_tsv(const std::string& path, const EmbeddingTable& t) {
  io::write_file_atomic(path, std::string_view(embeddings_tsv(t)));
}

double silhouette_score(const Matrix& x, std::span<const int> labels) {
  const int n = x.rows();
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("silhouette: one label per point");
  }
  const int clusters =
      n == 0 ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> size(std::max(clusters, 0), 0);
  for (int l : labels) ++size[l];
  int populated = 0;
  for (int s : size) populated += s > 0;
  if (populated < 2) {
    throw std::invalid_argument("silhouette: need at least two clusters");
  }
  double total = 0.0;
  std::vector<double> dist_sum(clusters);
  for (int i = 0; i < n; ++i) {
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (int c = 0; c < x.cols(); ++c) {
        const double d = x(i, c) - x(j, c);
        d2 += d * d;
      }
      dist_sum[labels[j]] += std::sqrt(d2);
    }
    const int own = labels[i];
    if (size[own] < 2) continue;  // singleton contributes 0
    const double a = dist_sum[own] / (size[own] - 1);
    double b = INFINITY;
    for (int c = 0; c < clusters; ++c) {
      if (c != own && size[c] > 0) b = std::min(b, dist_sum[c] / size[c]);
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / n;
}

Matrix pca_2d(const Matrix& points) {
  const int n = points.rows();
  const int d = points.cols();
  Eigen::MatrixXd x(n, d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) x(r, c) = points(r, c);
  }
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = x.transpose() * x / std::max(1, n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  Matrix out(n, 2);
  for (int k = 0; k < std::min(2, d); ++k) {
    // eigenvalues come in increasing order
    const Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - k);
    const Eigen::VectorXd proj = x * axis;
    for (int r = 0; r < n; ++r) out(r, k) = proj(r);
  }
  return out;
}

Image::Image(int w, int h)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 255) {}

void Image::fill_rect(int x0, int y0, int x1, int y1, unsigned r, unsigned g,
                      unsigned b) {
  for (int y = std::max(0, y0); y < std::min(height, y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(width, x1); ++x) {
      unsigned char* p = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
      p[0] = static_cast<unsigned char>(r);
      p[1] = static_cast<unsigned char>(g);
      p[2] = static_cast<unsigned char>(b);
    }
  }
}

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_nothing(png_structp) {}

constexpr unsigned kPalette[][3] = {
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44},   {214, 39, 40},
    {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};

}  // namespace

void write_png(const std::string& path, const Image& image) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("libpng: out of memory");
  png_infop info = png_create_info_struct(png);
  std::vector<char> bytes;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed to encode " + path);
  }
  png_set_write_fn(png, &bytes, append_bytes, flush_nothing);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(
                           &image.rgb[static_cast<std::size_t>(y) *
                                      image.width * 3]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  io::write_file_atomic(path, std::span<const char>(bytes));
}

void plot_embeddings_png(const std::string& path, const EmbeddingTable& table) {
  constexpr int kSize = 480;
  constexpr int kMargin = 40;
  Image img(kSize, kSize);
  // frame
  img.fill_rect(kMargin - 1, kMargin - 1, kSize - kMargin + 1, kMargin, 0, 0, 0);
  img.fill_rect(kMargin - 1, kSize - kMargin, kSize - kMargin + 1,
                kSize - kMargin + 1, 0, 0, 0);
  img.fill_rect(kMargin - 1, kMargin - 1, kMargin, kSize - kMargin + 1, 0, 0, 0);
  img.fill_rect(kSize - kMargin, kMargin - 1, kSize - kMargin + 1,
                kSize - kMargin + 1, 0, 0, 0);
  for (std::size_t c = 0; c < table.classes.size(); ++c) {
    const auto& col = kPalette[c % std::size(kPalette)];
    const int x = kMargin + static_cast<int>(c) * 24;
    img.fill_rect(x, 12, x + 16, 28, col[0], col[1], col[2]);
  }
  if (table.values.rows() > 0) {
    const Matrix xy = pca_2d(table.values);
    double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
    for (int r = 0; r < xy.rows(); ++r) {
      for (int k = 0; k < 2; ++k) {
        lo[k] = std::min(lo[k], xy(r, k));
        hi[k] = std::max(hi[k], xy(r, k));
      }
    }
    const int span = kSize - 2 * kMargin - 16;
    for (int r = 0; r < xy.rows(); ++r) {
      int p[2];
      for (int k = 0; k < 2; ++k) {
        const double range = hi[k] - lo[k];
        const double u = range > 0.0 ? (xy(r, k) - lo[k]) / range : 0.5;
        p[k] = kMargin + 8 + static_cast<int>(std::lround(u * span));
      }
      const auto& col = kPalette[table.labels[r] % std::size(kPalette)];
      img.fill_rect(p[0] - 3, kSize - p[1] - 3, p[0] + 4, kSize - p[1] + 4,
                    col[0], col[1], col[2]);
    }
  }
  write_png(path, img);
}

void plot_confusion_png(const std::string& path, const ConfusionMatrix& cm) {
  const int k = static_cast<int>(cm.classes.size());
  constexpr int kCell = 60;
  constexpr int kMargin = 20;
  Image img(2 * kMargin + k * kCell, 2 * kMargin + k * kCell);
  for (int t = 0; t < k; ++t) {
    for (int p = 0; p < k; ++p) {
      const double v = cm.rate(t, p);
      const auto shade = [v](unsigned full) {
        return static_cast<unsigned>(std::lround(255 - v * (255 - full)));
      };
      const int x = kMargin + p * kCell;
      const int y = kMargin + t * kCell;
      img.fill_rect(x, y, x + kCell, y + kCell, 0, 0, 0);
      img.fill_rect(x + 1, y + 1, x + kCell - 1, y + kCell - 1, shade(8),
                    shade(48), shade(107));
    }
  }
  write_png(path, img);
}

}  // namespace mrtts::eval
