#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hal::textfeat {

/// Dense feature vector; producers in this module return it L2-normalized
/// (or all-zero).
struct FeatureVector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  double norm() const;
  bool is_zero() const;

  bool operator==(const FeatureVector&) const = default;
};

/// Scales to unit L2 norm; the zero vector is returned unchanged.
FeatureVector normalized(std::vector<double> values);

struct TokenizeOptions {
  /// Light suffix stripping (plural, -ing, -ed, -ly). Off by default.
  bool stem = false;
};

const std::vector<std::string>& stop_words();
bool is_stop_word(std::string_view token);

/// Lowercases, splits on non-alphanumerics, keeps dotted version tokens such
/// as `13.1` intact, then drops short tokens, pure digits and stop words.
std::vector<std::string> tokenize(std::string_view description, const TokenizeOptions& options = {});

std::string light_stem(std::string_view token);

class Vocabulary {
 public:
  /// Columns in lexicographic term order.
  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  /// -1 when the term is not retained.
  long index_of(std::string_view term) const;
  std::size_t document_frequency(std::size_t column) const { return document_frequency_[column]; }
  std::size_t corpus_size() const { return corpus_size_; }
  std::size_t min_df() const { return min_df_; }
  const TokenizeOptions& options() const { return options_; }

  /// Rebuilds a vocabulary from stored columns (model deserialization).
  static Vocabulary from_parts(std::vector<std::string> terms, std::vector<std::size_t> document_frequency,
                               std::size_t corpus_size, std::size_t min_df, TokenizeOptions options);

  bool operator==(const Vocabulary& other) const {
    return terms_ == other.terms_ && document_frequency_ == other.document_frequency_ &&
           corpus_size_ == other.corpus_size_ && min_df_ == other.min_df_ && options_.stem == other.options_.stem;
  }

 private:
  friend Vocabulary build_vocabulary(std::span<const std::string>, std::size_t, const TokenizeOptions&);

  std::vector<std::string> terms_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::size_t> document_frequency_;
  std::size_t corpus_size_ = 0;
  std::size_t min_df_ = 1;
  TokenizeOptions options_;
};

/// Throws ValidationError for an empty corpus or min_df of zero.
Vocabulary build_vocabulary(std::span<const std::string> descriptions, std::size_t min_df,
                            const TokenizeOptions& options = {});

/// (1 + ln tf) * (ln((1 + N) / (1 + df)) + 1), L2-normalized. Unknown terms are ignored.
FeatureVector vectorize_tfidf(std::string_view description, const Vocabulary& vocab);

/// CSV rows `id,v0,...,v{d-1}` with an optional `id,...` header; vectors are normalized on load.
std::map<std::string, FeatureVector> load_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, const std::map<std::string, FeatureVector>& embeddings);

/// 1 - cos(a, b), in [0, 2]. Distance is 1 when either vector is zero.
double cosine_distance(const FeatureVector& a, const FeatureVector& b);

/// Deterministic stand-in for imported sentence embeddings: each token maps to
/// a seeded Gaussian direction, a description to the normalized sum of its
/// tokens plus per-id noise. Used to produce fixture embedding files.
std::map<std::string, FeatureVector> hashed_embeddings(
    std::span<const std::pair<std::string, std::string>> id_and_text, std::size_t dimension, std::uint64_t seed,
    double noise = 0.05);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

}  // namespace hal::textfeat
