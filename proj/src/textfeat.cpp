#include "hal/textfeat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "hal/csv.hpp"
#include "hal/errors.hpp"
#include "hal/rng.hpp"

namespace hal::textfeat {

extern const char* const kStopWordsResource;  // generated from resources/stopwords.txt

double FeatureVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

bool FeatureVector::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

FeatureVector normalized(std::vector<double> values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  if (sum > 0.0) {
    const double n = std::sqrt(sum);
    for (double& v : values) v /= n;
  }
  return FeatureVector{std::move(values)};
}

const std::vector<std::string>& stop_words() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> out;
    std::istringstream in(kStopWordsResource);
    std::string line;
    while (std::getline(in, line)) {
      auto w = csv::trim(line);
      if (!w.empty() && !w.starts_with('#')) out.push_back(std::move(w));
    }
    std::sort(out.begin(), out.end());
    return out;
  }();
  return words;
}

bool is_stop_word(std::string_view token) {
  const auto& words = stop_words();
  return std::binary_search(words.begin(), words.end(), token);
}

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// digits(.digits)+
bool is_version(std::string_view s) {
  if (s.empty() || s.front() == '.' || s.back() == '.') return false;
  bool dot = false;
  char prev = 0;
  for (char c : s) {
    if (c == '.') {
      if (prev == '.') return false;
      dot = true;
    } else if (c < '0' || c > '9') {
      return false;
    }
    prev = c;
  }
  return dot;
}

}  // namespace

std::string light_stem(std::string_view token) {
  std::string t(token);
  auto strip = [&](std::string_view suffix, std::size_t keep) {
    if (t.size() >= suffix.size() + keep && t.ends_with(suffix)) {
      t.resize(t.size() - suffix.size());
      return true;
    }
    return false;
  };
  if (strip("ies", 2)) {
    t += "y";
  } else if (!t.ends_with("ss") && !t.ends_with("us") && !t.ends_with("is")) {
    strip("s", 3);
  }
  strip("ing", 3) || strip("ed", 3) || strip("ly", 3);
  return t;
}

std::vector<std::string> tokenize(std::string_view description, const TokenizeOptions& options) {
  std::vector<std::string> tokens;
  auto emit = [&](std::string_view piece) {
    if (piece.size() < 2 || is_digits(piece)) return;
    std::string tok(piece);
    if (is_stop_word(tok)) return;
    if (options.stem && !is_version(tok)) {
      tok = light_stem(tok);
      if (tok.size() < 2) return;
    }
    tokens.push_back(std::move(tok));
  };

  std::string chunk;
  auto flush = [&] {
    const auto first = chunk.find_first_not_of('.');
    if (first == std::string::npos) {
      chunk.clear();
      return;
    }
    chunk = chunk.substr(first, chunk.find_last_not_of('.') - first + 1);
    if (is_version(chunk)) {
      emit(chunk);
    } else {
      std::string_view rest = chunk;
      while (!rest.empty()) {
        const auto dot = rest.find('.');
        emit(rest.substr(0, dot));
        if (dot == std::string_view::npos) break;
        rest.remove_prefix(dot + 1);
      }
    }
    chunk.clear();
  };
  for (char ch : description) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c) || c == '.') {
      chunk.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

long Vocabulary::index_of(std::string_view term) const {
  auto it = index_.find(term);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> terms, std::vector<std::size_t> document_frequency,
                                  std::size_t corpus_size, std::size_t min_df, TokenizeOptions options) {
  if (terms.size() != document_frequency.size()) throw FormatError("vocabulary: term/frequency length mismatch");
  Vocabulary v;
  v.terms_ = std::move(terms);
  v.document_frequency_ = std::move(document_frequency);
  v.corpus_size_ = corpus_size;
  v.min_df_ = min_df;
  v.options_ = options;
  for (std::size_t i = 0; i < v.terms_.size(); ++i) {
    if (i > 0 && !(v.terms_[i - 1] < v.terms_[i])) throw FormatError("vocabulary: terms not strictly ordered");
    v.index_.emplace(v.terms_[i], i);
  }
  return v;
}

Vocabulary build_vocabulary(std::span<const std::string> descriptions, std::size_t min_df,
                            const TokenizeOptions& options) {
  if (descriptions.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
  if (min_df == 0) throw ValidationError("min_df must be at least 1");
  std::map<std::string, std::size_t> df;
  for (const auto& text : descriptions) {
    auto tokens = tokenize(text, options);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[std::move(t)];
  }
  Vocabulary v;
  v.corpus_size_ = descriptions.size();
  v.min_df_ = min_df;
  v.options_ = options;
  for (auto& [term, count] : df) {
    if (count < min_df) continue;
    v.index_.emplace(term, v.terms_.size());
    v.terms_.push_back(term);
    v.document_frequency_.push_back(count);
  }
  return v;
}

FeatureVector vectorize_tfidf(std::string_view description, const Vocabulary& vocab) {
  std::map<std::size_t, std::size_t> tf;
  for (const auto& tok : tokenize(description, vocab.options())) {
    const auto col = vocab.index_of(tok);
    if (col >= 0) ++tf[static_cast<std::size_t>(col)];
  }
  std::vector<double> values(vocab.size(), 0.0);
  const double n = static_cast<double>(vocab.corpus_size());
  for (const auto& [col, count] : tf) {
    const double df = static_cast<double>(vocab.document_frequency(col));
    const double idf = std::log((1.0 + n) / (1.0 + df)) + 1.0;
    values[col] = (1.0 + std::log(static_cast<double>(count))) * idf;
  }
  return normalized(std::move(values));
}

std::map<std::string, FeatureVector> load_embeddings(std::istream& in) {
  csv::Reader reader(in);
  std::map<std::string, FeatureVector> out;
  std::size_t dimension = 0;
  bool first = true;
  while (auto row = reader.next()) {
    if (row->size() == 1 && csv::trim((*row)[0]).empty()) continue;
    if (first && csv::trim((*row)[0]) == "id") {
      first = false;
      continue;
    }
    const auto line = reader.line();
    const std::size_t d = row->size() - 1;
    if (d == 0) throw FormatError(fmt::format("line {}: embedding row has no values", line));
    if (dimension == 0) dimension = d;
    first = false;
    if (d != dimension) {
      throw FormatError(fmt::format("line {}: dimension {} differs from {} in earlier rows", line, d, dimension));
    }
    std::vector<double> values(d);
    for (std::size_t i = 0; i < d; ++i) {
      const auto cell = csv::trim((*row)[i + 1]);
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), values[i]);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(values[i])) {
        throw FormatError(fmt::format("line {}: non-numeric value '{}'", line, (*row)[i + 1]));
      }
    }
    auto id = csv::trim((*row)[0]);
    if (!out.emplace(id, normalized(std::move(values))).second) {
      throw FormatError(fmt::format("line {}: duplicate embedding id {}", line, id));
    }
  }
  return out;
}

void write_embeddings(std::ostream& out, const std::map<std::string, FeatureVector>& embeddings) {
  if (embeddings.empty()) return;
  const auto d = embeddings.begin()->second.dimension();
  out << "id";
  for (std::size_t i = 0; i < d; ++i) out << ",v" << i;
  out << '\n';
  for (const auto& [id, vec] : embeddings) {
    out << id;
    for (double v : vec.values) out << fmt::format(",{}", v);
    out << '\n';
  }
}

double cosine_distance(const FeatureVector& a, const FeatureVector& b) {
  if (a.dimension() != b.dimension()) {
    throw ValidationError(fmt::format("dimension mismatch: {} vs {}", a.dimension(), b.dimension()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(d, 0.0, 2.0);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::map<std::string, FeatureVector> hashed_embeddings(
    std::span<const std::pair<std::string, std::string>> id_and_text, std::size_t dimension, std::uint64_t seed,
    double noise) {
  if (dimension == 0) throw ValidationError("embedding dimension must be positive");
  std::map<std::string, std::vector<double>> token_cache;
  auto direction = [&](const std::string& token) -> const std::vector<double>& {
    auto [it, inserted] = token_cache.try_emplace(token);
    if (inserted) {
      Rng rng(mix_seed(seed, fnv1a(token)));
      it->second.resize(dimension);
      for (double& v : it->second) v = rng.normal();
    }
    return it->second;
  };

  std::map<std::string, FeatureVector> out;
  for (const auto& [id, text] : id_and_text) {
    std::vector<double> sum(dimension, 0.0);
    for (const auto& tok : tokenize(text)) {
      const auto& dir = direction(tok);
      for (std::size_t i = 0; i < dimension; ++i) sum[i] += dir[i];
    }
    auto base = normalized(std::move(sum));
    Rng rng(mix_seed(seed ^ 0x5bd1e995ULL, fnv1a(id)));
    const double scale = noise / std::sqrt(static_cast<double>(dimension));
    for (double& v : base.values) v += scale * rng.normal();
    out.emplace(id, normalized(std::move(base.values)));
  }
  return out;
}

}  // namespace hal::textfeat
