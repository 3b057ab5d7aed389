#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ripplerec/errors.hpp"

namespace ripplerec {

// Recbole atomic files: UTF-8, LF line endings, tab-separated columns,
// `name:kind` headers. Sequence cells use a single space as separator.
// There is no quoting or escaping; an empty cell encodes an absent value.

enum class FieldKind { Token, TokenSeq, Float, FloatSeq };

std::string_view field_kind_name(FieldKind kind);

struct FieldSpec {
  std::string name;
  FieldKind kind;

  bool operator==(const FieldSpec&) const = default;
};

using TokenSeq = std::vector<std::string>;
using FloatSeq = std::vector<double>;

// One cell. monostate = absent.
class AtomicValue {
public:
  AtomicValue() = default;
  explicit AtomicValue(std::string token) : v_(std::move(token)) {}
  explicit AtomicValue(TokenSeq tokens) : v_(std::move(tokens)) {}
  explicit AtomicValue(double number) : v_(number) {}
  explicit AtomicValue(FloatSeq numbers) : v_(std::move(numbers)) {}

  bool present() const { return !std::holds_alternative<std::monostate>(v_); }
  const std::string& token() const { return std::get<std::string>(v_); }
  const TokenSeq& tokens() const { return std::get<TokenSeq>(v_); }
  double number() const { return std::get<double>(v_); }
  const FloatSeq& numbers() const { return std::get<FloatSeq>(v_); }

  bool operator==(const AtomicValue&) const = default;

private:
  std::variant<std::monostate, std::string, TokenSeq, double, FloatSeq> v_;
};

enum class AtomicFileKind { Inter, User, Item };

struct AtomicTable {
  std::vector<FieldSpec> fields;
  std::vector<std::vector<AtomicValue>> rows;

  std::optional<size_t> column(std::string_view name) const;
  const AtomicValue* cell(size_t row, std::string_view name) const;
};

// Throws SchemaError (unknown kind, missing key column, malformed header),
// RowError (arity mismatch, 1-based line number counting the header), or
// ValueError (non-numeric content in a float column).
AtomicTable parse_atomic_text(std::string_view text, AtomicFileKind expected,
                              std::string_view origin = "<memory>");
AtomicTable parse_atomic_file(const std::filesystem::path& path, AtomicFileKind expected);

std::string write_atomic_text(const AtomicTable& table);
void write_atomic_file(const AtomicTable& table, const std::filesystem::path& path);

// The key column each file kind must carry.
std::vector<std::string> required_columns(AtomicFileKind kind);

}  // namespace ripplerec
