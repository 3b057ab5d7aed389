#include "ripplerec/atomic_format.hpp"

#include <unordered_set>

#include "ripplerec/binio.hpp"
#include "ripplerec/text.hpp"

namespace ripplerec {

std::string_view field_kind_name(FieldKind kind) {
  switch (kind) {
    case FieldKind::Token: return "token";
    case FieldKind::TokenSeq: return "token_seq";
    case FieldKind::Float: return "float";
    case FieldKind::FloatSeq: return "float_seq";
  }
  return "?";
}

namespace {

std::optional<FieldKind> kind_from_name(std::string_view name) {
  if (name == "token") return FieldKind::Token;
  if (name == "token_seq") return FieldKind::TokenSeq;
  if (name == "float") return FieldKind::Float;
  if (name == "float_seq") return FieldKind::FloatSeq;
  return std::nullopt;
}

AtomicValue parse_cell(const std::string& raw, const FieldSpec& spec,
                       std::string_view origin, size_t line_no) {
  if (raw.empty()) return AtomicValue{};  // absent
  switch (spec.kind) {
    case FieldKind::Token:
      return AtomicValue(raw);
    case FieldKind::TokenSeq:
      return AtomicValue(split(raw, ' '));
    case FieldKind::Float: {
      const auto v = parse_double(raw);
      if (!v) {
        throw ValueError(std::string(origin) + ":" + std::to_string(line_no) +
                         ": non-numeric value '" + raw + "' in float column '" +
                         spec.name + "'");
      }
      return AtomicValue(*v);
    }
    case FieldKind::FloatSeq: {
      FloatSeq seq;
      for (const auto& part : split(raw, ' ')) {
        const auto v = parse_double(part);
        if (!v) {
          throw ValueError(std::string(origin) + ":" + std::to_string(line_no) +
                           ": non-numeric value '" + part + "' in float_seq column '" +
                           spec.name + "'");
        }
        seq.push_back(*v);
      }
      return AtomicValue(std::move(seq));
    }
  }
  return AtomicValue{};
}

void format_cell(const AtomicValue& value, const FieldSpec& spec, std::string& out) {
  if (!value.present()) return;
  switch (spec.kind) {
    case FieldKind::Token:
      out += value.token();
      break;
    case FieldKind::TokenSeq: {
      bool first = true;
      for (const auto& t : value.tokens()) {
        if (!first) out += ' ';
        out += t;
        first = false;
      }
      break;
    }
    case FieldKind::Float:
      out += format_double(value.number());
      break;
    case FieldKind::FloatSeq: {
      bool first = true;
      for (double v : value.numbers()) {
        if (!first) out += ' ';
        out += format_double(v);
        first = false;
      }
      break;
    }
  }
}

}  // namespace

std::optional<size_t> AtomicTable::column(std::string_view name) const {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].name == name) return i;
  }
  return std::nullopt;
}

const AtomicValue* AtomicTable::cell(size_t row, std::string_view name) const {
  const auto col = column(name);
  if (!col) return nullptr;
  return &rows[row][*col];
}

std::vector<std::string> required_columns(AtomicFileKind kind) {
  switch (kind) {
    case AtomicFileKind::Inter: return {"user_id", "item_id", "is_click"};
    case AtomicFileKind::User: return {"user_id"};
    case AtomicFileKind::Item: return {"item_id"};
  }
  return {};
}

AtomicTable parse_atomic_text(std::string_view text, AtomicFileKind expected,
                              std::string_view origin) {
  AtomicTable table;

  size_t pos = 0;
  size_t line_no = 0;
  const auto next_line = [&](std::string& line) -> bool {
    if (pos >= text.size()) return false;
    const size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      line.assign(text.substr(pos));
      pos = text.size();
    } else {
      line.assign(text.substr(pos, nl - pos));
      pos = nl + 1;
    }
    ++line_no;
    return true;
  };

  std::string line;
  if (!next_line(line) || line.empty()) {
    throw SchemaError(std::string(origin) + ": empty file, expected a header line");
  }

  std::unordered_set<std::string> seen;
  for (const auto& col : split(line, '\t')) {
    const size_t colon = col.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw SchemaError(std::string(origin) + ": header column '" + col +
                        "' is not of the form name:kind");
    }
    FieldSpec spec;
    spec.name = col.substr(0, colon);
    const std::string kind_name = col.substr(colon + 1);
    const auto kind = kind_from_name(kind_name);
    if (!kind) {
      throw SchemaError(std::string(origin) + ": column '" + spec.name +
                        "' has unknown kind '" + kind_name + "'");
    }
    spec.kind = *kind;
    if (!seen.insert(spec.name).second) {
      throw SchemaError(std::string(origin) + ": duplicate column name '" +
                        spec.name + "'");
    }
    table.fields.push_back(std::move(spec));
  }

  for (const auto& required : required_columns(expected)) {
    if (!seen.contains(required)) {
      throw SchemaError(std::string(origin) + ": missing required column '" +
                        required + "'");
    }
  }

  while (next_line(line)) {
    if (line.empty() && pos >= text.size()) break;  // trailing newline
    const auto cells = split(line, '\t');
    if (cells.size() != table.fields.size()) {
      throw RowError(std::string(origin) + ":" + std::to_string(line_no) +
                     ": row has " + std::to_string(cells.size()) +
                     " columns, header has " + std::to_string(table.fields.size()));
    }
    std::vector<AtomicValue> row;
    row.reserve(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
      row.push_back(parse_cell(cells[i], table.fields[i], origin, line_no));
    }
    table.rows.push_back(std::move(row));
  }

  return table;
}

AtomicTable parse_atomic_file(const std::filesystem::path& path, AtomicFileKind expected) {
  return parse_atomic_text(read_file(path), expected, path.string());
}

std::string write_atomic_text(const AtomicTable& table) {
  std::string out;
  bool first = true;
  for (const auto& spec : table.fields) {
    if (!first) out += '\t';
    out += spec.name;
    out += ':';
    out += field_kind_name(spec.kind);
    first = false;
  }
  out += '\n';
  for (const auto& row : table.rows) {
    first = true;
    for (size_t i = 0; i < row.size(); ++i) {
      if (!first) out += '\t';
      format_cell(row[i], table.fields[i], out);
      first = false;
    }
    out += '\n';
  }
  return out;
}

void write_atomic_file(const AtomicTable& table, const std::filesystem::path& path) {
  write_file(path, write_atomic_text(table));
}

}  // namespace ripplerec
