#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bugforge {

/// A byte range in a physical file, annotated with the logical location the
/// preprocessor line markers assign to it. Lines and columns are 1-based; the
/// end position is inclusive of the last character.
struct SourceSpan {
  std::string file;
  int start_line = 0;
  int start_col = 0;
  int end_line = 0;
  int end_col = 0;
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;

  [[nodiscard]] std::size_t size() const { return byte_end - byte_start; }
  [[nodiscard]] bool valid() const { return byte_start < byte_end; }
  [[nodiscard]] bool contains(const SourceSpan &other) const {
    return byte_start <= other.byte_start && other.byte_end <= byte_end;
  }
  [[nodiscard]] bool overlaps(const SourceSpan &other) const {
    return byte_start < other.byte_end && other.byte_start < byte_end;
  }
  [[nodiscard]] std::string_view text(std::string_view source) const {
    return source.substr(byte_start, byte_end - byte_start);
  }

  friend bool operator==(const SourceSpan &, const SourceSpan &) = default;
};

/// Maps byte offsets of one physical file to logical (file, line, column)
/// positions, honoring `# <n> "file"` and `#line` markers.
class LineMap {
public:
  LineMap() = default;
  LineMap(std::string physical_path, std::string_view text);

  /// Records that physical line `physical_line + 1` is logical `line` of `file`.
  void add_marker(int physical_line, int line, std::string file);

  [[nodiscard]] int physical_line(std::size_t offset) const;
  [[nodiscard]] int column(std::size_t offset) const;

  /// Builds a span for [begin, end) with logical positions.
  [[nodiscard]] SourceSpan span(std::size_t begin, std::size_t end) const;

private:
  struct Marker {
    int physical_line;
    int logical_line;
    std::string file;
  };

  [[nodiscard]] std::pair<std::string, int> logical(int physical) const;

  std::string path_;
  std::vector<std::size_t> line_starts_;
  std::vector<Marker> markers_;
};

} // namespace bugforge
