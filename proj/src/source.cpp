#include "bugforge/source.hpp"

#include <algorithm>

namespace bugforge {

LineMap::LineMap(std::string physical_path, std::string_view text)
    : path_(std::move(physical_path)) {
  line_starts_.push_back(0);
  for (std::size_t i = 0; i < text.size(); ++i)
    if (text[i] == '\n')
      line_starts_.push_back(i + 1);
}

void LineMap::add_marker(int physical_line, int line, std::string file) {
  markers_.push_back({physical_line, line, std::move(file)});
}

int LineMap::physical_line(std::size_t offset) const {
  auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
  return static_cast<int>(it - line_starts_.begin());
}

int LineMap::column(std::size_t offset) const {
  int line = physical_line(offset);
  return static_cast<int>(offset - line_starts_[line - 1]) + 1;
}

std::pair<std::string, int> LineMap::logical(int physical) const {
  // Markers are appended in file order, so the last one at or above the line wins.
  const Marker *active = nullptr;
  for (const auto &m : markers_) {
    if (m.physical_line < physical)
      active = &m;
    else
      break;
  }
  if (!active)
    return {path_, physical};
  return {active->file, active->logical_line + (physical - active->physical_line - 1)};
}

SourceSpan LineMap::span(std::size_t begin, std::size_t end) const {
  SourceSpan s;
  s.byte_start = begin;
  s.byte_end = end;
  std::size_t last = end > begin ? end - 1 : begin;
  int pl_start = physical_line(begin);
  int pl_end = physical_line(last);
  auto [file, line] = logical(pl_start);
  auto [end_file, end_line] = logical(pl_end);
  (void)end_file;
  s.file = std::move(file);
  s.start_line = line;
  s.end_line = end_line;
  s.start_col = column(begin);
  s.end_col = column(last);
  return s;
}

} // namespace bugforge
