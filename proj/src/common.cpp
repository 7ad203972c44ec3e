#include "civ/common.hpp"

#include <sstream>

namespace civ {

std::string
format_pos(const SourcePos& pos)
{
  std::ostringstream out;
  out << (pos.file.empty() ? "<input>" : pos.file) << ':' << pos.line << ':' << pos.column;
  return out.str();
}

Error::Error(std::string kind, const std::string& message, SourcePos pos)
  : std::runtime_error(format_pos(pos) + ": " + kind + ": " + message),
    kind_(std::move(kind)),
    message_(message),
    pos_(std::move(pos))
{
}

std::string
Error::diagnostic() const
{
  return what();
}

} // namespace civ
