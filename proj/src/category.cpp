#include "attnfuse/category.hpp"

#include <algorithm>

#include "attnfuse/error.hpp"

namespace attnfuse {

std::string_view name(Category c) {
  switch (c) {
    case Category::EB: return "EB";
    case Category::EAR: return "EAR";
    case Category::HS: return "HS";
    case Category::NS: return "NS";
    case Category::HP: return "HP";
    case Category::Exp: return "Exp";
    case Category::H: return "H";
  }
  return "?";
}

std::optional<Category> parse_category(std::string_view text) {
  for (Category c : kAllCategories) {
    if (name(c) == text) return c;
  }
  return std::nullopt;
}

std::vector<Category> parse_category_list(std::string_view csv) {
  std::vector<Category> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    if (comma == std::string_view::npos) comma = csv.size();
    std::string_view token = csv.substr(pos, comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token.empty()) throw Error(ErrorKind::InvalidConfig, "empty category name in list '" + std::string(csv) + "'");
    auto cat = parse_category(token);
    if (!cat) throw Error(ErrorKind::InvalidConfig, "unknown category '" + std::string(token) + "'");
    if (std::find(out.begin(), out.end(), *cat) != out.end()) {
      throw Error(ErrorKind::InvalidConfig, "category '" + std::string(token) + "' listed twice");
    }
    out.push_back(*cat);
    pos = comma + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string join_categories(const std::vector<Category>& cats) {
  std::string s;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    if (i) s += ',';
    s += name(cats[i]);
  }
  return s;
}

std::size_t total_dimension(const std::vector<Category>& cats) {
  std::size_t d = 0;
  for (Category c : cats) d += dimension(c);
  return d;
}

}  // namespace attnfuse
