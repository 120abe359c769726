#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attnfuse {

// Facial feature categories. The enumerator order is the fixed order used
// for fusion inputs and for concatenating global vectors.
enum class Category { EB, EAR, HS, NS, HP, Exp, H };

inline constexpr std::size_t kNumCategories = 7;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::EB, Category::EAR, Category::HS, Category::NS,
    Category::HP, Category::Exp, Category::H};

// Per-frame channel count of a category.
constexpr std::size_t dimension(Category c) {
  switch (c) {
    case Category::EB: return 1;
    case Category::EAR: return 2;
    case Category::HS: return 2;
    case Category::NS: return 2;
    case Category::HP: return 2;
    case Category::Exp: return 16;
    case Category::H: return 1;
  }
  return 0;
}

constexpr std::size_t index_of(Category c) { return static_cast<std::size_t>(c); }

std::string_view name(Category c);
std::optional<Category> parse_category(std::string_view text);

// Parses a comma-separated list such as "EB,Exp". Throws InvalidConfig on an
// unknown or repeated name; the result is sorted into the fixed order.
std::vector<Category> parse_category_list(std::string_view csv);
std::string join_categories(const std::vector<Category>& cats);

// Sum of dimension() over the given categories.
std::size_t total_dimension(const std::vector<Category>& cats);

}  // namespace attnfuse
