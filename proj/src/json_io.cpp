#include "json_io.hpp"

#include <iterator>
#include <vector>

#include "vantage/errors.hpp"

namespace vantage::detail {

namespace {

using nlohmann::json;

// Input iterator that counts the newlines it steps over.
struct LineCountingIterator {
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  std::size_t* line = nullptr;

  reference operator*() const { return *p; }
  LineCountingIterator& operator++() {
    if (*p == '\n') ++*line;
    ++p;
    return *this;
  }
  LineCountingIterator operator++(int) {
    LineCountingIterator old = *this;
    ++*this;
    return old;
  }
  bool operator==(const LineCountingIterator& o) const { return p == o.p; }
  bool operator!=(const LineCountingIterator& o) const { return p != o.p; }
};

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

class LocatingSax : public nlohmann::json_sax<json> {
 public:
  LocatingSax(LocatedJson& out, const std::size_t& line) : out_(out), line_(line) {}

  bool null() override { return put(json(nullptr)); }
  bool boolean(bool v) override { return put(json(v)); }
  bool number_integer(number_integer_t v) override { return put(json(v)); }
  bool number_unsigned(number_unsigned_t v) override { return put(json(v)); }
  bool number_float(number_float_t v, const string_t&) override { return put(json(v)); }
  bool string(string_t& v) override { return put(json(v)); }
  bool binary(binary_t& v) override { return put(json::binary(v)); }

  bool start_object(std::size_t) override { return open(json::object()); }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override { return open(json::array()); }
  bool end_array() override { return close(); }
  bool key(string_t& k) override {
    key_ = k;
    return true;
  }

  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
    error_ = ex.what();
    return false;
  }

  const std::string& error() const { return error_; }

 private:
  json* place(json v, std::string& ptr) {
    if (stack_.empty()) {
      out_.doc = std::move(v);
      ptr.clear();
      return &out_.doc;
    }
    json& parent = *stack_.back();
    if (parent.is_object()) {
      ptr = pointers_.back() + "/" + escape_token(key_);
      json& slot = parent[key_];
      slot = std::move(v);
      return &slot;
    }
    ptr = pointers_.back() + "/" + std::to_string(parent.size());
    parent.push_back(std::move(v));
    return &parent.back();
  }

  bool put(json v) {
    std::string ptr;
    place(std::move(v), ptr);
    out_.lines.emplace(ptr, line_);
    return true;
  }

  bool open(json v) {
    std::string ptr;
    json* slot = place(std::move(v), ptr);
    out_.lines.emplace(ptr, line_);
    stack_.push_back(slot);
    pointers_.push_back(ptr);
    return true;
  }

  bool close() {
    stack_.pop_back();
    pointers_.pop_back();
    return true;
  }

  LocatedJson& out_;
  const std::size_t& line_;
  std::vector<json*> stack_;
  std::vector<std::string> pointers_;
  std::string key_;
  std::string error_;
};

}  // namespace

std::size_t LocatedJson::line_of(std::string pointer) const {
  while (true) {
    const auto it = lines.find(pointer);
    if (it != lines.end()) return it->second;
    if (pointer.empty()) return 0;
    pointer.erase(pointer.rfind('/'));
  }
}

LocatedJson parse_located(const std::string& text, const std::string& source) {
  LocatedJson out;
  std::size_t line = 1;
  LocatingSax sax(out, line);
  LineCountingIterator first{text.data(), &line};
  LineCountingIterator last{text.data() + text.size(), &line};
  if (!json::sax_parse(first, last, &sax)) throw ParseError(source, line, sax.error());
  return out;
}

}  // namespace vantage::detail
