// Copyright 2026 The PoliFed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "polifed/policy/parser.h"

#include <charconv>
#include <cmath>
#include <string>

#include "polifed/common/error.h"

namespace polifed::policy {
namespace {

bool IsIdentStart(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool IsIdentChar(char c) { return IsIdentStart(c) || (c >= '0' && c <= '9'); }
bool IsDigit(char c) { return c >= '0' && c <= '9'; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Policy ParseWholePolicy() {
    SkipSpace();
    if (AtEnd()) throw ParseError("empty policy", pos_);
    Policy p = ParseUnion();
    SkipSpace();
    if (!AtEnd()) {
      if (Peek() == ')') throw ParseError("unbalanced ')'", pos_);
      throw ParseError(std::string("unexpected '") + Peek() + "'", pos_);
    }
    return p;
  }

  CommandInvocation ParseWholeInvocation() {
    SkipSpace();
    auto [name, params] = ParseCall();
    SkipSpace();
    if (!AtEnd()) {
      throw ParseError(std::string("unexpected '") + Peek() + "'", pos_);
    }
    return CommandInvocation(std::move(name), std::move(params));
  }

 private:
  bool AtEnd() const { return pos_ >= text_.size(); }
  char Peek() const { return AtEnd() ? '\0' : text_[pos_]; }

  void SkipSpace() {
    while (!AtEnd() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                        text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool Consume(char c) {
    SkipSpace();
    if (Peek() != c) return false;
    ++pos_;
    return true;
  }

  void Expect(char c) {
    if (!Consume(c)) {
      if (AtEnd()) {
        throw ParseError(std::string("expected '") + c + "' but input ended",
                         pos_);
      }
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Policy ParseUnion() {
    Policy p = ParseIntersect();
    while (Consume('+')) p = Policy::RawUnion(p, ParseIntersect());
    return p;
  }

  Policy ParseIntersect() {
    Policy p = ParseSeq();
    while (Consume('&')) p = Policy::RawIntersect(p, ParseSeq());
    return p;
  }

  Policy ParseSeq() {
    Policy p = ParseUnary();
    while (Consume('.')) p = Policy::RawSeq(p, ParseUnary());
    return p;
  }

  Policy ParseUnary() {
    if (Consume('!')) return Policy::RawNeg(ParseUnary());
    Policy p = ParseAtom();
    while (Consume('*')) p = Policy::RawStar(p);
    return p;
  }

  Policy ParseAtom() {
    SkipSpace();
    if (AtEnd()) throw ParseError("expected policy but input ended", pos_);
    char c = Peek();
    if (c == '(') {
      std::size_t open = pos_;
      ++pos_;
      Policy p = ParseUnion();
      SkipSpace();
      if (AtEnd()) throw ParseError("unbalanced '('", open);
      Expect(')');
      return p;
    }
    if (c == '0' || c == '1') {
      if (pos_ + 1 < text_.size() && IsIdentChar(text_[pos_ + 1])) {
        throw ParseError("invalid literal policy", pos_);
      }
      ++pos_;
      return c == '0' ? Policy::Zero() : Policy::One();
    }
    if (IsIdentStart(c)) {
      auto [name, params] = ParseCall();
      return Policy::Command(CommandPattern{std::move(name), std::move(params)});
    }
    if (c == ')') throw ParseError("unbalanced ')'", pos_);
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  std::string ParseIdent() {
    SkipSpace();
    if (!IsIdentStart(Peek())) throw ParseError("expected identifier", pos_);
    std::size_t start = pos_;
    while (!AtEnd() && IsIdentChar(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::pair<std::string, ParamMap> ParseCall() {
    std::string name = ParseIdent();
    ParamMap params;
    SkipSpace();
    if (Peek() != '(') return {std::move(name), std::move(params)};
    std::size_t open = pos_;
    ++pos_;
    if (!Consume(')')) {
      do {
        std::size_t key_pos = (SkipSpace(), pos_);
        std::string key = ParseIdent();
        Expect('=');
        ParamValue value = ParseValue();
        if (!params.emplace(std::move(key), std::move(value)).second) {
          throw ParseError("duplicate parameter", key_pos);
        }
      } while (Consume(','));
      SkipSpace();
      if (AtEnd()) throw ParseError("unbalanced '('", open);
      Expect(')');
    }
    return {std::move(name), std::move(params)};
  }

  ParamValue ParseValue() {
    SkipSpace();
    if (Peek() != '[') return ParamValue(ParseLiteral());
    std::size_t open = pos_;
    ++pos_;
    std::vector<Literal> items;
    if (!Consume(']')) {
      do {
        items.push_back(ParseLiteral());
      } while (Consume(','));
      SkipSpace();
      if (AtEnd()) throw ParseError("unbalanced '['", open);
      Expect(']');
    }
    return ParamValue::List(std::move(items));
  }

  Literal ParseLiteral() {
    SkipSpace();
    if (AtEnd()) throw ParseError("expected literal but input ended", pos_);
    char c = Peek();
    if (c == '\'' || c == '"') return Literal::String(ParseQuoted(c));
    if (IsDigit(c) || c == '-' || c == '+') return Literal::Number(ParseNumber());
    if (IsIdentStart(c)) return Literal::String(ParseIdent());
    throw ParseError(std::string("unexpected '") + c + "' in literal", pos_);
  }

  std::string ParseQuoted(char quote) {
    std::size_t open = pos_++;
    std::string out;
    while (true) {
      if (AtEnd()) throw ParseError("unterminated string", open);
      char c = text_[pos_++];
      if (c == quote) return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (AtEnd()) throw ParseError("unterminated string", open);
      char e = text_[pos_++];
      switch (e) {
        case '\\': out += '\\'; break;
        case '\'': out += '\''; break;
        case '"': out += '"'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default:
          throw ParseError(std::string("unknown escape '\\") + e + "'",
                           pos_ - 2);
      }
    }
  }

  double ParseNumber() {
    std::size_t start = pos_;
    if (Peek() == '+' || Peek() == '-') ++pos_;
    while (!AtEnd() && (IsDigit(text_[pos_]) || text_[pos_] == '.' ||
                        text_[pos_] == 'e' || text_[pos_] == 'E' ||
                        ((text_[pos_] == '-' || text_[pos_] == '+') &&
                         (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
      ++pos_;
    }
    std::string_view digits = text_.substr(start, pos_ - start);
    if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
    double value = 0;
    auto [end, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || end != digits.data() + digits.size() ||
        !std::isfinite(value)) {
      throw ParseError("malformed number", start);
    }
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Policy ParsePolicy(std::string_view text) {
  return Parser(text).ParseWholePolicy();
}

CommandInvocation ParseInvocation(std::string_view text) {
  return Parser(text).ParseWholeInvocation();
}

std::vector<CommandInvocation> ParseTrace(std::string_view text) {
  std::vector<CommandInvocation> out;
  int depth = 0;
  char quote = 0;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    std::string_view piece = text.substr(start, end - start);
    std::size_t first = piece.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
      throw ParseError("empty trace element", start);
    }
    try {
      out.push_back(ParseInvocation(piece));
    } catch (const ParseError& e) {
      throw ParseError("bad trace element '" + std::string(piece) + "'",
                       start + e.offset());
    }
  };
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') quote = c;
    else if (c == '(' || c == '[') ++depth;
    else if (c == ')' || c == ']') --depth;
    else if (c == ',' && depth == 0) {
      flush(i);
      start = i + 1;
    }
  }
  flush(text.size());
  return out;
}

}  // namespace polifed::policy
