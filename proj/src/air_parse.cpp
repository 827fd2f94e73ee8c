#include <cctype>
#include <sstream>

#include "babelview/air.hpp"
#include "babelview/defaults.hpp"

namespace bv {

AirError::AirError(const std::string& msg, SourcePos pos)
    : std::runtime_error(pos.line > 0 ? std::to_string(pos.line) + ":" + std::to_string(pos.col) +
                                            ": " + msg
                                      : msg),
      where(pos) {}

std::string Sig::str() const {
  return cls + "." + name + "/" + std::to_string(arity);
}

Sig Sig::parse(const std::string& text) {
  auto dot = text.find('.');
  auto slash = text.rfind('/');
  if (dot == std::string::npos || slash == std::string::npos || slash < dot)
    throw AirError("malformed signature: " + text);
  Sig s;
  s.cls = text.substr(0, dot);
  s.name = text.substr(dot + 1, slash - dot - 1);
  s.arity = std::stoi(text.substr(slash + 1));
  return s;
}

std::string Site::str() const {
  return method.str() + "#" + std::to_string(index);
}

Site Site::parse(const std::string& text) {
  auto hash = text.rfind('#');
  if (hash == std::string::npos) throw AirError("malformed site: " + text);
  Site s;
  s.method = Sig::parse(text.substr(0, hash));
  s.index = std::stoi(text.substr(hash + 1));
  return s;
}

std::vector<std::string> MethodDef::entry_locals() const {
  std::vector<std::string> out;
  if (!is_static) out.push_back("this");
  for (const auto& p : params) out.push_back(p.name);
  return out;
}

bool is_generated_class(const std::string& name) {
  static const std::string suffix = "$BabelView";
  return name.size() >= suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

namespace {

enum class Tok { Ident, Int, Str, Annot, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long long ival = 0;
  SourcePos pos;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.pos = pos();
    if (i_ >= text_.size()) return t;
    char c = text_[i_];
    if (c == '"') return lex_string(t);
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_ + 1]))))
      return lex_int(t);
    if (c == '@') {
      advance();
      if (!ident_start(cur())) throw AirError("annotation name expected", t.pos);
      t.kind = Tok::Annot;
      t.text = lex_ident_text();
      return t;
    }
    if (c == '<') return lex_angle_ident(t);
    if (ident_start(c)) {
      t.kind = Tok::Ident;
      t.text = lex_ident_text();
      return t;
    }
    static const std::string punct = "{}()=;:,./";
    if (punct.find(c) != std::string::npos) {
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      advance();
      return t;
    }
    throw AirError(std::string("unexpected character '") + c + "'", t.pos);
  }

 private:
  char cur() const { return i_ < text_.size() ? text_[i_] : '\0'; }

  void advance() {
    if (i_ >= text_.size()) return;
    if (text_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  SourcePos pos() const { return {line_, col_}; }

  void skip_ws() {
    for (;;) {
      while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) advance();
      if (i_ + 1 < text_.size() && text_[i_] == '/' && text_[i_ + 1] == '/') {
        while (i_ < text_.size() && text_[i_] != '\n') advance();
        continue;
      }
      if (i_ < text_.size() && text_[i_] == '#') {
        while (i_ < text_.size() && text_[i_] != '\n') advance();
        continue;
      }
      break;
    }
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
  }

  std::string lex_ident_text() {
    std::string out;
    while (i_ < text_.size() && ident_char(text_[i_])) {
      out += text_[i_];
      advance();
    }
    return out;
  }

  Token lex_angle_ident(Token t) {
    // Names like <init> used for constructors.
    std::string out = "<";
    advance();
    while (i_ < text_.size() && text_[i_] != '>') {
      if (!ident_char(text_[i_])) throw AirError("malformed <...> name", t.pos);
      out += text_[i_];
      advance();
    }
    if (i_ >= text_.size()) throw AirError("unterminated <...> name", t.pos);
    out += '>';
    advance();
    t.kind = Tok::Ident;
    t.text = out;
    return t;
  }

  Token lex_int(Token t) {
    std::string out;
    if (cur() == '-') {
      out += '-';
      advance();
    }
    while (i_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_]))) {
      out += text_[i_];
      advance();
    }
    t.kind = Tok::Int;
    t.text = out;
    t.ival = std::stoll(out);
    return t;
  }

  Token lex_string(Token t) {
    advance();  // opening quote
    std::string out;
    while (i_ < text_.size() && text_[i_] != '"') {
      char c = text_[i_];
      if (c == '\n') throw AirError("unterminated string literal", t.pos);
      if (c == '\\') {
        advance();
        char e = cur();
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          default: throw AirError("unknown escape in string literal", t.pos);
        }
        advance();
        continue;
      }
      out += c;
      advance();
    }
    if (i_ >= text_.size()) throw AirError("unterminated string literal", t.pos);
    advance();  // closing quote
    t.kind = Tok::Str;
    t.text = out;
    return t;
  }

  const std::string& text_;
  size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) {
    cur_ = lex_.next();
    ahead_ = lex_.next();
  }

  AirDocument parse_document() {
    AirDocument doc;
    if (is_ident("manifest")) doc.manifest = parse_manifest();
    while (cur_.kind != Tok::End) doc.classes.push_back(parse_class());
    return doc;
  }

 private:
  Token cur_;
  Token ahead_;
  Lexer lex_;

  void bump() {
    cur_ = ahead_;
    ahead_ = lex_.next();
  }

  bool is_ident(const std::string& s) const { return cur_.kind == Tok::Ident && cur_.text == s; }
  bool is_punct(const std::string& s) const { return cur_.kind == Tok::Punct && cur_.text == s; }

  [[noreturn]] void fail(const std::string& msg) const { throw AirError(msg, cur_.pos); }

  void expect_punct(const std::string& s) {
    if (!is_punct(s)) fail("expected '" + s + "'");
    bump();
  }

  void expect_ident(const std::string& s) {
    if (!is_ident(s)) fail("expected '" + s + "'");
    bump();
  }

  std::string take_name() {
    if (cur_.kind != Tok::Ident) fail("name expected");
    std::string out = cur_.text;
    bump();
    return out;
  }

  long long take_int() {
    if (cur_.kind != Tok::Int) fail("integer expected");
    long long v = cur_.ival;
    bump();
    return v;
  }

  std::string take_string() {
    if (cur_.kind != Tok::Str) fail("string literal expected");
    std::string out = cur_.text;
    bump();
    return out;
  }

  Sig parse_sig() {
    Sig s;
    s.cls = take_name();
    expect_punct(".");
    s.name = take_name();
    expect_punct("/");
    s.arity = static_cast<int>(take_int());
    if (s.arity < 0) fail("negative arity");
    return s;
  }

  Manifest parse_manifest() {
    Manifest m;
    m.present = true;
    expect_ident("manifest");
    expect_punct("{");
    expect_ident("target_api");
    expect_punct("=");
    m.target_api = static_cast<int>(take_int());
    expect_punct(";");
    while (!is_punct("}")) {
      if (is_ident("entry")) {
        bump();
        m.entry_points.push_back(parse_sig());
        expect_punct(";");
      } else if (is_ident("permission")) {
        bump();
        m.permissions.push_back(take_string());
        expect_punct(";");
      } else {
        fail("expected entry, permission, or '}' in manifest");
      }
    }
    bump();  // '}'
    return m;
  }

  ClassDef parse_class() {
    ClassDef c;
    c.pos = cur_.pos;
    if (is_ident("final")) {
      c.is_final = true;
      bump();
    }
    expect_ident("class");
    c.name = take_name();
    if (is_ident("extends")) {
      bump();
      c.super = take_name();
    }
    expect_punct("{");
    while (!is_punct("}")) {
      if (is_ident("field")) {
        c.fields.push_back(parse_field());
      } else {
        c.methods.push_back(parse_method());
      }
    }
    bump();
    return c;
  }

  FieldDef parse_field() {
    FieldDef f;
    f.pos = cur_.pos;
    expect_ident("field");
    f.name = take_name();
    expect_punct(":");
    f.type = take_name();
    expect_punct(";");
    return f;
  }

  MethodDef parse_method() {
    MethodDef m;
    m.pos = cur_.pos;
    if (cur_.kind == Tok::Annot) {
      if (cur_.text != "JavascriptInterface") fail("unknown annotation @" + cur_.text);
      m.annotations.insert(cur_.text);
      bump();
    }
    if (is_ident("static")) {
      m.is_static = true;
      bump();
    }
    expect_ident("method");
    m.name = take_name();
    expect_punct("(");
    if (!is_punct(")")) {
      for (;;) {
        Param p;
        p.name = take_name();
        expect_punct(":");
        p.type = take_name();
        m.params.push_back(p);
        if (is_punct(",")) {
          bump();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
    expect_punct(":");
    m.ret = take_name();
    expect_punct("{");
    std::set<std::string> labels;
    while (!is_punct("}")) {
      Instr in = parse_instr();
      if (in.op == Op::Label) {
        if (!labels.insert(in.label).second)
          throw AirError("duplicate label '" + in.label + "'", in.pos);
      }
      m.body.push_back(std::move(in));
    }
    bump();
    return m;
  }

  bool at_call_keyword() const {
    return is_ident("vcall") || is_ident("scall") || is_ident("kcall");
  }

  Instr parse_call(Instr in) {
    in.op = Op::Invoke;
    if (cur_.text == "vcall") in.call_kind = CallKind::Virtual;
    else if (cur_.text == "scall") in.call_kind = CallKind::Static;
    else in.call_kind = CallKind::Special;
    bump();
    in.callee = parse_sig();
    expect_punct("(");
    if (!is_punct(")")) {
      for (;;) {
        in.args.push_back(take_name());
        if (is_punct(",")) {
          bump();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
    if (static_cast<int>(in.args.size()) != in.callee.arity)
      throw AirError("call argument count does not match arity of " + in.callee.str(), in.pos);
    return in;
  }

  Instr parse_instr() {
    Instr in;
    in.pos = cur_.pos;
    if (cur_.kind == Tok::Ident && ahead_.kind == Tok::Punct && ahead_.text == ":" &&
        !is_keyword(cur_.text)) {
      in.op = Op::Label;
      in.label = take_name();
      expect_punct(":");
      return in;
    }
    if (is_ident("put")) {
      bump();
      in.op = Op::Put;
      in.recv = take_name();
      expect_punct(".");
      in.field = take_name();
      expect_punct("=");
      in.src = take_name();
      expect_punct(";");
      return in;
    }
    if (is_ident("return")) {
      bump();
      in.op = Op::Return;
      if (!is_punct(";")) in.dst = take_name();
      expect_punct(";");
      return in;
    }
    if (is_ident("goto")) {
      bump();
      in.op = Op::Goto;
      in.label = take_name();
      expect_punct(";");
      return in;
    }
    if (is_ident("ifnd")) {
      bump();
      in.op = Op::IfNondet;
      in.label = take_name();
      expect_punct(";");
      return in;
    }
    if (at_call_keyword()) {
      in = parse_call(std::move(in));
      expect_punct(";");
      return in;
    }
    // NAME = rhs ;
    in.dst = take_name();
    expect_punct("=");
    if (cur_.kind == Tok::Str) {
      in.op = Op::ConstString;
      in.str_val = take_string();
    } else if (cur_.kind == Tok::Int) {
      in.op = Op::ConstInt;
      in.int_val = take_int();
    } else if (is_ident("new")) {
      bump();
      in.op = Op::New;
      in.type = take_name();
    } else if (is_ident("cast")) {
      bump();
      in.op = Op::Cast;
      in.type = take_name();
      in.src = take_name();
    } else if (is_ident("get")) {
      bump();
      in.op = Op::Get;
      in.recv = take_name();
      expect_punct(".");
      in.field = take_name();
    } else if (at_call_keyword()) {
      std::string dst = in.dst;
      in = parse_call(std::move(in));
      in.dst = dst;
    } else {
      in.op = Op::Assign;
      in.src = take_name();
    }
    expect_punct(";");
    return in;
  }

  static bool is_keyword(const std::string& s) {
    static const std::set<std::string> kw = {
        "manifest", "target_api", "entry", "permission", "final",  "class",
        "extends",  "field",      "method", "static",    "new",    "cast",
        "get",      "put",        "return", "goto",      "ifnd",   "vcall",
        "scall",    "kcall",
    };
    return kw.count(s) > 0;
  }
};

}  // namespace

AirDocument parse_air(const std::string& text) {
  Parser p(text);
  return p.parse_document();
}

Program parse_program(const std::string& text) {
  return parse_program(text, default_stubs_text());
}

Program parse_program(const std::string& text, const std::string& stubs_text) {
  return link_program(parse_air(text), parse_air(stubs_text));
}

}  // namespace bv
