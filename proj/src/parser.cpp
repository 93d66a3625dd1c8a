#include "mungo/parser.hpp"

#include <cctype>
#include <functional>
#include <set>

#include "mungo/usage.hpp"

namespace mungo {

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok {
  Ident,
  KwClass, KwEnum, KwNew, KwIf, KwElse, KwSwitch, KwContinue,
  KwTrue, KwFalse, KwNull, KwUnit, KwVoid, KwBool, KwEnd,
  LBrace, RBrace, LBracket, RBracket, LParen, RParen,
  LAngle, RAngle, Semi, Colon, Assign, Dot,
  Eof,
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  SourceSpan span;
};

struct ParseFail {
  Diagnostic diag;
};

[[noreturn]] void fail(DiagCode code, const std::string& msg, SourceSpan sp) {
  throw ParseFail{Diagnostic{Severity::Error, code, msg, sp}};
}

std::vector<Token> lex(const std::string& src, const std::string& file) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto span_here = [&]() {
    SourceSpan sp;
    sp.file = file;
    sp.start_line = sp.end_line = line;
    sp.start_col = sp.end_col = col;
    return sp;
  };
  auto push = [&](Tok k, std::string text, SourceSpan sp) {
    sp.end_line = line;
    sp.end_col = col;
    out.push_back(Token{k, std::move(text), sp});
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++col;
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    SourceSpan sp = span_here();
    // unicode angle brackets U+27E8 / U+27E9
    if (static_cast<unsigned char>(c) == 0xE2 && i + 2 < src.size() &&
        static_cast<unsigned char>(src[i + 1]) == 0x9F) {
      unsigned char b = static_cast<unsigned char>(src[i + 2]);
      if (b == 0xA8 || b == 0xA9) {
        i += 3;
        ++col;
        push(b == 0xA8 ? Tok::LAngle : Tok::RAngle, b == 0xA8 ? "<" : ">", sp);
        continue;
      }
    }
    if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() &&
             (isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      std::string word = src.substr(i, j - i);
      col += static_cast<int>(j - i);
      i = j;
      Tok k = Tok::Ident;
      if (word == "class") k = Tok::KwClass;
      else if (word == "enum") k = Tok::KwEnum;
      else if (word == "new") k = Tok::KwNew;
      else if (word == "if") k = Tok::KwIf;
      else if (word == "else") k = Tok::KwElse;
      else if (word == "switch") k = Tok::KwSwitch;
      else if (word == "continue") k = Tok::KwContinue;
      else if (word == "true") k = Tok::KwTrue;
      else if (word == "false") k = Tok::KwFalse;
      else if (word == "null") k = Tok::KwNull;
      else if (word == "unit") k = Tok::KwUnit;
      else if (word == "void") k = Tok::KwVoid;
      else if (word == "bool") k = Tok::KwBool;
      else if (word == "end") k = Tok::KwEnd;
      push(k, std::move(word), sp);
      continue;
    }
    Tok k;
    switch (c) {
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case '[': k = Tok::LBracket; break;
      case ']': k = Tok::RBracket; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '<': k = Tok::LAngle; break;
      case '>': k = Tok::RAngle; break;
      case ';': k = Tok::Semi; break;
      case ':': k = Tok::Colon; break;
      case '=': k = Tok::Assign; break;
      case '.': k = Tok::Dot; break;
      default:
        fail(DiagCode::SyntaxError, std::string("unexpected character '") + c + "'", sp);
    }
    ++col;
    ++i;
    push(k, std::string(1, c), sp);
  }
  Token eof;
  eof.kind = Tok::Eof;
  eof.span = span_here();
  out.push_back(eof);
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
  std::vector<Token> toks;
  size_t pos = 0;
  std::string file;

  // pre-scanned program shape, for forward references and disambiguation
  std::set<std::string> enum_names;
  std::set<std::string> enum_labels;
  std::set<std::string> class_names;
  // class name -> (alpha, beta) for generic classes
  std::map<std::string, std::pair<std::string, std::string>> generics;

  // context while parsing a class / method body
  std::string cur_alpha, cur_beta;
  std::string cur_param;
  std::set<std::string> cur_fields;

  const Token& peek(int ahead = 0) const {
    size_t p = pos + static_cast<size_t>(ahead);
    return p < toks.size() ? toks[p] : toks.back();
  }
  const Token& cur() const { return peek(0); }
  Token take() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    take();
    return true;
  }
  Token expect(Tok k, const char* what) {
    if (!at(k))
      fail(DiagCode::SyntaxError,
           std::string("expected ") + what + ", found '" + cur().text + "'", cur().span);
    return take();
  }
  std::string expect_ident(const char* what) { return expect(Tok::Ident, what).text; }

  void prescan() {
    for (size_t i = 0; i + 1 < toks.size(); ++i) {
      if (toks[i].kind == Tok::KwEnum && toks[i + 1].kind == Tok::Ident) {
        enum_names.insert(toks[i + 1].text);
        size_t j = i + 2;
        if (j < toks.size() && toks[j].kind == Tok::LBrace) {
          ++j;
          while (j < toks.size() && toks[j].kind == Tok::Ident)
            enum_labels.insert(toks[j++].text);
        }
      } else if (toks[i].kind == Tok::KwClass) {
        size_t j = i + 1;
        std::string alpha, beta;
        bool generic = false;
        if (toks[j].kind == Tok::LAngle && j + 4 < toks.size() &&
            toks[j + 1].kind == Tok::Ident && toks[j + 2].kind == Tok::LBracket &&
            toks[j + 3].kind == Tok::Ident && toks[j + 4].kind == Tok::RBracket) {
          alpha = toks[j + 1].text;
          beta = toks[j + 3].text;
          generic = true;
          j += 5;
          if (j < toks.size() && toks[j].kind == Tok::RAngle) ++j;
        }
        if (j < toks.size() && toks[j].kind == Tok::Ident) {
          class_names.insert(toks[j].text);
          if (generic) generics[toks[j].text] = {alpha, beta};
        }
      }
    }
  }

  // ---- usages ----

  UsageBodyPtr parse_usage_body() {
    if (accept(Tok::KwEnd)) return usage_end();
    if (at(Tok::Ident)) return usage_var(take().text);
    if (at(Tok::LBrace)) {
      SourceSpan sp = take().span;
      std::map<std::string, UsageBodyPtr> entries;
      if (at(Tok::RBrace))
        fail(DiagCode::EmptyBranch, "usage branch offers no methods", sp);
      while (!accept(Tok::RBrace)) {
        std::string m = expect_ident("method name in usage branch");
        expect(Tok::Semi, "';'");
        UsageBodyPtr w = at(Tok::LAngle) ? parse_usage_choice() : parse_usage_body();
        if (!entries.emplace(m, w).second)
          fail(DiagCode::DuplicateName, "duplicate method " + m + " in usage branch", sp);
      }
      return usage_branch(std::move(entries));
    }
    fail(DiagCode::SyntaxError, "expected usage, found '" + cur().text + "'", cur().span);
  }

  UsageBodyPtr parse_usage_choice() {
    SourceSpan sp = expect(Tok::LAngle, "'<'").span;
    std::map<std::string, UsageBodyPtr> entries;
    while (!accept(Tok::RAngle)) {
      std::string l = expect_ident("label in usage choice");
      expect(Tok::Colon, "':'");
      UsageBodyPtr u = parse_usage_body();
      if (!entries.emplace(l, u).second)
        fail(DiagCode::DuplicateName, "duplicate label " + l + " in usage choice", sp);
    }
    if (entries.empty())
      fail(DiagCode::SyntaxError, "usage choice offers no labels", sp);
    return usage_choice(std::move(entries));
  }

  Usage parse_usage() {
    Usage u;
    u.body = parse_usage_body();
    if (accept(Tok::LBracket)) {
      while (!accept(Tok::RBracket)) {
        SourceSpan sp = cur().span;
        std::string x = expect_ident("usage variable");
        expect(Tok::Assign, "'='");
        UsageBodyPtr rhs = parse_usage_body();
        if (!u.equations.emplace(x, rhs).second)
          fail(DiagCode::DuplicateName, "duplicate usage equation for " + x, sp);
      }
    }
    return u;
  }

  // ---- types ----

  // Generic instantiation argument: C[usage], C<g>[usage], or a[b].
  TypeExprPtr parse_generic_arg() {
    Token name = expect(Tok::Ident, "class name or type variable");
    if (name.text == cur_alpha && at(Tok::LBracket) && peek(1).kind == Tok::Ident &&
        peek(1).text == cur_beta && peek(2).kind == Tok::RBracket) {
      take();
      take();
      take();
      return type_generic_var(cur_alpha, cur_beta);
    }
    TypeExprPtr inner;
    if (accept(Tok::LAngle)) {
      inner = parse_generic_arg();
      expect(Tok::RAngle, "'>'");
    }
    expect(Tok::LBracket, "'[' before usage");
    Usage u = parse_usage();
    expect(Tok::RBracket, "']' after usage");
    return type_typestate(name.text, inner, std::move(u));
  }

  // Method parameter / return types.
  TypeExprPtr parse_value_type() {
    if (accept(Tok::KwVoid)) return type_void();
    if (accept(Tok::KwBool)) return type_bool();
    Token name = expect(Tok::Ident, "type name");
    if (enum_names.count(name.text)) return type_enum(name.text);
    if (name.text == cur_alpha) {
      expect(Tok::LBracket, "'['");
      std::string b = expect_ident("usage variable of the generic class");
      if (b != cur_beta)
        fail(DiagCode::UndeclaredName, "unknown usage variable " + b, name.span);
      expect(Tok::RBracket, "']'");
      return type_generic_var(cur_alpha, cur_beta);
    }
    TypeExprPtr inner;
    if (accept(Tok::LAngle)) {
      inner = parse_generic_arg();
      expect(Tok::RAngle, "'>'");
    }
    expect(Tok::LBracket, "'[' before usage");
    Usage u = parse_usage();
    expect(Tok::RBracket, "']' after usage");
    return type_typestate(name.text, inner, std::move(u));
  }

  // Field types: base, class reference (no usage), or the class variable.
  DeclaredType parse_field_type_from(const Token& head) {
    DeclaredType d;
    if (head.kind == Tok::KwVoid) {
      d.kind = DeclKind::Base;
      d.base = BaseKind::Void;
      return d;
    }
    if (head.kind == Tok::KwBool) {
      d.kind = DeclKind::Base;
      d.base = BaseKind::Bool;
      return d;
    }
    if (enum_names.count(head.text))
      fail(DiagCode::EnumTypedField, "fields may not have enum type " + head.text, head.span);
    if (head.text == cur_alpha) {
      d.kind = DeclKind::GenericAlpha;
      d.class_name = head.text;
      return d;
    }
    d.kind = DeclKind::Class;
    d.class_name = head.text;
    if (accept(Tok::LAngle)) {
      d.class_arg = parse_generic_arg();
      expect(Tok::RAngle, "'>'");
    }
    return d;
  }

  // ---- expressions ----

  bool is_enum_label(const std::string& name) const { return enum_labels.count(name) > 0; }

  ExprPtr parse_expr() {
    ExprPtr e = parse_simple();
    if (accept(Tok::Semi)) {
      SourceSpan sp = e->span;
      ExprPtr rest = parse_expr();
      return expr_seq(std::move(e), std::move(rest), sp);
    }
    return e;
  }

  ExprPtr parse_simple() {
    SourceSpan sp = cur().span;
    switch (cur().kind) {
      case Tok::KwUnit: take(); return expr_value(value_unit(), sp);
      case Tok::KwTrue: take(); return expr_value(value_bool(true), sp);
      case Tok::KwFalse: take(); return expr_value(value_bool(false), sp);
      case Tok::KwNull: take(); return expr_value(value_null(), sp);
      case Tok::LParen: {
        take();
        ExprPtr inner = parse_expr();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::KwNew: {
        take();
        Token name = expect(Tok::Ident, "class name after new");
        if (accept(Tok::LAngle)) {
          TypeExprPtr g = parse_generic_arg();
          expect(Tok::RAngle, "'>'");
          return expr_new_gen(name.text, std::move(g), sp);
        }
        return expr_new(name.text, sp);
      }
      case Tok::KwIf: {
        take();
        expect(Tok::LParen, "'('");
        ExprPtr c = parse_expr();
        expect(Tok::RParen, "')'");
        expect(Tok::LBrace, "'{'");
        ExprPtr t = parse_expr();
        expect(Tok::RBrace, "'}'");
        expect(Tok::KwElse, "else");
        expect(Tok::LBrace, "'{'");
        ExprPtr f = parse_expr();
        expect(Tok::RBrace, "'}'");
        return expr_if(std::move(c), std::move(t), std::move(f), sp);
      }
      case Tok::KwSwitch: {
        take();
        expect(Tok::LParen, "'('");
        std::string recv = expect_ident("receiver of switch call");
        expect(Tok::Dot, "'.'");
        std::string m = expect_ident("method name");
        expect(Tok::LParen, "'('");
        ExprPtr arg = parse_expr();
        expect(Tok::RParen, "')'");
        ExprPtr scrut = expr_call(RecvKind::Field, recv, m, std::move(arg), sp);
        expect(Tok::RParen, "')'");
        expect(Tok::LBrace, "'{'");
        std::vector<std::pair<std::string, ExprPtr>> branches;
        std::set<std::string> seen;
        while (!accept(Tok::RBrace)) {
          Token l = expect(Tok::Ident, "branch label");
          if (!is_enum_label(l.text))
            fail(DiagCode::UndeclaredName, "unknown enum label " + l.text, l.span);
          if (!seen.insert(l.text).second)
            fail(DiagCode::DuplicateName, "duplicate switch branch " + l.text, l.span);
          expect(Tok::Colon, "':'");
          branches.emplace_back(l.text, parse_expr());
        }
        if (branches.empty())
          fail(DiagCode::SyntaxError, "switch has no branches", sp);
        return expr_switch(RecvKind::Field, recv, m, std::move(scrut), std::move(branches), sp);
      }
      case Tok::KwContinue: {
        take();
        std::string k = expect_ident("loop label after continue");
        return expr_continue(k, sp);
      }
      case Tok::Ident: {
        Token name = take();
        if (at(Tok::Assign)) {
          take();
          ExprPtr rhs = parse_simple();
          return expr_assign(name.text, std::move(rhs), sp);
        }
        if (at(Tok::Dot)) {
          take();
          std::string m = expect_ident("method name");
          expect(Tok::LParen, "'('");
          ExprPtr arg = parse_expr();
          expect(Tok::RParen, "')'");
          return expr_call(RecvKind::Field, name.text, m, std::move(arg), sp);
        }
        if (at(Tok::Colon) && !is_enum_label(name.text)) {
          take();
          ExprPtr body = parse_simple();
          return expr_label(name.text, std::move(body), sp);
        }
        if (is_enum_label(name.text)) return expr_value(value_label(name.text), sp);
        // bare reference: field or parameter, decided in resolution
        return expr_field(name.text, sp);
      }
      default:
        fail(DiagCode::SyntaxError, "expected expression, found '" + cur().text + "'",
             cur().span);
    }
  }

  // Rewrites bare references into parameter/field reads and validates names
  // and loop labels.
  ExprPtr resolve_expr(const ExprPtr& e, std::set<std::string> labels_in_scope) {
    if (!e) return e;
    switch (e->kind) {
      case ExprKind::Field:
        if (e->name == cur_param) {
          Expr out = *e;
          out.kind = ExprKind::Param;
          return std::make_shared<Expr>(std::move(out));
        }
        if (!cur_fields.count(e->name))
          fail(DiagCode::UndeclaredName, "unknown name " + e->name, e->span);
        return e;
      case ExprKind::Call:
      case ExprKind::Switch: {
        Expr out = *e;
        if (e->recv == cur_param) {
          out.recv_kind = RecvKind::Param;
        } else if (cur_fields.count(e->recv)) {
          out.recv_kind = RecvKind::Field;
        } else {
          fail(DiagCode::UndeclaredName, "unknown receiver " + e->recv, e->span);
        }
        out.a = resolve_expr(e->a, labels_in_scope);
        if (e->kind == ExprKind::Switch)
          for (auto& [_, br] : out.branches) br = resolve_expr(br, labels_in_scope);
        return std::make_shared<Expr>(std::move(out));
      }
      case ExprKind::Label: {
        if (labels_in_scope.count(e->name))
          fail(DiagCode::DuplicateName, "loop label " + e->name + " already in scope", e->span);
        labels_in_scope.insert(e->name);
        Expr out = *e;
        out.a = resolve_expr(e->a, labels_in_scope);
        return std::make_shared<Expr>(std::move(out));
      }
      case ExprKind::Continue:
        if (!labels_in_scope.count(e->name))
          fail(DiagCode::UndeclaredName, "continue targets unknown label " + e->name, e->span);
        return e;
      default: {
        Expr out = *e;
        out.a = resolve_expr(e->a, labels_in_scope);
        out.b = resolve_expr(e->b, labels_in_scope);
        out.c = resolve_expr(e->c, labels_in_scope);
        return std::make_shared<Expr>(std::move(out));
      }
    }
  }

  // ---- declarations ----

  EnumDecl parse_enum() {
    EnumDecl d;
    d.span = expect(Tok::KwEnum, "enum").span;
    d.name = expect_ident("enum name");
    expect(Tok::LBrace, "'{'");
    std::set<std::string> seen;
    while (!accept(Tok::RBrace)) {
      Token l = expect(Tok::Ident, "enum label");
      if (!seen.insert(l.text).second)
        fail(DiagCode::DuplicateName, "duplicate enum label " + l.text, l.span);
      d.labels.push_back(l.text);
    }
    if (d.labels.empty())
      fail(DiagCode::EmptyEnum, "enum " + d.name + " has no labels", d.span);
    return d;
  }

  ClassDecl parse_class() {
    ClassDecl d;
    d.span = expect(Tok::KwClass, "class").span;
    cur_alpha.clear();
    cur_beta.clear();
    if (accept(Tok::LAngle)) {
      cur_alpha = expect_ident("class type variable");
      expect(Tok::LBracket, "'['");
      cur_beta = expect_ident("usage variable");
      expect(Tok::RBracket, "']'");
      expect(Tok::RAngle, "'>'");
      d.generic = {{cur_alpha, cur_beta}};
    }
    d.name = expect_ident("class name");
    expect(Tok::LBrace, "'{'");
    d.usage = parse_usage();
    cur_fields.clear();
    std::set<std::string> method_names;
    struct PendingMethod {
      MethodDecl decl;
      ExprPtr raw_body;
    };
    std::vector<PendingMethod> pending;
    while (!accept(Tok::RBrace)) {
      Token head = take();
      if (head.kind != Tok::KwVoid && head.kind != Tok::KwBool && head.kind != Tok::Ident)
        fail(DiagCode::SyntaxError, "expected member declaration, found '" + head.text + "'",
             head.span);
      // A member is a method iff '(' follows the member name; detect by
      // scanning past the (possibly bracketed) type.
      if (looks_like_method(head)) {
        PendingMethod pm;
        pm.decl.span = head.span;
        pm.decl.return_type = parse_value_type_from(head);
        pm.decl.name = expect_ident("method name");
        if (!method_names.insert(pm.decl.name).second)
          fail(DiagCode::DuplicateName, "duplicate method " + pm.decl.name, head.span);
        expect(Tok::LParen, "'('");
        Token ph = take();
        if (ph.kind != Tok::KwVoid && ph.kind != Tok::KwBool && ph.kind != Tok::Ident)
          fail(DiagCode::SyntaxError, "expected parameter type", ph.span);
        pm.decl.param_type = parse_value_type_from(ph);
        pm.decl.param_name = expect_ident("parameter name");
        expect(Tok::RParen, "')'");
        expect(Tok::LBrace, "'{'");
        pm.raw_body = parse_expr();
        expect(Tok::RBrace, "'}'");
        pending.push_back(std::move(pm));
      } else {
        FieldDecl f;
        f.span = head.span;
        f.type = parse_field_type_from(head);
        f.name = expect_ident("field name");
        accept(Tok::Semi);
        if (!cur_fields.insert(f.name).second)
          fail(DiagCode::DuplicateName, "duplicate field " + f.name, f.span);
        d.fields.push_back(std::move(f));
      }
    }
    for (auto& pm : pending) {
      cur_param = pm.decl.param_name;
      pm.decl.body = resolve_expr(pm.raw_body, {});
      cur_param.clear();
      d.methods.push_back(std::move(pm.decl));
    }
    return d;
  }

  // Decides field vs method by skipping the type that starts at `head` and
  // checking whether '(' follows the member name.
  bool looks_like_method(const Token& head) {
    size_t p = pos;  // head already consumed
    auto skip_balanced = [&](Tok open, Tok close) {
      // assumes toks[p] is `open`
      int depth = 0;
      do {
        if (toks[p].kind == open) ++depth;
        else if (toks[p].kind == close) --depth;
        ++p;
      } while (depth > 0 && p < toks.size() - 1);
    };
    if (head.kind == Tok::Ident) {
      if (p < toks.size() && toks[p].kind == Tok::LAngle) skip_balanced(Tok::LAngle, Tok::RAngle);
      if (p < toks.size() && toks[p].kind == Tok::LBracket)
        skip_balanced(Tok::LBracket, Tok::RBracket);
    }
    // member name, then '(' for methods
    if (p < toks.size() && toks[p].kind == Tok::Ident)
      return p + 1 < toks.size() && toks[p + 1].kind == Tok::LParen;
    return false;
  }

  TypeExprPtr parse_value_type_from(const Token& head) {
    if (head.kind == Tok::KwVoid) return type_void();
    if (head.kind == Tok::KwBool) return type_bool();
    if (enum_names.count(head.text)) return type_enum(head.text);
    if (head.text == cur_alpha) {
      expect(Tok::LBracket, "'['");
      std::string b = expect_ident("usage variable of the generic class");
      if (b != cur_beta)
        fail(DiagCode::UndeclaredName, "unknown usage variable " + b, head.span);
      expect(Tok::RBracket, "']'");
      return type_generic_var(cur_alpha, cur_beta);
    }
    TypeExprPtr inner;
    if (accept(Tok::LAngle)) {
      inner = parse_generic_arg();
      expect(Tok::RAngle, "'>'");
    }
    expect(Tok::LBracket, "'[' before usage");
    Usage u = parse_usage();
    expect(Tok::RBracket, "']' after usage");
    return type_typestate(head.text, inner, std::move(u));
  }

  Program parse() {
    prescan();
    Program p;
    std::set<std::string> top_names;
    while (!at(Tok::Eof)) {
      if (at(Tok::KwEnum)) {
        EnumDecl e = parse_enum();
        if (!top_names.insert(e.name).second)
          fail(DiagCode::DuplicateName, "duplicate declaration " + e.name, e.span);
        p.enums.push_back(std::move(e));
      } else if (at(Tok::KwClass)) {
        ClassDecl c = parse_class();
        if (!top_names.insert(c.name).second)
          fail(DiagCode::DuplicateName, "duplicate declaration " + c.name, c.span);
        p.classes.push_back(std::move(c));
      } else {
        fail(DiagCode::SyntaxError, "expected enum or class declaration, found '" +
                                        cur().text + "'",
             cur().span);
      }
    }
    return p;
  }
};

// ---------------------------------------------------------------------------
// Post-parse validation
// ---------------------------------------------------------------------------

struct Validator {
  const Program& prog;
  std::vector<Diagnostic>& diags;

  void err(DiagCode code, const std::string& msg, SourceSpan sp) {
    diags.push_back(Diagnostic{Severity::Error, code, msg, sp});
  }

  void check_type(const TypeExprPtr& t, SourceSpan sp) {
    if (!t || t->kind != TypeKind::Typestate) return;
    const ClassDecl* c = prog.find_class(t->class_name);
    if (!c) {
      err(DiagCode::UnknownClass, "unknown class " + t->class_name, sp);
      return;
    }
    bool has_arg = t->type_arg && t->type_arg->kind != TypeKind::Bottom;
    if (c->generic.has_value() != has_arg)
      err(DiagCode::ArityMismatch,
          has_arg ? "class " + t->class_name + " is not generic"
                  : "generic class " + t->class_name + " used without instantiation",
          sp);
    check_type(t->type_arg, sp);
    check_usage(Usage{t->usage.body, t->usage.equations}, sp);
  }

  void check_declared(const DeclaredType& d, SourceSpan sp) {
    if (d.kind != DeclKind::Class) return;
    const ClassDecl* c = prog.find_class(d.class_name);
    if (!c) {
      err(DiagCode::UnknownClass, "unknown class " + d.class_name, sp);
      return;
    }
    bool has_arg = d.class_arg != nullptr;
    if (c->generic.has_value() != has_arg)
      err(DiagCode::ArityMismatch,
          has_arg ? "class " + d.class_name + " is not generic"
                  : "generic class " + d.class_name + " used without instantiation",
          sp);
    check_type(d.class_arg, sp);
  }

  void check_usage(const Usage& u, SourceSpan sp) {
    // every variable bound, every equation productive
    std::set<std::string> vars;
    std::function<void(const UsageBodyPtr&)> walk = [&](const UsageBodyPtr& b) {
      if (b->kind == UsageKind::Var) vars.insert(b->var);
      if (b->kind == UsageKind::Branch || b->kind == UsageKind::Choice)
        for (const auto& [_, w] : b->entries) walk(w);
    };
    walk(u.body);
    for (const auto& [_, rhs] : u.equations) walk(rhs);
    for (const auto& x : vars)
      if (!u.equations.count(x))
        err(DiagCode::UnboundUsageVariable, "unbound usage variable " + x, sp);
    for (const auto& [x, _] : u.equations) {
      try {
        resolve_head(UsageState{usage_var(x), u.equations});
      } catch (const UsageError& e) {
        if (e.code == DiagCode::UnfoldCycle) err(DiagCode::UnfoldCycle, e.what(), sp);
      }
    }
  }

  void check_expr_types(const ExprPtr& e) {
    if (!e) return;
    if (e->kind == ExprKind::NewGen) {
      const ClassDecl* c = prog.find_class(e->name);
      if (!c)
        err(DiagCode::UnknownClass, "unknown class " + e->name, e->span);
      else if (!c->generic)
        err(DiagCode::ArityMismatch, "class " + e->name + " is not generic", e->span);
      check_type(e->generic_arg, e->span);
    }
    if (e->kind == ExprKind::New) {
      const ClassDecl* c = prog.find_class(e->name);
      if (!c)
        err(DiagCode::UnknownClass, "unknown class " + e->name, e->span);
      else if (c->generic)
        err(DiagCode::ArityMismatch,
            "generic class " + e->name + " used without instantiation", e->span);
    }
    check_expr_types(e->a);
    check_expr_types(e->b);
    check_expr_types(e->c);
    for (const auto& [_, br] : e->branches) check_expr_types(br);
  }

  void run() {
    for (const auto& c : prog.classes) {
      check_usage(c.usage, c.span);
      for (const auto& f : c.fields) check_declared(f.type, f.span);
      for (const auto& m : c.methods) {
        check_type(m.param_type, m.span);
        check_type(m.return_type, m.span);
        check_expr_types(m.body);
      }
    }
    // entry point shape: class Main { {main; end} ... void main(void x) {...} }
    const ClassDecl* main_cls = prog.find_class("Main");
    if (!main_cls) {
      err(DiagCode::MissingMainClass, "program has no Main class", {});
      return;
    }
    bool usage_ok = false;
    if (!main_cls->generic && main_cls->usage.equations.empty() &&
        main_cls->usage.body->kind == UsageKind::Branch &&
        main_cls->usage.body->entries.size() == 1) {
      auto it = main_cls->usage.body->entries.begin();
      usage_ok = it->first == "main" && it->second->kind == UsageKind::End;
    }
    if (!usage_ok)
      err(DiagCode::MissingMainClass, "Main must declare usage {main; end}", main_cls->span);
    const MethodDecl* mm = nullptr;
    for (const auto& m : main_cls->methods)
      if (m.name == "main") mm = &m;
    if (!mm || !type_equal(mm->return_type, type_void()) ||
        !type_equal(mm->param_type, type_void()))
      err(DiagCode::MissingMainClass, "Main must define void main(void x)",
          mm ? mm->span : main_cls->span);
  }
};

}  // namespace

ParseResult parse_program(const std::string& source, const std::string& filename) {
  ParseResult res;
  try {
    Parser p;
    p.file = filename;
    p.toks = lex(source, filename);
    res.program = p.parse();
  } catch (const ParseFail& f) {
    res.diagnostics.push_back(f.diag);
    sort_diagnostics(res.diagnostics);
    return res;
  }
  Validator v{*res.program, res.diagnostics};
  v.run();
  sort_diagnostics(res.diagnostics);
  return res;
}

}  // namespace mungo
