#include "mungo/ast.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <tuple>

namespace mungo {

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

const char* diag_code_name(DiagCode code) {
  switch (code) {
    case DiagCode::SyntaxError: return "SyntaxError";
    case DiagCode::DuplicateName: return "DuplicateName";
    case DiagCode::UndeclaredName: return "UndeclaredName";
    case DiagCode::EnumTypedField: return "EnumTypedField";
    case DiagCode::EmptyEnum: return "EmptyEnum";
    case DiagCode::EmptyBranch: return "EmptyBranch";
    case DiagCode::MissingMainClass: return "MissingMainClass";
    case DiagCode::UnboundUsageVariable: return "UnboundUsageVariable";
    case DiagCode::MethodNotUnderstood: return "MethodNotUnderstood";
    case DiagCode::FieldNotUnderstood: return "FieldNotUnderstood";
    case DiagCode::MethodNotAvailable: return "MethodNotAvailable";
    case DiagCode::FieldNotAvailable: return "FieldNotAvailable";
    case DiagCode::ParameterNotAvailable: return "ParameterNotAvailable";
    case DiagCode::FieldMisused: return "FieldMisused";
    case DiagCode::ParameterMisused: return "ParameterMisused";
    case DiagCode::BranchMismatch: return "BranchMismatch";
    case DiagCode::LoopEnvMismatch: return "LoopEnvMismatch";
    case DiagCode::SwitchLabelMismatch: return "SwitchLabelMismatch";
    case DiagCode::NonTerminatedAfterUsage: return "NonTerminatedAfterUsage";
    case DiagCode::RecursionEnvMismatch: return "RecursionEnvMismatch";
    case DiagCode::TypeMismatch: return "TypeMismatch";
    case DiagCode::LinearValueDropped: return "LinearValueDropped";
    case DiagCode::UnknownClass: return "UnknownClass";
    case DiagCode::ArityMismatch: return "ArityMismatch";
    case DiagCode::UnfoldCycle: return "UnfoldCycle";
    case DiagCode::WTHViolation: return "WTHViolation";
    case DiagCode::WTPViolation: return "WTPViolation";
    case DiagCode::WTEViolation: return "WTEViolation";
    case DiagCode::WTDViolation: return "WTDViolation";
    case DiagCode::WTCViolation: return "WTCViolation";
    case DiagCode::IOError: return "IOError";
  }
  return "Unknown";
}

const char* diag_taxonomy(DiagCode code) {
  switch (code) {
    case DiagCode::MethodNotUnderstood: return "Method not understood";
    case DiagCode::FieldNotUnderstood: return "Field not understood";
    case DiagCode::MethodNotAvailable: return "Method not available";
    case DiagCode::FieldNotAvailable: return "Field not available";
    case DiagCode::ParameterNotAvailable: return "Parameter not available";
    case DiagCode::FieldMisused: return "Field misused";
    case DiagCode::ParameterMisused: return "Parameter misused";
    default: return "";
  }
}

std::string format_diagnostic(const Diagnostic& d) {
  std::ostringstream os;
  os << (d.span.file.empty() ? "<input>" : d.span.file) << ':' << d.span.start_line
     << ':' << d.span.start_col << ": ";
  switch (d.severity) {
    case Severity::Error: os << "error"; break;
    case Severity::Warning: os << "warning"; break;
    case Severity::Note: os << "note"; break;
  }
  os << '[' << diag_code_name(d.code) << "]: " << d.message;
  return os.str();
}

void sort_diagnostics(std::vector<Diagnostic>& diags) {
  std::stable_sort(diags.begin(), diags.end(),
                   [](const Diagnostic& a, const Diagnostic& b) {
                     auto ka = std::tie(a.span.file, a.span.start_line, a.span.start_col);
                     auto kb = std::tie(b.span.file, b.span.start_line, b.span.start_col);
                     if (ka != kb) return ka < kb;
                     return static_cast<int>(a.code) < static_cast<int>(b.code);
                   });
}

// ---------------------------------------------------------------------------
// Usages
// ---------------------------------------------------------------------------

UsageBodyPtr usage_end() {
  static const UsageBodyPtr e = std::make_shared<UsageBody>(UsageBody{UsageKind::End, {}, {}});
  return e;
}

UsageBodyPtr usage_top() {
  static const UsageBodyPtr t = std::make_shared<UsageBody>(UsageBody{UsageKind::Top, {}, {}});
  return t;
}

UsageBodyPtr usage_var(std::string name) {
  return std::make_shared<UsageBody>(UsageBody{UsageKind::Var, std::move(name), {}});
}

UsageBodyPtr usage_branch(std::map<std::string, UsageBodyPtr> entries) {
  return std::make_shared<UsageBody>(UsageBody{UsageKind::Branch, {}, std::move(entries)});
}

UsageBodyPtr usage_choice(std::map<std::string, UsageBodyPtr> entries) {
  return std::make_shared<UsageBody>(UsageBody{UsageKind::Choice, {}, std::move(entries)});
}

Usage end_usage() { return Usage{usage_end(), {}}; }
Usage top_usage() { return Usage{usage_top(), {}}; }

bool usage_body_equal(const UsageBodyPtr& a, const UsageBodyPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case UsageKind::End:
    case UsageKind::Top:
      return true;
    case UsageKind::Var:
      return a->var == b->var;
    case UsageKind::Branch:
    case UsageKind::Choice: {
      if (a->entries.size() != b->entries.size()) return false;
      auto it = b->entries.begin();
      for (const auto& [k, v] : a->entries) {
        if (it->first != k || !usage_body_equal(v, it->second)) return false;
        ++it;
      }
      return true;
    }
  }
  return false;
}

static void collect_vars(const UsageBodyPtr& u, std::set<std::string>& out) {
  switch (u->kind) {
    case UsageKind::Var:
      out.insert(u->var);
      break;
    case UsageKind::Branch:
    case UsageKind::Choice:
      for (const auto& [_, w] : u->entries) collect_vars(w, out);
      break;
    default:
      break;
  }
}

Usage canonical_usage(const Usage& u) {
  std::set<std::string> reachable, pending;
  collect_vars(u.body, pending);
  while (!pending.empty()) {
    auto x = *pending.begin();
    pending.erase(pending.begin());
    if (!reachable.insert(x).second) continue;
    auto it = u.equations.find(x);
    if (it == u.equations.end()) continue;
    std::set<std::string> next;
    collect_vars(it->second, next);
    for (const auto& y : next)
      if (!reachable.count(y)) pending.insert(y);
  }
  Usage out;
  out.body = u.body;
  for (const auto& [x, rhs] : u.equations)
    if (reachable.count(x)) out.equations.emplace(x, rhs);
  return out;
}

bool usage_equal(const Usage& a, const Usage& b) {
  Usage ca = canonical_usage(a), cb = canonical_usage(b);
  if (!usage_body_equal(ca.body, cb.body)) return false;
  if (ca.equations.size() != cb.equations.size()) return false;
  auto it = cb.equations.begin();
  for (const auto& [x, rhs] : ca.equations) {
    if (it->first != x || !usage_body_equal(rhs, it->second)) return false;
    ++it;
  }
  return true;
}

std::string print_usage_body(const UsageBodyPtr& u) {
  switch (u->kind) {
    case UsageKind::End:
      return "end";
    case UsageKind::Top:
      return "$top";
    case UsageKind::Var:
      return u->var;
    case UsageKind::Branch: {
      std::string s = "{";
      bool first = true;
      for (const auto& [m, w] : u->entries) {
        if (!first) s += ' ';
        first = false;
        s += m;
        s += "; ";
        s += print_usage_body(w);
      }
      s += '}';
      return s;
    }
    case UsageKind::Choice: {
      std::string s = "<";
      bool first = true;
      for (const auto& [l, w] : u->entries) {
        if (!first) s += ' ';
        first = false;
        s += l;
        s += ": ";
        s += print_usage_body(w);
      }
      s += '>';
      return s;
    }
  }
  return "?";
}

std::string print_usage(const Usage& u) {
  std::string s = print_usage_body(u.body);
  if (!u.equations.empty()) {
    s += '[';
    bool first = true;
    for (const auto& [x, rhs] : u.equations) {
      if (!first) s += ' ';
      first = false;
      s += x;
      s += " = ";
      s += print_usage_body(rhs);
    }
    s += ']';
  }
  return s;
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

const char* const kTopClassName = "$Top";

TypeExprPtr type_void() {
  static const TypeExprPtr t = std::make_shared<TypeExpr>(TypeExpr{TypeKind::Base, BaseKind::Void});
  return t;
}

TypeExprPtr type_bool() {
  static const TypeExprPtr t = std::make_shared<TypeExpr>(TypeExpr{TypeKind::Base, BaseKind::Bool});
  return t;
}

TypeExprPtr type_enum(std::string name) {
  TypeExpr t;
  t.kind = TypeKind::Base;
  t.base = BaseKind::Enum;
  t.enum_name = std::move(name);
  return std::make_shared<TypeExpr>(std::move(t));
}

TypeExprPtr type_bottom() {
  static const TypeExprPtr t = std::make_shared<TypeExpr>(TypeExpr{TypeKind::Bottom});
  return t;
}

TypeExprPtr type_typestate(std::string class_name, TypeExprPtr arg, Usage usage) {
  TypeExpr t;
  t.kind = TypeKind::Typestate;
  t.class_name = std::move(class_name);
  t.type_arg = arg ? std::move(arg) : type_bottom();
  t.usage = std::move(usage);
  return std::make_shared<TypeExpr>(std::move(t));
}

TypeExprPtr type_generic_var(std::string alpha, std::string beta) {
  TypeExpr t;
  t.kind = TypeKind::GenericVar;
  t.alpha = std::move(alpha);
  t.beta = std::move(beta);
  return std::make_shared<TypeExpr>(std::move(t));
}

TypeExprPtr type_top() {
  static const TypeExprPtr t = type_typestate(kTopClassName, type_bottom(), top_usage());
  return t;
}

bool type_equal(const TypeExprPtr& a, const TypeExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TypeKind::Base:
      return a->base == b->base && a->enum_name == b->enum_name;
    case TypeKind::Bottom:
      return true;
    case TypeKind::GenericVar:
      return a->alpha == b->alpha && a->beta == b->beta;
    case TypeKind::Typestate:
      return a->class_name == b->class_name && type_equal(a->type_arg, b->type_arg) &&
             usage_equal(a->usage, b->usage);
  }
  return false;
}

std::string print_type(const TypeExprPtr& t) {
  if (!t) return "<null>";
  switch (t->kind) {
    case TypeKind::Base:
      switch (t->base) {
        case BaseKind::Void: return "void";
        case BaseKind::Bool: return "bool";
        case BaseKind::Enum: return t->enum_name;
      }
      return "?";
    case TypeKind::Bottom:
      return "null";
    case TypeKind::GenericVar:
      return t->alpha + "[" + t->beta + "]";
    case TypeKind::Typestate: {
      std::string s = t->class_name;
      if (t->type_arg && t->type_arg->kind != TypeKind::Bottom)
        s += "<" + print_type(t->type_arg) + ">";
      s += "[" + print_usage(t->usage) + "]";
      return s;
    }
  }
  return "?";
}

bool lin_type(const TypeExprPtr& t) {
  if (!t) return false;
  switch (t->kind) {
    case TypeKind::Typestate:
      return t->usage.body->kind != UsageKind::End;
    case TypeKind::GenericVar:
      return true;
    default:
      return false;
  }
}

bool class_view_equal(const ClassView& a, const ClassView& b) {
  return a.name == b.name && type_equal(a.arg, b.arg);
}

std::string print_class_view(const ClassView& v) {
  if (v.arg && v.arg->kind != TypeKind::Bottom)
    return v.name + "<" + print_type(v.arg) + ">";
  return v.name;
}

bool declared_type_equal(const DeclaredType& a, const DeclaredType& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case DeclKind::Base:
      return a.base == b.base && a.enum_name == b.enum_name;
    case DeclKind::Class:
      if (a.class_name != b.class_name) return false;
      if (!a.class_arg != !b.class_arg) return false;
      return !a.class_arg || type_equal(a.class_arg, b.class_arg);
    case DeclKind::GenericAlpha:
      return a.class_name == b.class_name;
  }
  return false;
}

std::string print_declared_type(const DeclaredType& t) {
  switch (t.kind) {
    case DeclKind::Base:
      switch (t.base) {
        case BaseKind::Void: return "void";
        case BaseKind::Bool: return "bool";
        case BaseKind::Enum: return t.enum_name;
      }
      return "?";
    case DeclKind::Class:
      if (t.class_arg) return t.class_name + "<" + print_type(t.class_arg) + ">";
      return t.class_name;
    case DeclKind::GenericAlpha:
      return t.class_name;
  }
  return "?";
}

bool agree(const DeclaredType& declared, const TypeExprPtr& t) {
  if (!t) return false;
  switch (declared.kind) {
    case DeclKind::Base:
      return t->kind == TypeKind::Base && t->base == declared.base &&
             t->enum_name == declared.enum_name;
    case DeclKind::Class:
      if (t->kind == TypeKind::Bottom) return true;
      if (t->kind != TypeKind::Typestate) return false;
      if (t->class_name != declared.class_name) return false;
      if (declared.class_arg) return type_equal(declared.class_arg, t->type_arg);
      return !t->type_arg || t->type_arg->kind == TypeKind::Bottom;
    case DeclKind::GenericAlpha:
      // The generic class variable only matches null; concrete values are
      // passed through parameters typed a[b], not stored directly.
      return t->kind == TypeKind::Bottom;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Values and expressions
// ---------------------------------------------------------------------------

Value value_unit() { return Value{ValueKind::Unit}; }
Value value_bool(bool b) { return Value{ValueKind::Bool, b}; }
Value value_label(std::string l) { return Value{ValueKind::Label, false, std::move(l)}; }
Value value_null() { return Value{ValueKind::Null}; }
Value value_object(std::string o) { return Value{ValueKind::Object, false, {}, std::move(o)}; }

bool value_equal(const Value& a, const Value& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ValueKind::Unit:
    case ValueKind::Null:
      return true;
    case ValueKind::Bool:
      return a.b == b.b;
    case ValueKind::Label:
      return a.label == b.label;
    case ValueKind::Object:
      return a.object == b.object;
  }
  return false;
}

std::string print_value(const Value& v) {
  switch (v.kind) {
    case ValueKind::Unit: return "unit";
    case ValueKind::Bool: return v.b ? "true" : "false";
    case ValueKind::Label: return v.label;
    case ValueKind::Null: return "null";
    case ValueKind::Object: return v.object;
  }
  return "?";
}

static ExprPtr mk(Expr e) { return std::make_shared<Expr>(std::move(e)); }

ExprPtr expr_value(Value v, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Val;
  e.span = sp;
  e.value = std::move(v);
  return mk(std::move(e));
}

ExprPtr expr_param(std::string x, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Param;
  e.span = sp;
  e.name = std::move(x);
  return mk(std::move(e));
}

ExprPtr expr_field(std::string f, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Field;
  e.span = sp;
  e.name = std::move(f);
  return mk(std::move(e));
}

ExprPtr expr_new(std::string cls, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::New;
  e.span = sp;
  e.name = std::move(cls);
  return mk(std::move(e));
}

ExprPtr expr_new_gen(std::string cls, TypeExprPtr g, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::NewGen;
  e.span = sp;
  e.name = std::move(cls);
  e.generic_arg = std::move(g);
  return mk(std::move(e));
}

ExprPtr expr_assign(std::string f, ExprPtr rhs, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Assign;
  e.span = sp;
  e.name = std::move(f);
  e.a = std::move(rhs);
  return mk(std::move(e));
}

ExprPtr expr_call(RecvKind rk, std::string recv, std::string m, ExprPtr arg, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Call;
  e.span = sp;
  e.recv_kind = rk;
  e.recv = std::move(recv);
  e.method = std::move(m);
  e.a = std::move(arg);
  return mk(std::move(e));
}

ExprPtr expr_seq(ExprPtr a, ExprPtr b, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Seq;
  e.span = sp;
  e.a = std::move(a);
  e.b = std::move(b);
  return mk(std::move(e));
}

ExprPtr expr_if(ExprPtr c, ExprPtr t, ExprPtr f, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::If;
  e.span = sp;
  e.a = std::move(c);
  e.b = std::move(t);
  e.c = std::move(f);
  return mk(std::move(e));
}

ExprPtr expr_switch(RecvKind rk, std::string recv, std::string m, ExprPtr scrut,
                    std::vector<std::pair<std::string, ExprPtr>> branches, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Switch;
  e.span = sp;
  e.recv_kind = rk;
  e.recv = std::move(recv);
  e.method = std::move(m);
  e.a = std::move(scrut);
  e.branches = std::move(branches);
  return mk(std::move(e));
}

ExprPtr expr_label(std::string k, ExprPtr body, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Label;
  e.span = sp;
  e.name = std::move(k);
  e.a = std::move(body);
  return mk(std::move(e));
}

ExprPtr expr_continue(std::string k, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Continue;
  e.span = sp;
  e.name = std::move(k);
  return mk(std::move(e));
}

ExprPtr expr_return(ExprPtr body, SourceSpan sp) {
  Expr e;
  e.kind = ExprKind::Return;
  e.span = sp;
  e.a = std::move(body);
  return mk(std::move(e));
}

bool is_value(const ExprPtr& e) { return e && e->kind == ExprKind::Val; }

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::Val:
      return value_equal(a->value, b->value);
    case ExprKind::Param:
    case ExprKind::Field:
    case ExprKind::New:
    case ExprKind::Continue:
      return a->name == b->name;
    case ExprKind::NewGen:
      return a->name == b->name && type_equal(a->generic_arg, b->generic_arg);
    case ExprKind::Assign:
    case ExprKind::Label:
      return a->name == b->name && expr_equal(a->a, b->a);
    case ExprKind::Call:
      return a->recv_kind == b->recv_kind && a->recv == b->recv && a->method == b->method &&
             expr_equal(a->a, b->a);
    case ExprKind::Seq:
      return expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
    case ExprKind::If:
      return expr_equal(a->a, b->a) && expr_equal(a->b, b->b) && expr_equal(a->c, b->c);
    case ExprKind::Switch: {
      if (a->recv_kind != b->recv_kind || a->recv != b->recv || a->method != b->method)
        return false;
      if (!expr_equal(a->a, b->a)) return false;
      if (a->branches.size() != b->branches.size()) return false;
      for (size_t i = 0; i < a->branches.size(); ++i) {
        if (a->branches[i].first != b->branches[i].first) return false;
        if (!expr_equal(a->branches[i].second, b->branches[i].second)) return false;
      }
      return true;
    }
    case ExprKind::Return:
      return expr_equal(a->a, b->a);
  }
  return false;
}

static void objects_rec(const ExprPtr& e, std::vector<std::string>& out) {
  if (!e) return;
  if (e->kind == ExprKind::Val && e->value.kind == ValueKind::Object)
    out.push_back(e->value.object);
  if (e->kind == ExprKind::Call && e->recv_kind == RecvKind::Object) out.push_back(e->recv);
  if (e->kind == ExprKind::Switch && e->recv_kind == RecvKind::Object) out.push_back(e->recv);
  objects_rec(e->a, out);
  objects_rec(e->b, out);
  objects_rec(e->c, out);
  if (e->kind == ExprKind::Switch)
    for (const auto& [_, br] : e->branches) objects_rec(br, out);
}

std::vector<std::string> objects_of(const ExprPtr& e) {
  std::vector<std::string> out;
  objects_rec(e, out);
  return out;
}

int returns_of(const ExprPtr& e) {
  if (!e) return 0;
  int n = e->kind == ExprKind::Return ? 1 : 0;
  n += returns_of(e->a) + returns_of(e->b) + returns_of(e->c);
  if (e->kind == ExprKind::Switch)
    for (const auto& [_, br] : e->branches) n += returns_of(br);
  return n;
}

// Returns may only sit on the active (first-evaluated) path.
static bool returns_well_placed(const ExprPtr& e) {
  if (!e) return true;
  switch (e->kind) {
    case ExprKind::Seq:
      return returns_well_placed(e->a) && returns_of(e->b) == 0 && returns_well_placed(e->b);
    case ExprKind::If:
      return returns_well_placed(e->a) && returns_of(e->b) == 0 && returns_of(e->c) == 0 &&
             returns_well_placed(e->b) && returns_well_placed(e->c);
    case ExprKind::Switch: {
      if (!returns_well_placed(e->a)) return false;
      for (const auto& [_, br] : e->branches)
        if (returns_of(br) != 0 || !returns_well_placed(br)) return false;
      return true;
    }
    default:
      return returns_well_placed(e->a) && returns_well_placed(e->b) && returns_well_placed(e->c);
  }
}

// The body of the innermost return along the active path.
static ExprPtr innermost_return_body(const ExprPtr& e) {
  if (!e) return nullptr;
  ExprPtr found;
  for (ExprPtr cur = e; cur;) {
    if (cur->kind == ExprKind::Return) {
      found = cur->a;
      cur = cur->a;
      continue;
    }
    // descend the active child
    cur = cur->a;
  }
  return found;
}

bool well_formed_expression(const ExprPtr& e, std::vector<std::string>* why) {
  bool ok = true;
  if (!returns_well_placed(e)) {
    ok = false;
    if (why) why->push_back("return occurs off the active path");
  }
  auto objs = objects_of(e);
  std::set<std::string> uniq(objs.begin(), objs.end());
  if (uniq.size() != objs.size()) {
    ok = false;
    if (why) why->push_back("duplicate object reference in expression");
  }
  if (returns_of(e) > 0) {
    auto inner = innermost_return_body(e);
    auto inner_objs = objects_of(inner);
    std::multiset<std::string> a(objs.begin(), objs.end()), b(inner_objs.begin(), inner_objs.end());
    if (a != b) {
      ok = false;
      if (why) why->push_back("object reference outside the innermost return");
    }
  }
  return ok;
}

ExprPtr substitute_continue(const ExprPtr& e, const std::string& k, const ExprPtr& replacement) {
  if (!e) return e;
  if (e->kind == ExprKind::Continue) return e->name == k ? replacement : e;
  if (e->kind == ExprKind::Label && e->name == k) return e;  // shadowed
  Expr out = *e;
  out.a = substitute_continue(e->a, k, replacement);
  out.b = substitute_continue(e->b, k, replacement);
  out.c = substitute_continue(e->c, k, replacement);
  if (e->kind == ExprKind::Switch)
    for (auto& [_, br] : out.branches) br = substitute_continue(br, k, replacement);
  return mk(std::move(out));
}

std::string expr_head(const ExprPtr& e) {
  if (!e) return "<null>";
  switch (e->kind) {
    case ExprKind::Val: return "val " + print_value(e->value);
    case ExprKind::Param: return "param " + e->name;
    case ExprKind::Field: return "field " + e->name;
    case ExprKind::New: return "new " + e->name;
    case ExprKind::NewGen: return "new " + e->name + "<" + print_type(e->generic_arg) + ">";
    case ExprKind::Assign: return "assign " + e->name;
    case ExprKind::Call: return "call " + e->recv + "." + e->method;
    case ExprKind::Seq: return "seq";
    case ExprKind::If: return "if";
    case ExprKind::Switch: return "switch " + e->recv + "." + e->method;
    case ExprKind::Label: return "label " + e->name;
    case ExprKind::Continue: return "continue " + e->name;
    case ExprKind::Return: return "return";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Declarations and class information
// ---------------------------------------------------------------------------

const ClassDecl* Program::find_class(const std::string& name) const {
  for (const auto& c : classes)
    if (c.name == name) return &c;
  return nullptr;
}

const EnumDecl* Program::find_enum(const std::string& name) const {
  for (const auto& e : enums)
    if (e.name == name) return &e;
  return nullptr;
}

const EnumDecl* Program::enum_of_label(const std::string& label) const {
  for (const auto& e : enums)
    for (const auto& l : e.labels)
      if (l == label) return &e;
  return nullptr;
}

static bool method_equal(const MethodDecl& a, const MethodDecl& b) {
  return a.name == b.name && a.param_name == b.param_name &&
         type_equal(a.param_type, b.param_type) && type_equal(a.return_type, b.return_type) &&
         expr_equal(a.body, b.body);
}

bool program_equal(const Program& a, const Program& b) {
  if (a.enums.size() != b.enums.size() || a.classes.size() != b.classes.size()) return false;
  for (size_t i = 0; i < a.enums.size(); ++i)
    if (a.enums[i].name != b.enums[i].name || a.enums[i].labels != b.enums[i].labels)
      return false;
  for (size_t i = 0; i < a.classes.size(); ++i) {
    const auto& ca = a.classes[i];
    const auto& cb = b.classes[i];
    if (ca.name != cb.name || ca.generic != cb.generic) return false;
    if (!usage_body_equal(ca.usage.body, cb.usage.body)) return false;
    if (ca.usage.equations.size() != cb.usage.equations.size()) return false;
    {
      auto it = cb.usage.equations.begin();
      for (const auto& [x, rhs] : ca.usage.equations) {
        if (it->first != x || !usage_body_equal(rhs, it->second)) return false;
        ++it;
      }
    }
    if (ca.fields.size() != cb.fields.size() || ca.methods.size() != cb.methods.size())
      return false;
    for (size_t j = 0; j < ca.fields.size(); ++j)
      if (ca.fields[j].name != cb.fields[j].name ||
          !declared_type_equal(ca.fields[j].type, cb.fields[j].type))
        return false;
    for (size_t j = 0; j < ca.methods.size(); ++j)
      if (!method_equal(ca.methods[j], cb.methods[j])) return false;
  }
  return true;
}

const FieldDecl* ClassInfo::find_field(const std::string& name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f;
  return nullptr;
}

const MethodDecl* ClassInfo::find_method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.name == name) return &m;
  return nullptr;
}

// Substitution of the generic pair (alpha, beta) by an instantiation
// argument, applied through types and expressions.
namespace {

struct Subst {
  std::string alpha, beta;
  TypeExprPtr arg;
};

TypeExprPtr subst_type(const TypeExprPtr& t, const Subst& s) {
  if (!t) return t;
  switch (t->kind) {
    case TypeKind::GenericVar:
      if (t->alpha == s.alpha && t->beta == s.beta) return s.arg;
      return t;
    case TypeKind::Typestate:
      if (t->type_arg && t->type_arg->kind != TypeKind::Bottom) {
        TypeExpr out = *t;
        out.type_arg = subst_type(t->type_arg, s);
        return std::make_shared<TypeExpr>(std::move(out));
      }
      return t;
    default:
      return t;
  }
}

DeclaredType subst_declared(const DeclaredType& d, const Subst& s) {
  if (d.kind == DeclKind::GenericAlpha && d.class_name == s.alpha) {
    DeclaredType out;
    if (s.arg->kind == TypeKind::Typestate) {
      out.kind = DeclKind::Class;
      out.class_name = s.arg->class_name;
      if (s.arg->type_arg && s.arg->type_arg->kind != TypeKind::Bottom)
        out.class_arg = s.arg->type_arg;
    } else if (s.arg->kind == TypeKind::GenericVar) {
      out.kind = DeclKind::GenericAlpha;
      out.class_name = s.arg->alpha;
    } else {
      out = d;
    }
    return out;
  }
  if (d.kind == DeclKind::Class && d.class_arg) {
    DeclaredType out = d;
    out.class_arg = subst_type(d.class_arg, s);
    return out;
  }
  return d;
}

ExprPtr subst_expr(const ExprPtr& e, const Subst& s) {
  if (!e) return e;
  Expr out = *e;
  if (e->kind == ExprKind::NewGen) out.generic_arg = subst_type(e->generic_arg, s);
  out.a = subst_expr(e->a, s);
  out.b = subst_expr(e->b, s);
  out.c = subst_expr(e->c, s);
  if (e->kind == ExprKind::Switch)
    for (auto& [_, br] : out.branches) br = subst_expr(br, s);
  return std::make_shared<Expr>(std::move(out));
}

}  // namespace

std::optional<ClassInfo> class_info(const Program& prog, const std::string& name,
                                    const TypeExprPtr& arg, ClassInfoError* err) {
  if (name == kTopClassName) {
    // The opaque typestate offers nothing.
    ClassInfo info;
    info.view = ClassView{kTopClassName, type_bottom()};
    info.usage = top_usage();
    return info;
  }
  const ClassDecl* decl = prog.find_class(name);
  if (!decl) {
    if (err) *err = {DiagCode::UnknownClass, "unknown class " + name};
    return std::nullopt;
  }
  bool has_arg = arg && arg->kind != TypeKind::Bottom;
  if (decl->generic.has_value() != has_arg) {
    if (err)
      *err = {DiagCode::ArityMismatch,
              has_arg ? "class " + name + " is not generic"
                      : "generic class " + name + " used without instantiation"};
    return std::nullopt;
  }
  ClassInfo info;
  info.view = ClassView{name, has_arg ? arg : type_bottom()};
  info.usage = decl->usage;
  info.fields = decl->fields;
  info.methods = decl->methods;
  if (has_arg) {
    Subst s{decl->generic->first, decl->generic->second, arg};
    for (auto& f : info.fields) f.type = subst_declared(f.type, s);
    for (auto& m : info.methods) {
      m.param_type = subst_type(m.param_type, s);
      m.return_type = subst_type(m.return_type, s);
      m.body = subst_expr(m.body, s);
    }
  }
  return info;
}

Value init_value(const DeclaredType& t) {
  switch (t.kind) {
    case DeclKind::Base:
      switch (t.base) {
        case BaseKind::Void: return value_unit();
        case BaseKind::Bool: return value_bool(false);
        case BaseKind::Enum: return value_null();  // rejected at parse time
      }
      return value_null();
    case DeclKind::Class:
    case DeclKind::GenericAlpha:
      return value_null();
  }
  return value_null();
}

TypeExprPtr init_type(const DeclaredType& t) {
  switch (t.kind) {
    case DeclKind::Base:
      switch (t.base) {
        case BaseKind::Void: return type_void();
        case BaseKind::Bool: return type_bool();
        case BaseKind::Enum: return type_bottom();  // rejected at parse time
      }
      return type_bottom();
    case DeclKind::Class:
    case DeclKind::GenericAlpha:
      return type_bottom();
  }
  return type_bottom();
}

}  // namespace mungo
