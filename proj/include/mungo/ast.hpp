#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mungo/diagnostics.hpp"

namespace mungo {

// ---------------------------------------------------------------------------
// Usages
// ---------------------------------------------------------------------------

struct UsageBody;
using UsageBodyPtr = std::shared_ptr<const UsageBody>;

enum class UsageKind {
  End,     // protocol finished
  Top,     // opaque sentinel: not end, offers no transitions
  Var,     // recursion variable
  Branch,  // {m1; w1 ... mn; wn}
  Choice,  // <l1: u1 ... ln: un>
};

struct UsageBody {
  UsageKind kind = UsageKind::End;
  std::string var;                              // Var
  std::map<std::string, UsageBodyPtr> entries;  // Branch: method -> w, Choice: label -> u
};

using EquationMap = std::map<std::string, UsageBodyPtr>;

// A usage term together with its recursion equations: u^E.
struct Usage {
  UsageBodyPtr body;
  EquationMap equations;
};

UsageBodyPtr usage_end();
UsageBodyPtr usage_top();
UsageBodyPtr usage_var(std::string name);
UsageBodyPtr usage_branch(std::map<std::string, UsageBodyPtr> entries);
UsageBodyPtr usage_choice(std::map<std::string, UsageBodyPtr> entries);

Usage end_usage();
Usage top_usage();

bool usage_body_equal(const UsageBodyPtr& a, const UsageBodyPtr& b);

// Drops equations not reachable from the body; map order is already canonical.
Usage canonical_usage(const Usage& u);
bool usage_equal(const Usage& a, const Usage& b);

std::string print_usage_body(const UsageBodyPtr& u);
std::string print_usage(const Usage& u);

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct TypeExpr;
using TypeExprPtr = std::shared_ptr<const TypeExpr>;

enum class BaseKind { Void, Bool, Enum };

enum class TypeKind {
  Base,        // void, bool, enum L
  Typestate,   // C<t>[U]
  GenericVar,  // a[b]
  Bottom,      // type of null
};

struct TypeExpr {
  TypeKind kind = TypeKind::Bottom;
  BaseKind base = BaseKind::Void;  // Base
  std::string enum_name;           // Base with base == Enum
  std::string class_name;          // Typestate
  TypeExprPtr type_arg;            // Typestate: Bottom unless instantiated
  Usage usage;                     // Typestate
  std::string alpha, beta;         // GenericVar
};

TypeExprPtr type_void();
TypeExprPtr type_bool();
TypeExprPtr type_enum(std::string name);
TypeExprPtr type_bottom();
TypeExprPtr type_typestate(std::string class_name, TypeExprPtr arg, Usage usage);
TypeExprPtr type_generic_var(std::string alpha, std::string beta);

// The reserved opaque typestate a generic parameter is checked at.
extern const char* const kTopClassName;
TypeExprPtr type_top();

bool type_equal(const TypeExprPtr& a, const TypeExprPtr& b);
std::string print_type(const TypeExprPtr& t);

// A type is linear while its protocol still has work to do.
bool lin_type(const TypeExprPtr& t);
inline bool terminated_type(const TypeExprPtr& t) { return !lin_type(t); }

// Class view C<t>: a class name plus its instantiation argument (Bottom when
// the class is not generic).
struct ClassView {
  std::string name;
  TypeExprPtr arg;
};

bool class_view_equal(const ClassView& a, const ClassView& b);
std::string print_class_view(const ClassView& v);

// Declared field types: base type, class reference, or generic class variable.
enum class DeclKind { Base, Class, GenericAlpha };

struct DeclaredType {
  DeclKind kind = DeclKind::Base;
  BaseKind base = BaseKind::Void;  // Base
  std::string enum_name;           // Base with base == Enum
  std::string class_name;          // Class; GenericAlpha stores the variable here
  TypeExprPtr class_arg;           // Class: null when not instantiated
};

bool declared_type_equal(const DeclaredType& a, const DeclaredType& b);
std::string print_declared_type(const DeclaredType& t);

// Whether a declared field type accepts a value of the given type.
bool agree(const DeclaredType& declared, const TypeExprPtr& t);

// ---------------------------------------------------------------------------
// Values and expressions
// ---------------------------------------------------------------------------

enum class ValueKind { Unit, Bool, Label, Null, Object };

struct Value {
  ValueKind kind = ValueKind::Unit;
  bool b = false;
  std::string label;   // Label
  std::string object;  // Object
};

Value value_unit();
Value value_bool(bool b);
Value value_label(std::string l);
Value value_null();
Value value_object(std::string o);

bool value_equal(const Value& a, const Value& b);
std::string print_value(const Value& v);

enum class ExprKind {
  Val,
  Param,     // read the method parameter
  Field,     // read a field of the active object
  New,       // new C
  NewGen,    // new C<g>
  Assign,    // f = e
  Call,      // r.m(e)
  Seq,       // e; e
  If,        // if (e) { e } else { e }
  Switch,    // switch (r.m(e)) { l: e ... }
  Label,     // k: e
  Continue,  // continue k
  Return,    // return{e}, run-time only
};

enum class RecvKind { Param, Field, Object };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind = ExprKind::Val;
  SourceSpan span;
  Value value;             // Val
  std::string name;        // Param/Field/New/NewGen/Assign/Label/Continue
  TypeExprPtr generic_arg; // NewGen
  RecvKind recv_kind = RecvKind::Field;
  std::string recv;        // Call/Switch receiver (name, or object id)
  std::string method;      // Call/Switch
  ExprPtr a, b, c;         // children, by position
  std::vector<std::pair<std::string, ExprPtr>> branches;  // Switch
};

ExprPtr expr_value(Value v, SourceSpan sp = {});
ExprPtr expr_param(std::string x, SourceSpan sp = {});
ExprPtr expr_field(std::string f, SourceSpan sp = {});
ExprPtr expr_new(std::string cls, SourceSpan sp = {});
ExprPtr expr_new_gen(std::string cls, TypeExprPtr g, SourceSpan sp = {});
ExprPtr expr_assign(std::string f, ExprPtr rhs, SourceSpan sp = {});
ExprPtr expr_call(RecvKind rk, std::string recv, std::string m, ExprPtr arg,
                  SourceSpan sp = {});
ExprPtr expr_seq(ExprPtr a, ExprPtr b, SourceSpan sp = {});
ExprPtr expr_if(ExprPtr c, ExprPtr t, ExprPtr f, SourceSpan sp = {});
ExprPtr expr_switch(RecvKind rk, std::string recv, std::string m, ExprPtr scrut,
                    std::vector<std::pair<std::string, ExprPtr>> branches,
                    SourceSpan sp = {});
ExprPtr expr_label(std::string k, ExprPtr body, SourceSpan sp = {});
ExprPtr expr_continue(std::string k, SourceSpan sp = {});
ExprPtr expr_return(ExprPtr body, SourceSpan sp = {});

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
bool is_value(const ExprPtr& e);

// Multiset of object references occurring in an expression.
std::vector<std::string> objects_of(const ExprPtr& e);
// Number of return{...} nodes in an expression.
int returns_of(const ExprPtr& e);

// Structural sanity of (run-time) expressions: returns only on the active
// path, object references form a set, and all objects sit under the
// innermost return.
bool well_formed_expression(const ExprPtr& e, std::vector<std::string>* why = nullptr);

// Replaces `continue k` with the given replacement, stopping at nested
// binders of the same label.
ExprPtr substitute_continue(const ExprPtr& e, const std::string& k,
                            const ExprPtr& replacement);

// Short head form for traces, e.g. "call f.m".
std::string expr_head(const ExprPtr& e);

// ---------------------------------------------------------------------------
// Declarations
// ---------------------------------------------------------------------------

struct EnumDecl {
  std::string name;
  std::vector<std::string> labels;
  SourceSpan span;
};

struct FieldDecl {
  std::string name;
  DeclaredType type;
  SourceSpan span;
};

struct MethodDecl {
  std::string name;
  std::string param_name;
  TypeExprPtr param_type;
  TypeExprPtr return_type;
  ExprPtr body;
  SourceSpan span;
};

struct ClassDecl {
  std::string name;
  // (class variable, usage variable) for generic classes
  std::optional<std::pair<std::string, std::string>> generic;
  Usage usage;
  std::vector<FieldDecl> fields;
  std::vector<MethodDecl> methods;
  SourceSpan span;
};

struct Program {
  std::vector<EnumDecl> enums;
  std::vector<ClassDecl> classes;

  const ClassDecl* find_class(const std::string& name) const;
  const EnumDecl* find_enum(const std::string& name) const;
  // Enum a label belongs to, if any (labels are globally unique).
  const EnumDecl* enum_of_label(const std::string& label) const;
};

bool program_equal(const Program& a, const Program& b);

// ---------------------------------------------------------------------------
// Class information: declarations as seen through a class view, with the
// generic parameter substituted by the instantiation argument.
// ---------------------------------------------------------------------------

struct ClassInfo {
  ClassView view;
  Usage usage;
  std::vector<FieldDecl> fields;
  std::vector<MethodDecl> methods;

  const FieldDecl* find_field(const std::string& name) const;
  const MethodDecl* find_method(const std::string& name) const;
};

struct ClassInfoError {
  DiagCode code = DiagCode::UnknownClass;
  std::string message;
};

// arg: Bottom for plain classes, the instantiation for generic ones.
// Fails with UnknownClass or ArityMismatch.
std::optional<ClassInfo> class_info(const Program& prog, const std::string& name,
                                    const TypeExprPtr& arg,
                                    ClassInfoError* err = nullptr);

// Initial field contents and their types.
Value init_value(const DeclaredType& t);
TypeExprPtr init_type(const DeclaredType& t);

}  // namespace mungo
