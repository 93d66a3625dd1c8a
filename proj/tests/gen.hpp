#pragma once

// Random term generators shared by the unit and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "mungo/ast.hpp"
#include "mungo/parser.hpp"

namespace mungo::testgen {

using Rng = std::mt19937;

inline int pick(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool chance(Rng& rng, int percent) { return pick(rng, 1, 100) <= percent; }

// ---------------------------------------------------------------------------
// Random usages: every variable bound, every equation guarded by a branch,
// so unfolding always terminates.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& usage_methods() {
  static const std::vector<std::string> ms = {"m0", "m1", "m2", "m3"};
  return ms;
}

inline const std::vector<std::string>& usage_labels() {
  static const std::vector<std::string> ls = {"l0", "l1", "l2"};
  return ls;
}

inline UsageBodyPtr gen_usage_u(Rng& rng, const std::vector<std::string>& vars, int depth);

inline UsageBodyPtr gen_usage_w(Rng& rng, const std::vector<std::string>& vars, int depth) {
  if (depth > 0 && chance(rng, 25)) {
    std::map<std::string, UsageBodyPtr> entries;
    int n = pick(rng, 1, 2);
    for (int i = 0; i < n; ++i)
      entries[usage_labels()[static_cast<size_t>(pick(rng, 0, 2))]] =
          gen_usage_u(rng, vars, depth - 1);
    return usage_choice(std::move(entries));
  }
  return gen_usage_u(rng, vars, depth);
}

inline UsageBodyPtr gen_usage_u(Rng& rng, const std::vector<std::string>& vars, int depth) {
  if (depth <= 0) {
    if (!vars.empty() && chance(rng, 40))
      return usage_var(vars[static_cast<size_t>(pick(rng, 0, static_cast<int>(vars.size()) - 1))]);
    return usage_end();
  }
  int roll = pick(rng, 1, 10);
  if (roll <= 2 && !vars.empty())
    return usage_var(vars[static_cast<size_t>(pick(rng, 0, static_cast<int>(vars.size()) - 1))]);
  if (roll == 3) return usage_end();
  std::map<std::string, UsageBodyPtr> entries;
  int n = pick(rng, 1, 3);
  for (int i = 0; i < n; ++i)
    entries[usage_methods()[static_cast<size_t>(pick(rng, 0, 3))]] =
        gen_usage_w(rng, vars, depth - 1);
  return usage_branch(std::move(entries));
}

// A usage whose head is a recursion variable, for unfolding tests.
inline Usage gen_recursive_usage(Rng& rng) {
  int nvars = pick(rng, 1, 3);
  std::vector<std::string> vars;
  for (int i = 0; i < nvars; ++i) vars.push_back("X" + std::to_string(i));
  Usage u;
  u.body = usage_var(vars[static_cast<size_t>(pick(rng, 0, nvars - 1))]);
  for (const auto& x : vars) {
    // guard every equation with a branch: unfolding is always productive
    std::map<std::string, UsageBodyPtr> entries;
    int n = pick(rng, 1, 3);
    for (int i = 0; i < n; ++i)
      entries[usage_methods()[static_cast<size_t>(pick(rng, 0, 3))]] =
          gen_usage_w(rng, vars, 2);
    u.equations[x] = usage_branch(std::move(entries));
  }
  return u;
}

// ---------------------------------------------------------------------------
// Random programs in printer-canonical shape, for round-trip testing. The
// generated tree uses only declared names, so it both prints and re-parses.
// ---------------------------------------------------------------------------

struct GenClass {
  std::string name;
  std::vector<std::string> bool_fields;
  // object fields: name -> class they hold
  std::vector<std::pair<std::string, std::string>> obj_fields;
  std::vector<std::string> methods;
};

struct GenCtx {
  Rng& rng;
  std::vector<GenClass> classes;  // classes declared so far
  const GenClass* self = nullptr;
  bool param_is_bool = false;
  int next_label = 0;
  std::vector<std::string> loop_labels;
};

inline ExprPtr gen_expr(GenCtx& cx, int depth);

inline ExprPtr gen_terminal(GenCtx& cx) {
  switch (pick(cx.rng, 1, 6)) {
    case 1: return expr_value(value_unit());
    case 2: return expr_value(value_bool(true));
    case 3: return expr_value(value_bool(false));
    case 4:
      if (!cx.self->bool_fields.empty())
        return expr_field(cx.self->bool_fields[static_cast<size_t>(
            pick(cx.rng, 0, static_cast<int>(cx.self->bool_fields.size()) - 1))]);
      return expr_value(value_unit());
    case 5: return expr_param("x");
    default:
      if (chance(cx.rng, 50)) return expr_value(value_label("L0"));
      return expr_value(value_label("L1"));
  }
}

inline const GenClass* class_named(const GenCtx& cx, const std::string& name) {
  for (const auto& c : cx.classes)
    if (c.name == name) return &c;
  return nullptr;
}

inline ExprPtr gen_expr(GenCtx& cx, int depth) {
  if (depth <= 0) return gen_terminal(cx);
  switch (pick(cx.rng, 1, 9)) {
    case 1: {  // assignment
      if (!cx.self->obj_fields.empty() && chance(cx.rng, 40)) {
        auto& [f, cls] = cx.self->obj_fields[static_cast<size_t>(
            pick(cx.rng, 0, static_cast<int>(cx.self->obj_fields.size()) - 1))];
        ExprPtr rhs = chance(cx.rng, 50) ? expr_new(cls) : expr_value(value_null());
        return expr_assign(f, std::move(rhs));
      }
      if (cx.self->bool_fields.empty()) return gen_terminal(cx);
      std::string f = cx.self->bool_fields[static_cast<size_t>(
          pick(cx.rng, 0, static_cast<int>(cx.self->bool_fields.size()) - 1))];
      return expr_assign(f, gen_expr(cx, depth - 1));
    }
    case 2: {  // method call on an object field
      if (cx.self->obj_fields.empty()) return gen_terminal(cx);
      auto& [f, cls] = cx.self->obj_fields[static_cast<size_t>(
          pick(cx.rng, 0, static_cast<int>(cx.self->obj_fields.size()) - 1))];
      const GenClass* callee = class_named(cx, cls);
      if (!callee || callee->methods.empty()) return gen_terminal(cx);
      std::string m = callee->methods[static_cast<size_t>(
          pick(cx.rng, 0, static_cast<int>(callee->methods.size()) - 1))];
      return expr_call(RecvKind::Field, f, m, gen_expr(cx, depth - 1));
    }
    case 3:
      return expr_seq(gen_expr(cx, depth - 1), gen_expr(cx, depth - 1));
    case 4:
      return expr_if(gen_expr(cx, depth - 1), gen_expr(cx, depth - 1),
                     gen_expr(cx, depth - 1));
    case 5: {  // switch over a call on an object field
      if (cx.self->obj_fields.empty()) return gen_terminal(cx);
      auto& [f, cls] = cx.self->obj_fields[static_cast<size_t>(
          pick(cx.rng, 0, static_cast<int>(cx.self->obj_fields.size()) - 1))];
      const GenClass* callee = class_named(cx, cls);
      if (!callee || callee->methods.empty()) return gen_terminal(cx);
      std::string m = callee->methods[static_cast<size_t>(
          pick(cx.rng, 0, static_cast<int>(callee->methods.size()) - 1))];
      ExprPtr scrut = expr_call(RecvKind::Field, f, m, gen_expr(cx, depth - 1));
      std::vector<std::pair<std::string, ExprPtr>> branches;
      branches.emplace_back("L0", gen_expr(cx, depth - 1));
      if (chance(cx.rng, 60)) branches.emplace_back("L1", gen_expr(cx, depth - 1));
      return expr_switch(RecvKind::Field, f, m, std::move(scrut), std::move(branches));
    }
    case 6: {  // loop
      std::string k = "k" + std::to_string(cx.next_label++);
      cx.loop_labels.push_back(k);
      ExprPtr body = gen_expr(cx, depth - 1);
      cx.loop_labels.pop_back();
      return expr_label(k, std::move(body));
    }
    case 7:
      if (!cx.loop_labels.empty())
        return expr_continue(cx.loop_labels.back());
      return gen_terminal(cx);
    default:
      return gen_terminal(cx);
  }
}

inline Program gen_program(unsigned seed) {
  Rng rng(seed);
  Program p;
  EnumDecl en;
  en.name = "En";
  en.labels = {"L0", "L1"};
  p.enums.push_back(en);

  GenCtx cx{rng, {}, nullptr, false, 0, {}};
  int nclasses = pick(rng, 1, 3);
  for (int ci = 0; ci < nclasses; ++ci) {
    GenClass gc;
    gc.name = "C" + std::to_string(ci);
    int nb = pick(rng, 0, 2);
    for (int i = 0; i < nb; ++i) gc.bool_fields.push_back("b" + std::to_string(i));
    if (ci > 0 && chance(rng, 60)) {
      int target = pick(rng, 0, ci - 1);
      gc.obj_fields.emplace_back("o0", "C" + std::to_string(target));
    }
    int nm = pick(rng, 1, 3);
    for (int i = 0; i < nm; ++i) gc.methods.push_back("m" + std::to_string(i));

    ClassDecl d;
    d.name = gc.name;
    for (const auto& b : gc.bool_fields) {
      FieldDecl f;
      f.name = b;
      f.type.kind = DeclKind::Base;
      f.type.base = BaseKind::Bool;
      d.fields.push_back(f);
    }
    for (const auto& [f, cls] : gc.obj_fields) {
      FieldDecl fd;
      fd.name = f;
      fd.type.kind = DeclKind::Class;
      fd.type.class_name = cls;
      d.fields.push_back(fd);
    }
    cx.classes.push_back(gc);
    cx.self = &cx.classes.back();
    for (const auto& m : gc.methods) {
      MethodDecl md;
      md.name = m;
      md.param_name = "x";
      cx.param_is_bool = chance(rng, 50);
      md.param_type = cx.param_is_bool ? type_bool() : type_void();
      md.return_type = chance(rng, 50) ? type_bool() : type_void();
      cx.next_label = 0;
      md.body = gen_expr(cx, 3);
      d.methods.push_back(std::move(md));
    }
    // usage over the declared methods; canonical form drops dead equations
    {
      std::vector<std::string> vars = {"X0"};
      std::map<std::string, UsageBodyPtr> entries;
      int n = pick(rng, 1, static_cast<int>(gc.methods.size()));
      for (int i = 0; i < n; ++i)
        entries[gc.methods[static_cast<size_t>(
            pick(rng, 0, static_cast<int>(gc.methods.size()) - 1))]] =
            gen_usage_w(rng, vars, 2);
      Usage u;
      u.body = usage_branch(std::move(entries));
      std::map<std::string, UsageBodyPtr> rec;
      int rn = pick(rng, 1, 2);
      for (int i = 0; i < rn; ++i)
        rec[gc.methods[static_cast<size_t>(
            pick(rng, 0, static_cast<int>(gc.methods.size()) - 1))]] =
            gen_usage_w(rng, vars, 1);
      u.equations["X0"] = usage_branch(std::move(rec));
      d.usage = canonical_usage(u);
    }
    p.classes.push_back(std::move(d));
  }
  return p;
}

}  // namespace mungo::testgen
