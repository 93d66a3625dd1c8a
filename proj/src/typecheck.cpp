#include "mungo/typecheck.hpp"

#include <algorithm>

namespace mungo {

bool field_env_equal(const FieldTypeEnv& a, const FieldTypeEnv& b) {
  if (a.size() != b.size()) return false;
  auto it = b.begin();
  for (const auto& [f, t] : a) {
    if (it->first != f || !type_equal(t, it->second)) return false;
    ++it;
  }
  return true;
}

bool terminated_env(const FieldTypeEnv& env) {
  for (const auto& [_, t] : env)
    if (lin_type(t)) return false;
  return true;
}

std::string print_field_env(const FieldTypeEnv& env) {
  std::string s = "{";
  bool first = true;
  for (const auto& [f, t] : env) {
    if (!first) s += ", ";
    first = false;
    s += f + ": " + print_type(t);
  }
  return s + "}";
}

bool typing_state_equal(const TypingState& a, const TypingState& b) {
  if (a.lambda.size() != b.lambda.size()) return false;
  {
    auto it = b.lambda.begin();
    for (const auto& [o, ea] : a.lambda) {
      if (it->first != o || !class_view_equal(ea.cls, it->second.cls) ||
          !field_env_equal(ea.fields, it->second.fields))
        return false;
      ++it;
    }
  }
  if (a.env_o.size() != b.env_o.size()) return false;
  {
    auto it = b.env_o.begin();
    for (const auto& [o, t] : a.env_o) {
      if (it->first != o || !type_equal(t, it->second)) return false;
      ++it;
    }
  }
  if (a.stack.size() != b.stack.size()) return false;
  for (size_t i = 0; i < a.stack.size(); ++i) {
    const auto& fa = a.stack[i];
    const auto& fb = b.stack[i];
    if (fa.active != fb.active || fa.param != fb.param || !type_equal(fa.binding, fb.binding))
      return false;
  }
  return true;
}

namespace {

[[noreturn]] void bail(DiagCode code, const std::string& msg, SourceSpan sp = {}) {
  throw CheckError(Diagnostic{Severity::Error, code, msg, sp});
}

struct ExprChecker {
  const Program& prog;
  using Omega = std::map<std::string, TypingState>;

  ClassInfo info_for(const TypeExprPtr& ts, SourceSpan sp) const {
    ClassInfoError err;
    auto info = class_info(prog, ts->class_name, ts->type_arg, &err);
    if (!info) bail(err.code, err.message, sp);
    return *info;
  }

  TypeFrame& active_frame(TypingState& st, SourceSpan sp) const {
    if (st.stack.empty()) bail(DiagCode::WTPViolation, "expression has no frame", sp);
    return st.stack.front();
  }

  // --- receiver bindings (parameter, field of the active object, or a
  // tracked object reference) ---

  TypeExprPtr recv_type(TypingState& st, RecvKind rk, const std::string& name,
                        SourceSpan sp) const {
    switch (rk) {
      case RecvKind::Param: {
        auto& fr = active_frame(st, sp);
        if (fr.param != name || !fr.binding)
          bail(DiagCode::UndeclaredName, "unknown parameter " + name, sp);
        return fr.binding;
      }
      case RecvKind::Field: {
        auto& fr = active_frame(st, sp);
        auto it = st.lambda.find(fr.active);
        if (it == st.lambda.end())
          bail(DiagCode::WTHViolation, "active object " + fr.active + " untracked", sp);
        auto ft = it->second.fields.find(name);
        if (ft == it->second.fields.end())
          bail(DiagCode::FieldNotUnderstood, "no field " + name + " in class " +
                                                 print_class_view(it->second.cls),
               sp);
        return ft->second;
      }
      case RecvKind::Object: {
        auto it = st.env_o.find(name);
        if (it == st.env_o.end())
          bail(DiagCode::WTEViolation, "object " + name + " untracked", sp);
        return it->second;
      }
    }
    bail(DiagCode::TypeMismatch, "bad receiver", sp);
  }

  void set_recv_type(TypingState& st, RecvKind rk, const std::string& name,
                     const TypeExprPtr& t, SourceSpan sp) const {
    switch (rk) {
      case RecvKind::Param:
        active_frame(st, sp).binding = t;
        return;
      case RecvKind::Field:
        st.lambda[active_frame(st, sp).active].fields[name] = t;
        return;
      case RecvKind::Object:
        st.env_o[name] = t;
        return;
    }
  }

  DiagCode not_available_code(RecvKind rk) const {
    return rk == RecvKind::Param ? DiagCode::ParameterNotAvailable
                                 : DiagCode::FieldNotAvailable;
  }

  // --- joins across branches; looping arms impose no constraint ---

  ExprTyping join(std::vector<ExprTyping> arms, SourceSpan sp) const {
    const ExprTyping* first = nullptr;
    for (const auto& a : arms) {
      if (a.divergent) continue;
      if (!first) {
        first = &a;
        continue;
      }
      if (!type_equal(first->type, a.type))
        bail(DiagCode::BranchMismatch,
             "branches produce different types: " + print_type(first->type) + " vs " +
                 print_type(a.type),
             sp);
      if (!typing_state_equal(first->state, a.state))
        bail(DiagCode::BranchMismatch, "branches leave different typings", sp);
    }
    if (!first) return ExprTyping{true, nullptr, {}};
    return *first;
  }

  ExprTyping check(TypingState st, Omega omega, const ExprPtr& e) const {
    switch (e->kind) {
      case ExprKind::Val:
        switch (e->value.kind) {
          case ValueKind::Unit:
            return {false, type_void(), std::move(st)};
          case ValueKind::Bool:
            return {false, type_bool(), std::move(st)};
          case ValueKind::Null:
            return {false, type_bottom(), std::move(st)};
          case ValueKind::Label: {
            const EnumDecl* en = prog.enum_of_label(e->value.label);
            if (!en) bail(DiagCode::UndeclaredName, "unknown label " + e->value.label, e->span);
            return {false, type_enum(en->name), std::move(st)};
          }
          case ValueKind::Object: {
            auto it = st.env_o.find(e->value.object);
            if (it == st.env_o.end())
              bail(DiagCode::WTEViolation, "object " + e->value.object + " untracked",
                   e->span);
            TypeExprPtr t = it->second;
            st.env_o.erase(it);
            return {false, t, std::move(st)};
          }
        }
        bail(DiagCode::TypeMismatch, "bad value", e->span);

      case ExprKind::Param: {
        auto& fr = active_frame(st, e->span);
        if (fr.param != e->name || !fr.binding)
          bail(DiagCode::UndeclaredName, "unknown parameter " + e->name, e->span);
        TypeExprPtr t = fr.binding;
        if (lin_type(t)) fr.binding = type_bottom();
        return {false, t, std::move(st)};
      }

      case ExprKind::Field: {
        auto& fr = active_frame(st, e->span);
        auto it = st.lambda.find(fr.active);
        if (it == st.lambda.end())
          bail(DiagCode::WTHViolation, "active object " + fr.active + " untracked", e->span);
        auto ft = it->second.fields.find(e->name);
        if (ft == it->second.fields.end())
          bail(DiagCode::FieldNotUnderstood, "no field " + e->name + " in class " +
                                                 print_class_view(it->second.cls),
               e->span);
        TypeExprPtr t = ft->second;
        if (lin_type(t)) ft->second = type_bottom();
        return {false, t, std::move(st)};
      }

      case ExprKind::New: {
        ClassInfoError err;
        auto info = class_info(prog, e->name, nullptr, &err);
        if (!info) bail(err.code, err.message, e->span);
        return {false, type_typestate(e->name, nullptr, info->usage), std::move(st)};
      }

      case ExprKind::NewGen: {
        ClassInfoError err;
        auto info = class_info(prog, e->name, e->generic_arg, &err);
        if (!info) bail(err.code, err.message, e->span);
        return {false, type_typestate(e->name, e->generic_arg, info->usage), std::move(st)};
      }

      case ExprKind::Assign: {
        ExprTyping rhs = check(std::move(st), omega, e->a);
        if (rhs.divergent) return rhs;
        TypingState s = std::move(rhs.state);
        auto& fr = active_frame(s, e->span);
        auto lam = s.lambda.find(fr.active);
        if (lam == s.lambda.end())
          bail(DiagCode::WTHViolation, "active object " + fr.active + " untracked", e->span);
        ClassInfo info = info_for(
            type_typestate(lam->second.cls.name, lam->second.cls.arg, end_usage()), e->span);
        const FieldDecl* fd = info.find_field(e->name);
        if (!fd)
          bail(DiagCode::FieldNotUnderstood,
               "no field " + e->name + " in class " + print_class_view(lam->second.cls),
               e->span);
        auto cur = lam->second.fields.find(e->name);
        if (cur == lam->second.fields.end())
          bail(DiagCode::FieldNotUnderstood, "field " + e->name + " untracked", e->span);
        if (lin_type(cur->second))
          bail(DiagCode::FieldMisused,
               "field " + e->name + " overwritten while its protocol is unfinished (" +
                   print_type(cur->second) + ")",
               e->span);
        if (!agree(fd->type, rhs.type))
          bail(DiagCode::TypeMismatch, "cannot store " + print_type(rhs.type) +
                                           " in field " + e->name + " of type " +
                                           print_declared_type(fd->type),
               e->span);
        cur->second = rhs.type;
        return {false, type_void(), std::move(s)};
      }

      case ExprKind::Call: {
        ExprTyping arg = check(std::move(st), omega, e->a);
        if (arg.divergent) return arg;
        TypingState s = std::move(arg.state);
        TypeExprPtr rt = recv_type(s, e->recv_kind, e->recv, e->span);
        if (rt->kind == TypeKind::Bottom)
          bail(not_available_code(e->recv_kind),
               "call " + e->recv + "." + e->method + " through null", e->span);
        if (rt->kind == TypeKind::GenericVar)
          bail(DiagCode::MethodNotAvailable,
               "receiver " + e->recv + " has opaque protocol " + print_type(rt), e->span);
        if (rt->kind != TypeKind::Typestate)
          bail(DiagCode::MethodNotUnderstood,
               "receiver " + e->recv + " of type " + print_type(rt) + " has no methods",
               e->span);
        if (rt->class_name == kTopClassName)
          bail(DiagCode::MethodNotAvailable,
               "receiver " + e->recv + " has opaque protocol, no method is available",
               e->span);
        ClassInfo info = info_for(rt, e->span);
        const MethodDecl* md = info.find_method(e->method);
        if (!md)
          bail(DiagCode::MethodNotUnderstood,
               "class " + print_class_view(info.view) + " has no method " + e->method,
               e->span);
        std::optional<UsageState> next;
        try {
          next = step_method(rt->usage, e->method);
        } catch (const UsageError& ue) {
          bail(ue.code, ue.what(), e->span);
        }
        if (!next)
          bail(DiagCode::MethodNotAvailable,
               "protocol " + print_usage(rt->usage) + " of " + e->recv +
                   " does not allow " + e->method,
               e->span);
        if (!type_equal(arg.type, md->param_type))
          bail(DiagCode::TypeMismatch, "argument of " + e->method + " has type " +
                                           print_type(arg.type) + ", expected " +
                                           print_type(md->param_type),
               e->span);
        set_recv_type(s, e->recv_kind, e->recv,
                      type_typestate(rt->class_name, rt->type_arg, *next), e->span);
        return {false, md->return_type, std::move(s)};
      }

      case ExprKind::Seq: {
        ExprTyping left = check(std::move(st), omega, e->a);
        if (left.divergent) return left;
        if (lin_type(left.type))
          bail(DiagCode::LinearValueDropped,
               "discarded value still has protocol " + print_type(left.type), e->span);
        return check(std::move(left.state), std::move(omega), e->b);
      }

      case ExprKind::If: {
        ExprTyping cond = check(std::move(st), omega, e->a);
        if (cond.divergent) return cond;
        if (!type_equal(cond.type, type_bool()))
          bail(DiagCode::TypeMismatch,
               "condition has type " + print_type(cond.type) + ", expected bool", e->span);
        std::vector<ExprTyping> arms;
        arms.push_back(check(cond.state, omega, e->b));
        arms.push_back(check(cond.state, omega, e->c));
        return join(std::move(arms), e->span);
      }

      case ExprKind::Switch: {
        ExprTyping scrut = check(std::move(st), omega, e->a);
        if (scrut.divergent) return scrut;
        if (!scrut.type || scrut.type->kind != TypeKind::Base ||
            scrut.type->base != BaseKind::Enum)
          bail(DiagCode::TypeMismatch,
               "switch scrutinee has type " + print_type(scrut.type) + ", expected an enum",
               e->span);
        const EnumDecl* en = prog.find_enum(scrut.type->enum_name);
        if (!en) bail(DiagCode::UndeclaredName, "unknown enum " + scrut.type->enum_name,
                      e->span);
        TypingState s = std::move(scrut.state);
        TypeExprPtr rt = recv_type(s, e->recv_kind, e->recv, e->span);
        if (!rt || rt->kind != TypeKind::Typestate ||
            rt->usage.body->kind != UsageKind::Choice)
          bail(DiagCode::SwitchLabelMismatch,
               "switch receiver " + e->recv + " does not offer a choice (" +
                   print_type(rt) + ")",
               e->span);
        std::set<std::string> choice_labels, branch_labels;
        for (const auto& [l, _] : rt->usage.body->entries) choice_labels.insert(l);
        for (const auto& [l, _] : e->branches) branch_labels.insert(l);
        if (choice_labels != branch_labels)
          bail(DiagCode::SwitchLabelMismatch,
               "switch branches do not match the offered labels " +
                   print_usage_body(rt->usage.body),
               e->span);
        for (const auto& l : branch_labels)
          if (std::find(en->labels.begin(), en->labels.end(), l) == en->labels.end())
            bail(DiagCode::SwitchLabelMismatch,
                 "label " + l + " is not part of enum " + en->name, e->span);
        std::vector<ExprTyping> arms;
        for (const auto& [l, body] : e->branches) {
          TypingState sb = s;
          set_recv_type(sb, e->recv_kind, e->recv,
                        type_typestate(rt->class_name, rt->type_arg,
                                       Usage{rt->usage.body->entries.at(l),
                                             rt->usage.equations}),
                        e->span);
          arms.push_back(check(std::move(sb), omega, body));
        }
        return join(std::move(arms), e->span);
      }

      case ExprKind::Label: {
        omega[e->name] = st;
        ExprTyping body = check(std::move(st), omega, e->a);
        if (body.divergent) return body;
        if (!type_equal(body.type, type_void()))
          bail(DiagCode::TypeMismatch,
               "loop body has type " + print_type(body.type) + ", expected void", e->span);
        return body;
      }

      case ExprKind::Continue: {
        auto it = omega.find(e->name);
        if (it == omega.end())
          bail(DiagCode::UndeclaredName, "continue targets unknown label " + e->name,
               e->span);
        if (!typing_state_equal(it->second, st))
          bail(DiagCode::LoopEnvMismatch,
               "state at continue " + e->name + " differs from loop entry", e->span);
        return {true, nullptr, {}};
      }

      case ExprKind::Return: {
        if (st.stack.size() < 2)
          bail(DiagCode::WTPViolation, "return with no caller frame", e->span);
        TypeFrame saved = st.stack.front();
        st.stack.erase(st.stack.begin());
        ExprTyping body = check(std::move(st), std::move(omega), e->a);
        if (body.divergent) return body;
        TypingState s = std::move(body.state);
        if (s.stack.empty())
          bail(DiagCode::WTPViolation, "return consumed every frame", e->span);
        const TypeFrame& callee = s.stack.back();
        if (callee.binding && lin_type(callee.binding))
          bail(DiagCode::ParameterMisused,
               "parameter " + callee.param + " discarded at return while its protocol is " +
                   print_type(callee.binding),
               e->span);
        s.stack.pop_back();
        s.stack.insert(s.stack.begin(), saved);
        return {false, body.type, std::move(s)};
      }
    }
    bail(DiagCode::TypeMismatch, "unhandled expression", e->span);
  }
};

// ---------------------------------------------------------------------------
// Class usage checking
// ---------------------------------------------------------------------------

struct UsageChecker {
  const Program& prog;
  ClassView view;
  ClassInfo info;  // declarations as seen through `view`
  std::vector<std::string>* trace;

  using Theta = std::map<std::string, FieldTypeEnv>;
  // nullopt: the path loops back into the recursion, imposing nothing.
  using Result = std::optional<FieldTypeEnv>;

  void record(const char* rule) {
    if (trace) trace->push_back(rule);
  }

  Result join(std::vector<Result> parts) const {
    const FieldTypeEnv* first = nullptr;
    for (const auto& p : parts) {
      if (!p) continue;
      if (!first) {
        first = &*p;
        continue;
      }
      if (!field_env_equal(*first, *p))
        bail(DiagCode::BranchMismatch,
             "protocol branches leave different field typings: " + print_field_env(*first) +
                 " vs " + print_field_env(*p));
    }
    if (!first) return std::nullopt;
    return *first;
  }

  Result walk(const UsageBodyPtr& body, const EquationMap& eqs, const FieldTypeEnv& env,
              const Theta& theta) {
    switch (body->kind) {
      case UsageKind::End:
        record("TCEn");
        return env;
      case UsageKind::Top:
        return std::nullopt;
      case UsageKind::Var: {
        auto th = theta.find(body->var);
        if (th != theta.end()) {
          record("TCVar");
          if (!field_env_equal(th->second, env))
            bail(DiagCode::RecursionEnvMismatch,
                 "re-entering " + body->var + " with fields " + print_field_env(env) +
                     ", first entered with " + print_field_env(th->second));
          return std::nullopt;
        }
        auto eq = eqs.find(body->var);
        if (eq == eqs.end())
          bail(DiagCode::UnboundUsageVariable, "unbound usage variable " + body->var);
        record("TCRec");
        Theta theta2 = theta;
        theta2.emplace(body->var, env);
        EquationMap eqs2 = eqs;
        eqs2.erase(body->var);
        return walk(eq->second, eqs2, env, theta2);
      }
      case UsageKind::Choice: {
        record("TCCh");
        std::vector<Result> parts;
        for (const auto& [_, u] : body->entries) parts.push_back(walk(u, eqs, env, theta));
        return join(std::move(parts));
      }
      case UsageKind::Branch: {
        record("TCBr");
        if (body->entries.empty())
          bail(DiagCode::EmptyBranch, "usage branch offers no methods");
        std::vector<Result> parts;
        for (const auto& [m, w] : body->entries) {
          const MethodDecl* md = info.find_method(m);
          if (!md)
            bail(DiagCode::MethodNotUnderstood,
                 "usage mentions method " + m + " not declared in class " +
                     print_class_view(view));
          TypingState st;
          st.lambda["this"] = LambdaEntry{view, env};
          st.stack.push_back(TypeFrame{"this", md->param_name, md->param_type});
          ExprChecker ec{prog};
          ExprTyping res = ec.check(st, {}, md->body);
          FieldTypeEnv after;
          if (res.divergent) {
            // a body that never finishes leaves no constraint; keep the
            // entry typing for the continuation
            after = env;
          } else {
            if (!type_equal(res.type, md->return_type))
              bail(DiagCode::TypeMismatch,
                   "body of " + m + " has type " + print_type(res.type) + ", declared " +
                       print_type(md->return_type),
                   md->span);
            if (res.state.stack.size() != 1)
              bail(DiagCode::WTPViolation, "method body unbalanced frames", md->span);
            const TypeFrame& fr = res.state.stack.front();
            if (fr.binding && lin_type(fr.binding))
              bail(DiagCode::ParameterMisused,
                   "parameter " + md->param_name + " of " + m +
                       " still has protocol " + print_type(fr.binding) + " at method end",
                   md->span);
            after = res.state.lambda.at("this").fields;
          }
          parts.push_back(walk(w, eqs, after, theta));
        }
        return join(std::move(parts));
      }
    }
    bail(DiagCode::TypeMismatch, "unhandled usage form");
  }
};

}  // namespace

ExprTyping type_expression(const Program& prog, const TypingState& st, const ExprPtr& e) {
  ExprChecker ec{prog};
  return ec.check(st, {}, e);
}

std::optional<FieldTypeEnv> type_class_usage(const Program& prog, const ClassView& view,
                                             const UsageState& state,
                                             const FieldTypeEnv& fields,
                                             std::vector<std::string>* trace) {
  ClassInfoError err;
  auto info = class_info(prog, view.name, view.arg, &err);
  if (!info) bail(err.code, err.message);
  UsageChecker uc{prog, view, *info, trace};
  return uc.walk(state.body, state.equations, fields, {});
}

ClassCheckResult type_class(const Program& prog, const ClassDecl& decl) {
  ClassCheckResult out;
  TypeExprPtr arg = decl.generic ? type_top() : nullptr;
  try {
    ClassInfoError err;
    auto info = class_info(prog, decl.name, arg, &err);
    if (!info) bail(err.code, err.message, decl.span);
    FieldTypeEnv env0;
    for (const auto& f : info->fields) env0.emplace(f.name, init_type(f.type));
    auto res = type_class_usage(prog, info->view, decl.usage, env0, &out.rule_trace);
    if (res && !terminated_env(*res))
      bail(DiagCode::NonTerminatedAfterUsage,
           "fields of " + decl.name + " still linear after the protocol: " +
               print_field_env(*res),
           decl.span);
    out.ok = true;
  } catch (const CheckError& ce) {
    Diagnostic d = ce.diag;
    if (d.span.start_line == 0) d.span = decl.span;
    if (d.span.file.empty()) d.span.file = decl.span.file;
    d.notes.push_back("while checking class " + decl.name);
    out.diagnostics.push_back(std::move(d));
  }
  return out;
}

std::vector<Diagnostic> type_program(const Program& prog) {
  std::vector<Diagnostic> out;
  for (const auto& c : prog.classes) {
    auto res = type_class(prog, c);
    out.insert(out.end(), res.diagnostics.begin(), res.diagnostics.end());
  }
  sort_diagnostics(out);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration checking
// ---------------------------------------------------------------------------

namespace {

bool wtp_check(const Program& prog, const Heap& h, const ExprPtr& e,
               std::vector<TypeFrame> ts, std::vector<Frame> rs, std::string& why) {
  ExprPtr cur = e;
  while (true) {
    if (!cur) break;
    if (cur->kind == ExprKind::Return) {
      if (ts.empty() || rs.empty()) {
        why = "return spine deeper than the stacks";
        return false;
      }
      if (ts.front().active != rs.front().active) {
        why = "frame objects disagree: " + ts.front().active + " vs " + rs.front().active;
        return false;
      }
      if (!type_equal(ts.front().binding, get_type(rs.front().value, h, prog))) {
        why = "frame binding for " + rs.front().param + " has type " +
              print_type(get_type(rs.front().value, h, prog)) + ", tracked as " +
              print_type(ts.front().binding);
        return false;
      }
      ts.erase(ts.begin());
      rs.erase(rs.begin());
      cur = cur->a;
      continue;
    }
    if (cur->kind == ExprKind::Call || cur->kind == ExprKind::Assign ||
        cur->kind == ExprKind::Seq || cur->kind == ExprKind::If ||
        cur->kind == ExprKind::Switch) {
      cur = cur->a;
      continue;
    }
    break;
  }
  if (rs.size() != 1 || ts.empty()) {
    why = "stack depth does not match the return spine";
    return false;
  }
  if (ts.back().active != rs.back().active) {
    why = "innermost frame objects disagree";
    return false;
  }
  if (!type_equal(ts.back().binding, get_type(rs.back().value, h, prog))) {
    why = "innermost frame binding type mismatch";
    return false;
  }
  return true;
}

}  // namespace

std::vector<Diagnostic> well_typed_configuration(const Program& prog, const Configuration& c) {
  std::vector<Diagnostic> out;
  auto viol = [&](DiagCode code, const std::string& msg) {
    out.push_back(Diagnostic{Severity::Error, code, msg, {}});
  };

  // environments rebuilt from the heap
  Lambda lambda;
  for (const auto& [o, entry] : c.heap) {
    LambdaEntry le;
    le.cls = ClassView{entry.typestate->class_name, entry.typestate->type_arg};
    for (const auto& [f, v] : entry.fields) le.fields.emplace(f, get_type(v, c.heap, prog));
    lambda.emplace(o, std::move(le));
  }
  EnvO env_o;
  for (const auto& o : objects_of(c.expr)) {
    auto it = c.heap.find(o);
    if (it == c.heap.end()) {
      viol(DiagCode::WTEViolation, "expression mentions unknown object " + o);
      return out;
    }
    env_o.emplace(o, it->second.typestate);
  }
  std::vector<TypeFrame> tstack;
  for (const auto& fr : c.stack)
    tstack.push_back(TypeFrame{fr.active, fr.param, get_type(fr.value, c.heap, prog)});

  // heap agrees with declarations
  for (const auto& [o, entry] : c.heap) {
    ClassInfoError err;
    auto info = class_info(prog, entry.typestate->class_name, entry.typestate->type_arg, &err);
    if (!info) {
      viol(DiagCode::WTHViolation, o + ": " + err.message);
      continue;
    }
    std::set<std::string> declared, present;
    for (const auto& f : info->fields) declared.insert(f.name);
    for (const auto& [f, _] : entry.fields) present.insert(f);
    if (declared != present)
      viol(DiagCode::WTHViolation, o + " does not carry the declared fields of " +
                                       print_class_view(info->view));
  }

  // stacks line up with the return spine
  {
    std::string why;
    if (!wtp_check(prog, c.heap, c.expr, tstack, c.stack, why))
      viol(DiagCode::WTPViolation, why);
  }

  // object environment covers exactly the expression's references
  {
    auto objs = objects_of(c.expr);
    std::set<std::string> uniq(objs.begin(), objs.end());
    if (uniq.size() != objs.size())
      viol(DiagCode::WTEViolation, "duplicate object reference in expression");
  }

  // the expression types, and every object's remaining protocol completes
  Lambda final_lambda = lambda;
  bool typed = false;
  try {
    ExprTyping res = type_expression(prog, TypingState{lambda, env_o, tstack}, c.expr);
    typed = true;
    if (!res.divergent) final_lambda = res.state.lambda;
  } catch (const CheckError& ce) {
    viol(DiagCode::WTCViolation, "expression does not type: " + ce.diag.message);
  }
  if (typed) {
    for (const auto& [o, entry] : c.heap) {
      ClassView view{entry.typestate->class_name, entry.typestate->type_arg};
      const FieldTypeEnv& fe =
          final_lambda.count(o) ? final_lambda.at(o).fields : lambda.at(o).fields;
      try {
        auto r = type_class_usage(prog, view, entry.typestate->usage, fe);
        if (r && !terminated_env(*r))
          viol(DiagCode::WTDViolation,
               o + " cannot finish with linear fields " + print_field_env(*r));
      } catch (const CheckError& ce) {
        viol(DiagCode::WTDViolation, o + ": " + ce.diag.message);
      }
    }
  }
  sort_diagnostics(out);
  return out;
}

}  // namespace mungo
