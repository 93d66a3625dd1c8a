#include "mungo/interp.hpp"

#include <sstream>

#include "mungo/usage.hpp"

namespace mungo {

TypeExprPtr get_type(const Value& v, const Heap& h, const Program& prog) {
  switch (v.kind) {
    case ValueKind::Unit:
      return type_void();
    case ValueKind::Bool:
      return type_bool();
    case ValueKind::Null:
      return type_bottom();
    case ValueKind::Label: {
      const EnumDecl* en = prog.enum_of_label(v.label);
      return en ? type_enum(en->name) : type_bottom();
    }
    case ValueKind::Object: {
      auto it = h.find(v.object);
      return it != h.end() ? it->second.typestate : type_bottom();
    }
  }
  return type_bottom();
}

bool lin_value(const Value& v, const Heap& h) {
  if (v.kind != ValueKind::Object) return false;
  auto it = h.find(v.object);
  if (it == h.end()) return false;
  return lin_type(it->second.typestate);
}

Configuration initial_configuration(const Program& prog) {
  const ClassDecl* main_cls = prog.find_class("Main");
  if (!main_cls) throw std::runtime_error("program has no Main class");
  const MethodDecl* mm = nullptr;
  for (const auto& m : main_cls->methods)
    if (m.name == "main") mm = &m;
  if (!mm) throw std::runtime_error("Main has no main method");
  Configuration c;
  std::string o_main = "o" + std::to_string(c.next_obj++);
  HeapEntry entry;
  entry.typestate = type_typestate(main_cls->name, nullptr, end_usage());
  for (const auto& f : main_cls->fields) entry.fields.emplace(f.name, init_value(f.type));
  c.heap.emplace(o_main, std::move(entry));
  c.stack.push_back(Frame{o_main, mm->param_name, value_unit()});
  c.expr = mm->body;
  return c;
}

const char* stuck_kind_name(StuckKind k) {
  switch (k) {
    case StuckKind::NullCall1: return "NullCall1";
    case StuckKind::NullCall2: return "NullCall2";
    case StuckKind::MthdNotAv1: return "MthdNotAv1";
    case StuckKind::MthdNotAv2: return "MthdNotAv2";
    case StuckKind::FldErr: return "FldErr";
    case StuckKind::MethodNotUnderstood: return "MethodNotUnderstood";
    case StuckKind::FieldMisused: return "FieldMisused";
    case StuckKind::ParameterMisused: return "ParameterMisused";
    case StuckKind::LinearDrop: return "LinearDrop";
    case StuckKind::LabelNotAvailable: return "LabelNotAvailable";
    case StuckKind::TypeError: return "TypeError";
    case StuckKind::DanglingContinue: return "DanglingContinue";
    case StuckKind::NoRule: return "NoRule";
  }
  return "?";
}

const char* stuck_taxonomy(StuckKind k) {
  switch (k) {
    case StuckKind::NullCall1:
    case StuckKind::FldErr:
      return "Field not available";
    case StuckKind::NullCall2:
      return "Parameter not available";
    case StuckKind::MthdNotAv1:
    case StuckKind::MthdNotAv2:
      return "Method not available";
    case StuckKind::MethodNotUnderstood:
      return "Method not understood";
    case StuckKind::FieldMisused:
      return "Field misused";
    case StuckKind::ParameterMisused:
      return "Parameter misused";
    default:
      return "";
  }
}

namespace {

StepResult stuck(StuckKind k, std::string detail) {
  StepResult r;
  r.kind = StepResult::Kind::Stuck;
  r.stuck = k;
  r.detail = std::move(detail);
  return r;
}

StepResult stepped(Configuration next, const char* rule) {
  StepResult r;
  r.kind = StepResult::Kind::Stepped;
  r.next = std::move(next);
  r.rules.push_back(rule);
  return r;
}

struct ObjectRef {
  bool ok = false;
  StepResult err;  // when !ok
  std::string object;
};

// Resolves the receiver of a call to an object, reporting the matching
// null / protocol errors.
ObjectRef resolve_receiver(const Program& prog, const Configuration& c, RecvKind rk,
                           const std::string& name, const std::string& method) {
  ObjectRef out;
  Value v;
  if (rk == RecvKind::Field) {
    const Frame& fr = c.stack.back();
    auto it = c.heap.find(fr.active);
    if (it == c.heap.end()) {
      out.err = stuck(StuckKind::TypeError, "active object " + fr.active + " missing");
      return out;
    }
    auto fv = it->second.fields.find(name);
    if (fv == it->second.fields.end()) {
      out.err = stuck(StuckKind::FldErr, "no field " + name + " on " + fr.active);
      return out;
    }
    v = fv->second;
    if (v.kind == ValueKind::Null) {
      out.err = stuck(StuckKind::NullCall1, "call " + name + "." + method + " through null");
      return out;
    }
  } else if (rk == RecvKind::Param) {
    const Frame& fr = c.stack.back();
    if (fr.param != name) {
      out.err = stuck(StuckKind::TypeError, "unknown parameter " + name);
      return out;
    }
    v = fr.value;
    if (v.kind == ValueKind::Null) {
      out.err = stuck(StuckKind::NullCall2, "call " + name + "." + method + " through null");
      return out;
    }
  } else {
    // direct object receivers have no reduction rule
    out.err = stuck(StuckKind::NoRule, "no rule for calls on object literals");
    return out;
  }
  if (v.kind != ValueKind::Object) {
    out.err = stuck(StuckKind::TypeError,
                    "receiver " + name + " holds " + print_value(v) + ", not an object");
    return out;
  }
  out.ok = true;
  out.object = v.object;
  return out;
}

}  // namespace

StepResult step(const Program& prog, const Configuration& c) {
  const ExprPtr& e = c.expr;
  if (!e) return stuck(StuckKind::NoRule, "empty expression");
  switch (e->kind) {
    case ExprKind::Val: {
      if (c.stack.size() == 1) {
        StepResult r;
        r.kind = StepResult::Kind::Terminal;
        r.result = e->value;
        return r;
      }
      return stuck(StuckKind::NoRule, "value with pending frames");
    }

    case ExprKind::Param: {
      const Frame& fr = c.stack.back();
      if (fr.param != e->name)
        return stuck(StuckKind::TypeError, "unknown parameter " + e->name);
      Value v = fr.value;
      Configuration next = c;
      bool linear = lin_value(v, c.heap);
      if (linear) next.stack.back().value = value_null();
      next.expr = expr_value(v, e->span);
      return stepped(std::move(next), linear ? "lParam" : "uParam");
    }

    case ExprKind::Field: {
      const Frame& fr = c.stack.back();
      auto it = c.heap.find(fr.active);
      if (it == c.heap.end())
        return stuck(StuckKind::TypeError, "active object " + fr.active + " missing");
      auto fv = it->second.fields.find(e->name);
      if (fv == it->second.fields.end())
        return stuck(StuckKind::FldErr, "no field " + e->name + " on " + fr.active);
      Value v = fv->second;
      Configuration next = c;
      bool linear = lin_value(v, c.heap);
      if (linear) next.heap[fr.active].fields[e->name] = value_null();
      next.expr = expr_value(v, e->span);
      return stepped(std::move(next), linear ? "lDeref" : "uDeref");
    }

    case ExprKind::New:
    case ExprKind::NewGen: {
      ClassInfoError err;
      TypeExprPtr arg = e->kind == ExprKind::NewGen ? e->generic_arg : nullptr;
      auto info = class_info(prog, e->name, arg, &err);
      if (!info) return stuck(StuckKind::TypeError, err.message);
      Configuration next = c;
      std::string o = "o" + std::to_string(next.next_obj++);
      HeapEntry entry;
      entry.typestate = type_typestate(e->name, arg, info->usage);
      for (const auto& f : info->fields) entry.fields.emplace(f.name, init_value(f.type));
      next.heap.emplace(o, std::move(entry));
      next.expr = expr_value(value_object(o), e->span);
      return stepped(std::move(next), e->kind == ExprKind::New ? "New" : "NewGen");
    }

    case ExprKind::Assign: {
      if (is_value(e->a)) {
        const Frame& fr = c.stack.back();
        auto it = c.heap.find(fr.active);
        if (it == c.heap.end())
          return stuck(StuckKind::TypeError, "active object " + fr.active + " missing");
        auto fv = it->second.fields.find(e->name);
        if (fv == it->second.fields.end())
          return stuck(StuckKind::FldErr, "no field " + e->name + " on " + fr.active);
        if (lin_value(fv->second, c.heap))
          return stuck(StuckKind::FieldMisused,
                       "field " + e->name + " overwritten while " + fv->second.object +
                           " is still live");
        Configuration next = c;
        next.heap[fr.active].fields[e->name] = e->a->value;
        next.expr = expr_value(value_unit(), e->span);
        return stepped(std::move(next), "Upd");
      }
      Configuration sub = c;
      sub.expr = e->a;
      StepResult r = step(prog, sub);
      if (r.kind != StepResult::Kind::Stepped) return r;
      r.next.expr = expr_assign(e->name, r.next.expr, e->span);
      r.rules.insert(r.rules.begin(), "FldC");
      return r;
    }

    case ExprKind::Call: {
      if (is_value(e->a)) {
        ObjectRef recv = resolve_receiver(prog, c, e->recv_kind, e->recv, e->method);
        if (!recv.ok) return recv.err;
        auto it = c.heap.find(recv.object);
        if (it == c.heap.end())
          return stuck(StuckKind::TypeError, "dangling object " + recv.object);
        const TypeExprPtr& ts = it->second.typestate;
        ClassInfoError err;
        auto info = class_info(prog, ts->class_name, ts->type_arg, &err);
        if (!info) return stuck(StuckKind::TypeError, err.message);
        const MethodDecl* md = info->find_method(e->method);
        if (!md)
          return stuck(StuckKind::MethodNotUnderstood,
                       "class " + print_class_view(info->view) + " has no method " + e->method);
        std::optional<UsageState> next_usage;
        try {
          next_usage = step_method(ts->usage, e->method);
        } catch (const UsageError& ue) {
          return stuck(StuckKind::TypeError, ue.what());
        }
        if (!next_usage)
          return stuck(e->recv_kind == RecvKind::Param ? StuckKind::MthdNotAv2
                                                       : StuckKind::MthdNotAv1,
                       "protocol " + print_usage(ts->usage) + " of " + recv.object +
                           " does not allow " + e->method);
        Configuration next = c;
        next.heap[recv.object].typestate =
            type_typestate(ts->class_name, ts->type_arg, *next_usage);
        next.stack.push_back(Frame{recv.object, md->param_name, e->a->value});
        next.expr = expr_return(md->body, e->span);
        return stepped(std::move(next),
                       e->recv_kind == RecvKind::Param ? "CallP" : "CallF");
      }
      Configuration sub = c;
      sub.expr = e->a;
      StepResult r = step(prog, sub);
      if (r.kind != StepResult::Kind::Stepped) return r;
      r.next.expr = expr_call(e->recv_kind, e->recv, e->method, r.next.expr, e->span);
      r.rules.insert(r.rules.begin(), "MthdC");
      return r;
    }

    case ExprKind::Seq: {
      if (is_value(e->a)) {
        if (lin_value(e->a->value, c.heap))
          return stuck(StuckKind::LinearDrop,
                       "discarded " + print_value(e->a->value) + " with unfinished protocol");
        Configuration next = c;
        next.expr = e->b;
        return stepped(std::move(next), "Seq");
      }
      Configuration sub = c;
      sub.expr = e->a;
      StepResult r = step(prog, sub);
      if (r.kind != StepResult::Kind::Stepped) return r;
      r.next.expr = expr_seq(r.next.expr, e->b, e->span);
      r.rules.insert(r.rules.begin(), "SeqC");
      return r;
    }

    case ExprKind::If: {
      if (is_value(e->a)) {
        if (e->a->value.kind != ValueKind::Bool)
          return stuck(StuckKind::TypeError,
                       "condition is " + print_value(e->a->value) + ", not a bool");
        Configuration next = c;
        next.expr = e->a->value.b ? e->b : e->c;
        return stepped(std::move(next), e->a->value.b ? "IfTrue" : "IfFls");
      }
      Configuration sub = c;
      sub.expr = e->a;
      StepResult r = step(prog, sub);
      if (r.kind != StepResult::Kind::Stepped) return r;
      r.next.expr = expr_if(r.next.expr, e->b, e->c, e->span);
      r.rules.insert(r.rules.begin(), "IfC");
      return r;
    }

    case ExprKind::Switch: {
      if (is_value(e->a)) {
        if (e->a->value.kind != ValueKind::Label)
          return stuck(StuckKind::TypeError,
                       "switch scrutinee is " + print_value(e->a->value) + ", not a label");
        const std::string& l = e->a->value.label;
        ObjectRef recv = resolve_receiver(prog, c, e->recv_kind, e->recv, e->method);
        if (!recv.ok) return recv.err;
        auto it = c.heap.find(recv.object);
        if (it == c.heap.end())
          return stuck(StuckKind::TypeError, "dangling object " + recv.object);
        const TypeExprPtr& ts = it->second.typestate;
        auto next_usage = step_label(ts->usage, l);
        if (!next_usage)
          return stuck(StuckKind::LabelNotAvailable,
                       "protocol " + print_usage(ts->usage) + " of " + recv.object +
                           " does not offer label " + l);
        const ExprPtr* branch = nullptr;
        for (const auto& [bl, be] : e->branches)
          if (bl == l) branch = &be;
        if (!branch)
          return stuck(StuckKind::LabelNotAvailable, "switch has no branch for " + l);
        Configuration next = c;
        next.heap[recv.object].typestate =
            type_typestate(ts->class_name, ts->type_arg, *next_usage);
        next.expr = *branch;
        return stepped(std::move(next),
                       e->recv_kind == RecvKind::Param ? "SwP" : "SwF");
      }
      Configuration sub = c;
      sub.expr = e->a;
      StepResult r = step(prog, sub);
      if (r.kind != StepResult::Kind::Stepped) return r;
      r.next.expr =
          expr_switch(e->recv_kind, e->recv, e->method, r.next.expr, e->branches, e->span);
      r.rules.insert(r.rules.begin(), "SwC");
      return r;
    }

    case ExprKind::Label: {
      Configuration next = c;
      next.expr = substitute_continue(e->a, e->name, e);
      return stepped(std::move(next), "Lbl");
    }

    case ExprKind::Continue:
      return stuck(StuckKind::DanglingContinue, "continue " + e->name + " outside its loop");

    case ExprKind::Return: {
      if (is_value(e->a)) {
        if (c.stack.size() < 2)
          return stuck(StuckKind::NoRule, "return with no caller frame");
        const Frame& callee = c.stack.back();
        const Value& v = e->a->value;
        if (!value_equal(v, callee.value) && lin_value(callee.value, c.heap))
          return stuck(StuckKind::ParameterMisused,
                       "parameter " + callee.param + " still live at return");
        Configuration next = c;
        next.stack.pop_back();
        next.expr = e->a;
        return stepped(std::move(next), "Ret");
      }
      // the body runs without the outermost caller frame
      Configuration sub = c;
      Frame saved = sub.stack.front();
      sub.stack.erase(sub.stack.begin());
      sub.expr = e->a;
      StepResult r = step(prog, sub);
      if (r.kind != StepResult::Kind::Stepped) return r;
      r.next.stack.insert(r.next.stack.begin(), saved);
      r.next.expr = expr_return(r.next.expr, e->span);
      r.rules.insert(r.rules.begin(), "RetC");
      return r;
    }
  }
  return stuck(StuckKind::NoRule, "unhandled expression");
}

RunOutcome run(const Program& prog, RunOptions opts) {
  RunOutcome out;
  Configuration c = initial_configuration(prog);
  for (long n = 1; n <= opts.max_steps; ++n) {
    StepResult r = step(prog, c);
    if (r.kind == StepResult::Kind::Terminal) {
      out.kind = RunOutcome::Kind::Terminal;
      out.result = r.result;
      break;
    }
    if (r.kind == StepResult::Kind::Stuck) {
      out.kind = RunOutcome::Kind::Stuck;
      out.stuck = r.stuck;
      out.detail = r.detail;
      break;
    }
    out.steps = n;
    for (const auto& rule : r.rules) out.rules_seen.insert(rule);
    if (opts.record_trace) {
      std::ostringstream line;
      line << "step " << n << ": " << r.rules.back() << " | " << expr_head(c.expr) << " | "
           << r.next.heap.size();
      out.trace.push_back(line.str());
    }
    c = std::move(r.next);
  }
  out.final_config = c;
  out.protocols_complete = true;
  for (const auto& [_, entry] : c.heap)
    if (entry.typestate->usage.body->kind != UsageKind::End) out.protocols_complete = false;
  return out;
}

bool well_formed_configuration(const Program& prog, const Configuration& c,
                               std::vector<std::string>* why) {
  bool ok = true;
  auto bad = [&](const std::string& msg) {
    ok = false;
    if (why) why->push_back(msg);
  };
  if (c.stack.empty()) {
    bad("empty stack");
    return false;
  }
  if (static_cast<int>(c.stack.size()) != 1 + returns_of(c.expr))
    bad("stack depth does not match the return spine");
  {
    auto bot = c.heap.find(c.stack.front().active);
    if (bot == c.heap.end() || bot->second.typestate->class_name != "Main")
      bad("bottom frame does not belong to the Main object");
  }
  for (const auto& fr : c.stack)
    if (!c.heap.count(fr.active)) bad("frame object " + fr.active + " not in the heap");
  if (!well_formed_expression(c.expr, why)) ok = false;
  // object occurrences across expression, fields and frames form a set
  std::vector<std::string> occ = objects_of(c.expr);
  for (const auto& [o, entry] : c.heap)
    for (const auto& [f, v] : entry.fields)
      if (v.kind == ValueKind::Object) occ.push_back(v.object);
  for (const auto& fr : c.stack)
    if (fr.value.kind == ValueKind::Object) occ.push_back(fr.value.object);
  {
    std::set<std::string> uniq(occ.begin(), occ.end());
    if (uniq.size() != occ.size()) bad("object held in more than one place");
    for (const auto& o : occ)
      if (!c.heap.count(o)) bad("dangling object reference " + o);
  }
  for (const auto& [o, entry] : c.heap) {
    ClassInfoError err;
    auto info = class_info(prog, entry.typestate->class_name, entry.typestate->type_arg, &err);
    if (!info) {
      bad(o + ": " + err.message);
      continue;
    }
    std::set<std::string> declared, present;
    for (const auto& f : info->fields) declared.insert(f.name);
    for (const auto& [f, _] : entry.fields) present.insert(f);
    if (declared != present) bad(o + " does not carry its declared fields");
    // current usage state must be reachable from the declared protocol
    std::string cur = print_usage(canonical_usage(entry.typestate->usage));
    bool reachable = false;
    for (const auto& s : reachable_states(info->usage))
      if (print_usage(s) == cur) reachable = true;
    if (!reachable) bad(o + " has unreachable usage state " + cur);
  }
  return ok;
}

bool linearity_conserved(const Program& prog, const Configuration& c,
                         std::vector<std::string>* why) {
  (void)prog;
  std::map<std::string, int> held;
  for (const auto& o : objects_of(c.expr)) held[o]++;
  for (const auto& [_, entry] : c.heap)
    for (const auto& [f, v] : entry.fields)
      if (v.kind == ValueKind::Object) held[v.object]++;
  for (const auto& fr : c.stack)
    if (fr.value.kind == ValueKind::Object) held[fr.value.object]++;
  bool ok = true;
  for (const auto& [o, entry] : c.heap) {
    if (!lin_type(entry.typestate)) continue;
    int n = held.count(o) ? held.at(o) : 0;
    if (n != 1) {
      ok = false;
      if (why)
        why->push_back("live object " + o + " held in " + std::to_string(n) + " places");
    }
  }
  return ok;
}

std::string print_configuration(const Configuration& c) {
  std::ostringstream os;
  os << "heap:\n";
  for (const auto& [o, entry] : c.heap) {
    os << "  " << o << " : " << print_type(entry.typestate) << " {";
    bool first = true;
    for (const auto& [f, v] : entry.fields) {
      if (!first) os << ", ";
      first = false;
      os << f << " = " << print_value(v);
    }
    os << "}\n";
  }
  os << "stack:";
  for (const auto& fr : c.stack)
    os << " (" << fr.active << ", " << fr.param << " = " << print_value(fr.value) << ")";
  os << "\nexpr: " << expr_head(c.expr) << "\n";
  return os.str();
}

}  // namespace mungo
