#include "mungo/monitor.hpp"

#include "mungo/usage.hpp"

namespace mungo {

namespace {

std::optional<RuntimeFault> fault(StuckKind k, std::string detail) {
  return RuntimeFault{k, stuck_taxonomy(k), std::move(detail)};
}

std::optional<RuntimeFault> scan(const Program& prog, const Heap& heap,
                                 const std::vector<Frame>& stack, const ExprPtr& e) {
  if (!e || stack.empty()) return std::nullopt;
  const Frame& fr = stack.back();
  switch (e->kind) {
    case ExprKind::Field: {
      auto it = heap.find(fr.active);
      if (it != heap.end() && !it->second.fields.count(e->name))
        return fault(StuckKind::FldErr, "no field " + e->name + " on " + fr.active);
      return std::nullopt;
    }
    case ExprKind::Call: {
      if (!is_value(e->a)) return scan(prog, heap, stack, e->a);
      Value recv;
      bool is_param = e->recv_kind == RecvKind::Param;
      if (e->recv_kind == RecvKind::Field) {
        auto it = heap.find(fr.active);
        if (it == heap.end()) return std::nullopt;
        auto fv = it->second.fields.find(e->recv);
        if (fv == it->second.fields.end()) return std::nullopt;
        recv = fv->second;
      } else if (is_param) {
        if (fr.param != e->recv) return std::nullopt;
        recv = fr.value;
      } else {
        return std::nullopt;
      }
      if (recv.kind == ValueKind::Null)
        return fault(is_param ? StuckKind::NullCall2 : StuckKind::NullCall1,
                     "call " + e->recv + "." + e->method + " through null");
      if (recv.kind == ValueKind::Object) {
        auto it = heap.find(recv.object);
        if (it == heap.end()) return std::nullopt;
        std::optional<UsageState> next;
        try {
          next = step_method(it->second.typestate->usage, e->method);
        } catch (const UsageError&) {
          return std::nullopt;
        }
        if (!next)
          return fault(is_param ? StuckKind::MthdNotAv2 : StuckKind::MthdNotAv1,
                       "protocol " + print_usage(it->second.typestate->usage) + " of " +
                           recv.object + " does not allow " + e->method);
      }
      return std::nullopt;
    }
    case ExprKind::Assign:
    case ExprKind::Seq:
    case ExprKind::If:
    case ExprKind::Switch:
      if (!is_value(e->a)) return scan(prog, heap, stack, e->a);
      return std::nullopt;
    case ExprKind::Return: {
      if (is_value(e->a) || stack.size() < 2) return std::nullopt;
      std::vector<Frame> inner(stack.begin() + 1, stack.end());
      return scan(prog, heap, inner, e->a);
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

std::optional<RuntimeFault> check_error(const Program& prog, const Configuration& c) {
  return scan(prog, c.heap, c.stack, c.expr);
}

}  // namespace mungo
