#include <sstream>

#include "mungo/parser.hpp"

namespace mungo {

namespace {

struct Printer {
  std::ostringstream os;
  int depth = 0;

  void indent() {
    for (int i = 0; i < depth; ++i) os << "  ";
  }

  void line(const std::string& s) {
    indent();
    os << s << '\n';
  }

  std::string expr_str(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::Val:
        return print_value(e->value);
      case ExprKind::Param:
      case ExprKind::Field:
        return e->name;
      case ExprKind::New:
        return "new " + e->name;
      case ExprKind::NewGen:
        return "new " + e->name + "<" + print_type(e->generic_arg) + ">";
      case ExprKind::Assign:
        return e->name + " = " + wrap_simple(e->a);
      case ExprKind::Call:
        return e->recv + "." + e->method + "(" + expr_str(e->a) + ")";
      case ExprKind::Seq:
        // sequencing parses right-associated; parenthesize a nested left arm
        return wrap_simple(e->a) + "; " + expr_str(e->b);
      case ExprKind::If:
        return "if (" + expr_str(e->a) + ") { " + expr_str(e->b) + " } else { " +
               expr_str(e->c) + " }";
      case ExprKind::Switch: {
        std::string s = "switch (" + expr_str(e->a) + ") { ";
        for (const auto& [l, br] : e->branches) s += l + ": " + expr_str(br) + " ";
        return s + "}";
      }
      case ExprKind::Label:
        return e->name + ": " + wrap_simple(e->a);
      case ExprKind::Continue:
        return "continue " + e->name;
      case ExprKind::Return:
        // run-time only; printed for traces, not reparsed
        return "return{" + expr_str(e->a) + "}";
    }
    return "?";
  }

  // Positions that reparse as one simple expression need parentheses
  // around sequences.
  std::string wrap_simple(const ExprPtr& e) {
    std::string s = expr_str(e);
    if (e->kind == ExprKind::Seq) return "(" + s + ")";
    return s;
  }

  void print(const Program& p) {
    for (const auto& e : p.enums) {
      std::string s = "enum " + e.name + " { ";
      for (const auto& l : e.labels) s += l + " ";
      line(s + "}");
    }
    for (const auto& c : p.classes) {
      std::string head = "class ";
      if (c.generic) head += "<" + c.generic->first + "[" + c.generic->second + "]> ";
      head += c.name + " {";
      line(head);
      ++depth;
      line(print_usage(c.usage));
      for (const auto& f : c.fields) line(print_declared_type(f.type) + " " + f.name);
      for (const auto& m : c.methods) {
        line(print_type(m.return_type) + " " + m.name + "(" + print_type(m.param_type) +
             " " + m.param_name + ") {");
        ++depth;
        line(expr_str(m.body));
        --depth;
        line("}");
      }
      --depth;
      line("}");
    }
  }
};

}  // namespace

std::string print_program(const Program& p) {
  Printer pr;
  pr.print(p);
  return pr.os.str();
}

}  // namespace mungo
