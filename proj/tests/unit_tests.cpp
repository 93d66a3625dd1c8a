#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gen.hpp"
#include "mungo/harness.hpp"
#include "mungo/monitor.hpp"
#include "mungo/usage.hpp"

using namespace mungo;

namespace {

std::string corpus_path(const std::string& name) {
  return std::string(CORPUS_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
  auto text = read_file(path);
  REQUIRE(text.has_value());
  return *text;
}

Program parse_corpus(const std::string& name) {
  ParseResult pr = parse_program(slurp(corpus_path(name)), name);
  REQUIRE(pr.syntax_ok());
  return *pr.program;
}

// {open; X}[X = {isEOF; <EOF: {close; end} NOTEOF: {read; X}>}]
Usage file_usage() {
  auto choice = usage_choice({
      {"EOF", usage_branch({{"close", usage_end()}})},
      {"NOTEOF", usage_branch({{"read", usage_var("X")}})},
  });
  Usage u;
  u.body = usage_branch({{"open", usage_var("X")}});
  u.equations["X"] = usage_branch({{"isEOF", choice}});
  return u;
}

UsageState file_x_state() {
  Usage u = file_usage();
  return UsageState{usage_var("X"), u.equations};
}

}  // namespace

// ---------------------------------------------------------------------------
// diagnostics
// ---------------------------------------------------------------------------

TEST_CASE("diagnostic formatting") {
  SourceSpan sp;
  sp.file = "f.mungo";
  sp.start_line = sp.end_line = 3;
  sp.start_col = sp.end_col = 7;
  Diagnostic d{Severity::Error, DiagCode::TypeMismatch, "boom", sp};
  CHECK(format_diagnostic(d) == "f.mungo:3:7: error[TypeMismatch]: boom");
}

TEST_CASE("diagnostics sort by position then code") {
  SourceSpan a, b;
  a.file = b.file = "f";
  a.start_line = 5;
  b.start_line = 2;
  std::vector<Diagnostic> ds = {
      {Severity::Error, DiagCode::TypeMismatch, "later", a},
      {Severity::Error, DiagCode::UnknownClass, "earlier", b},
  };
  sort_diagnostics(ds);
  CHECK(ds[0].message == "earlier");
  CHECK(ds[1].message == "later");
}

// ---------------------------------------------------------------------------
// core model: types, linearity, agreement, class info
// ---------------------------------------------------------------------------

TEST_CASE("linearity of types") {
  Usage open = file_usage();
  CHECK(lin_type(type_typestate("File", nullptr, open)));
  CHECK_FALSE(lin_type(type_typestate("File", nullptr, end_usage())));
  CHECK(lin_type(type_generic_var("A", "b")));
  CHECK(lin_type(type_top()));
  CHECK_FALSE(lin_type(type_bool()));
  CHECK_FALSE(lin_type(type_bottom()));
  CHECK(terminated_type(type_bottom()));
}

TEST_CASE("declared/actual type agreement") {
  DeclaredType cls;
  cls.kind = DeclKind::Class;
  cls.class_name = "File";
  CHECK(agree(cls, type_typestate("File", nullptr, file_usage())));
  CHECK(agree(cls, type_bottom()));
  CHECK_FALSE(agree(cls, type_typestate("Other", nullptr, end_usage())));
  CHECK_FALSE(agree(cls, type_bool()));

  DeclaredType base;
  base.kind = DeclKind::Base;
  base.base = BaseKind::Bool;
  CHECK(agree(base, type_bool()));
  CHECK_FALSE(agree(base, type_void()));

  DeclaredType alpha;
  alpha.kind = DeclKind::GenericAlpha;
  alpha.class_name = "A";
  CHECK(agree(alpha, type_bottom()));
  CHECK_FALSE(agree(alpha, type_typestate("File", nullptr, file_usage())));
}

TEST_CASE("initial field values and types") {
  DeclaredType cls;
  cls.kind = DeclKind::Class;
  cls.class_name = "File";
  CHECK(init_value(cls).kind == ValueKind::Null);
  CHECK(init_type(cls)->kind == TypeKind::Bottom);

  DeclaredType b;
  b.kind = DeclKind::Base;
  b.base = BaseKind::Bool;
  CHECK(value_equal(init_value(b), value_bool(false)));
  CHECK(type_equal(init_type(b), type_bool()));

  DeclaredType v;
  CHECK(value_equal(init_value(v), value_unit()));
  CHECK(type_equal(init_type(v), type_void()));
}

TEST_CASE("class info substitutes the generic parameter") {
  Program p = parse_corpus("id_generic.mungo");
  Usage getval;
  getval.body = usage_branch({{"getVal", usage_end()}});
  TypeExprPtr arg = type_typestate("Boolean", nullptr, getval);
  auto info = class_info(p, "Id", arg);
  REQUIRE(info.has_value());
  const MethodDecl* id = info->find_method("id");
  REQUIRE(id);
  CHECK(type_equal(id->param_type, arg));
  CHECK(type_equal(id->return_type, arg));
}

TEST_CASE("class info rejects bad instantiations") {
  Program p = parse_corpus("id_generic.mungo");
  ClassInfoError err;
  CHECK_FALSE(class_info(p, "Nope", nullptr, &err).has_value());
  CHECK(err.code == DiagCode::UnknownClass);
  CHECK_FALSE(class_info(p, "Boolean", type_bool(), &err).has_value());
  CHECK(err.code == DiagCode::ArityMismatch);
}

TEST_CASE("objects and returns of expressions") {
  ExprPtr e = expr_seq(expr_value(value_object("o1")),
                       expr_return(expr_value(value_object("o2"))));
  auto objs = objects_of(e);
  CHECK(objs == std::vector<std::string>{"o1", "o2"});
  CHECK(returns_of(e) == 1);
}

TEST_CASE("well-formed expressions") {
  Program p = parse_corpus("filereader.mungo");
  const ClassDecl* fr = p.find_class("FileReader");
  REQUIRE(fr);
  for (const auto& m : fr->methods) CHECK(well_formed_expression(m.body));

  // duplicated object reference
  ExprPtr dup = expr_seq(expr_value(value_object("o1")), expr_value(value_object("o1")));
  CHECK_FALSE(well_formed_expression(dup));

  // return off the active path
  ExprPtr bad = expr_seq(expr_value(value_unit()), expr_return(expr_value(value_unit())));
  CHECK_FALSE(well_formed_expression(expr_seq(bad, expr_value(value_unit()))));
}

TEST_CASE("continue substitution respects shadowing") {
  ExprPtr rep = expr_value(value_bool(true));
  ExprPtr e = expr_seq(expr_continue("k"),
                       expr_label("k", expr_continue("k")));
  ExprPtr out = substitute_continue(e, "k", rep);
  CHECK(expr_equal(out->a, rep));
  CHECK(out->b->kind == ExprKind::Label);
  CHECK(out->b->a->kind == ExprKind::Continue);  // inner binder shadows
}

TEST_CASE("canonical usage drops unreachable equations") {
  Usage u;
  u.body = usage_end();
  u.equations["X"] = usage_branch({{"m", usage_end()}});
  Usage c = canonical_usage(u);
  CHECK(c.equations.empty());
  CHECK(usage_equal(c, end_usage()));
}

// ---------------------------------------------------------------------------
// usage transition system
// ---------------------------------------------------------------------------

TEST_CASE("File usage: open transition reaches X") {
  Usage u = file_usage();
  auto next = step_method(u, "open");
  REQUIRE(next.has_value());
  CHECK(usage_equal(canonical_usage(*next), canonical_usage(file_x_state())));
}

TEST_CASE("File usage: isEOF transition unfolds X to the choice") {
  auto next = step_method(file_x_state(), "isEOF");
  REQUIRE(next.has_value());
  Usage u = file_usage();
  UsageState expected{usage_choice({
                          {"EOF", usage_branch({{"close", usage_end()}})},
                          {"NOTEOF", usage_branch({{"read", usage_var("X")}})},
                      }),
                      u.equations};
  CHECK(usage_equal(canonical_usage(*next), canonical_usage(expected)));
}

TEST_CASE("offered methods and refused steps") {
  auto offered = offered_methods(file_x_state());
  CHECK(offered == std::vector<std::string>{"isEOF"});
  CHECK_FALSE(step_method(file_x_state(), "close").has_value());
  CHECK_FALSE(step_method(end_usage(), "open").has_value());
}

TEST_CASE("choice steps on labels only") {
  auto choice = step_method(file_x_state(), "isEOF");
  REQUIRE(choice.has_value());
  auto eof = step_label(*choice, "EOF");
  REQUIRE(eof.has_value());
  CHECK(usage_equal(canonical_usage(*eof),
                    Usage{usage_branch({{"close", usage_end()}}), {}}));
  CHECK_FALSE(step_label(*choice, "MAYBE").has_value());
  CHECK_FALSE(step_label(file_x_state(), "EOF").has_value());
  auto labels = offered_labels(*choice);
  CHECK(labels == std::vector<std::string>{"EOF", "NOTEOF"});
}

TEST_CASE("File usage reachable states, frozen enumeration") {
  Usage u = file_usage();
  auto states = reachable_states(u);
  CHECK(states.size() == 6);
  std::vector<Usage> expected = {
      u,                  // {open; X}
      file_x_state(),     // X
      Usage{usage_choice({{"EOF", usage_branch({{"close", usage_end()}})},
                          {"NOTEOF", usage_branch({{"read", usage_var("X")}})}}),
            u.equations},
      Usage{usage_branch({{"close", usage_end()}}), {}},
      Usage{usage_branch({{"read", usage_var("X")}}), u.equations},
      end_usage(),
  };
  for (const auto& want : expected) {
    bool found = false;
    for (const auto& got : states)
      if (usage_equal(canonical_usage(got), canonical_usage(want))) found = true;
    CHECK_MESSAGE(found, "missing state " << print_usage(want));
  }
}

TEST_CASE("File usage transition edges") {
  auto edges = usage_transitions(file_usage());
  // open, isEOF, EOF, NOTEOF, close, read
  CHECK(edges.size() == 6);
  int labels = 0;
  for (const auto& e : edges) labels += e.is_label ? 1 : 0;
  CHECK(labels == 2);
}

TEST_CASE("unfolding faults") {
  UsageState unbound{usage_var("Z"), {}};
  CHECK_THROWS_AS(resolve_head(unbound), UsageError);
  UsageState cyc{usage_var("X"), {{"X", usage_var("X")}}};
  try {
    resolve_head(cyc);
    FAIL("expected a cycle fault");
  } catch (const UsageError& e) {
    CHECK(e.code == DiagCode::UnfoldCycle);
  }
}

TEST_CASE("unfold invariance over random recursive usages") {
  for (unsigned seed = 0; seed < 200; ++seed) {
    testgen::Rng rng(seed);
    Usage s = testgen::gen_recursive_usage(rng);
    UsageState unfolded = resolve_head(s);
    auto om = offered_methods(s);
    CHECK(om == offered_methods(unfolded));
    for (const auto& m : testgen::usage_methods()) {
      auto a = step_method(s, m);
      auto b = step_method(unfolded, m);
      REQUIRE(a.has_value() == b.has_value());
      if (a)
        CHECK_MESSAGE(usage_equal(canonical_usage(*a), canonical_usage(*b)),
                      "seed " << seed << " method " << m);
    }
  }
}

// ---------------------------------------------------------------------------
// parser and printer
// ---------------------------------------------------------------------------

TEST_CASE("File class parses to the declared usage") {
  Program p = parse_corpus("filereader.mungo");
  const ClassDecl* file = p.find_class("File");
  REQUIRE(file);
  CHECK(usage_equal(canonical_usage(file->usage), canonical_usage(file_usage())));
  CHECK(file->fields.size() == 2);
  CHECK(file->methods.size() == 4);
}

TEST_CASE("unicode angle brackets lex like ascii ones") {
  std::string src = slurp(corpus_path("id_generic.mungo"));
  // swap the generic brackets for their unicode forms
  std::string uni;
  for (char c : src) {
    if (c == '<') uni += "\xE2\x9F\xA8";
    else if (c == '>') uni += "\xE2\x9F\xA9";
    else uni += c;
  }
  ParseResult a = parse_program(src, "ascii");
  ParseResult b = parse_program(uni, "unicode");
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(program_equal(*a.program, *b.program));
}

TEST_CASE("round-trip on every corpus program") {
  namespace fs = std::filesystem;
  int seen = 0;
  for (const auto& ent : fs::directory_iterator(CORPUS_DIR)) {
    if (ent.path().extension() != ".mungo") continue;
    ++seen;
    ParseResult pr = parse_program(slurp(ent.path().string()), ent.path().filename());
    REQUIRE_MESSAGE(pr.syntax_ok(), ent.path().string());
    ParseResult again = parse_program(print_program(*pr.program), "printed");
    REQUIRE_MESSAGE(again.syntax_ok(), "reprint of " << ent.path().string());
    CHECK_MESSAGE(program_equal(*pr.program, *again.program), ent.path().string());
  }
  CHECK(seen >= 16);
}

TEST_CASE("round-trip on generated programs") {
  for (unsigned seed = 0; seed < 500; ++seed) {
    Program p = testgen::gen_program(seed);
    std::string text = print_program(p);
    ParseResult pr = parse_program(text, "gen");
    REQUIRE_MESSAGE(pr.syntax_ok(), "seed " << seed << "\n" << text);
    CHECK_MESSAGE(program_equal(p, *pr.program), "seed " << seed << "\n" << text);
  }
}

TEST_CASE("parse errors carry the right codes") {
  auto has_code = [](const std::string& src, DiagCode code) {
    ParseResult pr = parse_program(src, "t");
    for (const auto& d : pr.diagnostics)
      if (d.code == code) return true;
    return false;
  };
  CHECK(has_code("class C {", DiagCode::SyntaxError));
  CHECK(has_code("enum E { }", DiagCode::EmptyEnum));
  CHECK(has_code("enum E { A } class C { end E f void m(void x) { unit } }",
                 DiagCode::EnumTypedField));
  CHECK(has_code("class C { end void m(void x) { zz } }", DiagCode::UndeclaredName));
  CHECK(has_code("class C { end } class C { end }", DiagCode::DuplicateName));
  CHECK(has_code("class C { {m; X} void m(void x) { unit } }",
                 DiagCode::UnboundUsageVariable));
  CHECK(has_code("class C { {m; X}[X = X] void m(void x) { unit } }",
                 DiagCode::UnfoldCycle));
  CHECK(has_code("class C { end D f }", DiagCode::UnknownClass));
  CHECK(has_code("class C { end }", DiagCode::MissingMainClass));
  CHECK(has_code("class Main { end void main(void x) { unit } }",
                 DiagCode::MissingMainClass));
}

// ---------------------------------------------------------------------------
// type checker
// ---------------------------------------------------------------------------

TEST_CASE("typing a field call advances its protocol") {
  Program p = parse_corpus("filereader.mungo");
  Usage u = file_usage();
  TypingState st;
  st.lambda["this"] = LambdaEntry{ClassView{"FileReader", nullptr},
                                  {{"file", type_typestate("File", nullptr, u)}}};
  st.stack.push_back(TypeFrame{"this", "x", type_void()});
  ExprPtr call = expr_call(RecvKind::Field, "file", "open", expr_value(value_unit()));
  ExprTyping res = type_expression(p, st, call);
  CHECK_FALSE(res.divergent);
  CHECK(type_equal(res.type, type_void()));
  TypeExprPtr after = res.state.lambda.at("this").fields.at("file");
  REQUIRE(after->kind == TypeKind::Typestate);
  CHECK(usage_equal(canonical_usage(after->usage), canonical_usage(file_x_state())));
}

TEST_CASE("class usage check of File follows the frozen rule trace") {
  Program p = parse_corpus("filereader.mungo");
  const ClassDecl* file = p.find_class("File");
  REQUIRE(file);
  ClassCheckResult res = type_class(p, *file);
  CHECK(res.ok);
  std::vector<std::string> expected = {"TCBr", "TCRec", "TCBr", "TCCh",
                                       "TCBr", "TCEn",  "TCBr", "TCVar"};
  CHECK(res.rule_trace == expected);
}

TEST_CASE("whole corpus programs type as expected") {
  CHECK(type_program(parse_corpus("filereader.mungo")).empty());
  CHECK(type_program(parse_corpus("pump.mungo")).empty());
  CHECK(type_program(parse_corpus("id_generic.mungo")).empty());
  CHECK(type_program(parse_corpus("chain.mungo")).empty());
}

TEST_CASE("worked-example mutations are rejected with exact codes") {
  auto code_of = [](const std::string& name) {
    auto diags = type_program(parse_corpus(name));
    REQUIRE_FALSE(diags.empty());
    return diags.front().code;
  };
  CHECK(code_of("reject_missing_new.mungo") == DiagCode::FieldNotAvailable);
  CHECK(code_of("reject_null_overwrite.mungo") == DiagCode::FieldMisused);
  CHECK(code_of("reject_overwrite_open.mungo") == DiagCode::FieldMisused);
  CHECK(code_of("reject_generic_call.mungo") == DiagCode::MethodNotAvailable);
  CHECK(code_of("reject_out_of_order.mungo") == DiagCode::MethodNotAvailable);
  CHECK(code_of("reject_unfinished.mungo") == DiagCode::NonTerminatedAfterUsage);
}

TEST_CASE("loop invariant violations and branch joins") {
  auto check_src = [](const std::string& src) {
    ParseResult pr = parse_program(src, "t");
    REQUIRE(pr.ok());
    auto diags = type_program(*pr.program);
    REQUIRE_FALSE(diags.empty());
    return diags.front().code;
  };
  std::string cell =
      "class Cell { {set; {get; end}} bool v "
      "void set(bool x) { v = x } bool get(void x) { v } } ";
  CHECK(check_src(cell +
                  "class Main { {main; end} Cell a void main(void x) "
                  "{ a = new Cell; loop: (a.set(true); continue loop) } }") ==
        DiagCode::LoopEnvMismatch);
  CHECK(check_src(cell +
                  "class Main { {main; end} Cell a void main(void x) "
                  "{ a = new Cell; (if (true) { a.set(true) } else { unit }); "
                  "a.get(unit); unit } }") == DiagCode::BranchMismatch);
  CHECK(check_src(cell +
                  "class Main { {main; end} Cell a void main(void x) "
                  "{ a = new Cell; a.set(unit); a.get(unit); unit } }") ==
        DiagCode::TypeMismatch);
  CHECK(check_src("class Probe { {ping; end} void ping(void x) { unit } } "
                  "class Main { {main; end} void main(void x) { new Probe; unit } }") ==
        DiagCode::LinearValueDropped);
}

TEST_CASE("initial configurations of accepted programs are well typed") {
  for (const auto* name : {"filereader.mungo", "pump.mungo", "id_generic.mungo",
                           "toggle.mungo", "two_cells.mungo"}) {
    Program p = parse_corpus(name);
    Configuration c = initial_configuration(p);
    CHECK_MESSAGE(well_typed_configuration(p, c).empty(), name);
  }
}

// ---------------------------------------------------------------------------
// interpreter
// ---------------------------------------------------------------------------

TEST_CASE("initial configuration shape") {
  Program p = parse_corpus("filereader.mungo");
  Configuration c = initial_configuration(p);
  CHECK(c.heap.size() == 1);
  const HeapEntry& main_obj = c.heap.begin()->second;
  CHECK(main_obj.typestate->class_name == "Main");
  CHECK(usage_equal(canonical_usage(main_obj.typestate->usage), end_usage()));
  CHECK(c.stack.size() == 1);
  CHECK(well_formed_configuration(p, c));
  CHECK(linearity_conserved(p, c));
}

TEST_CASE("worked example runs to completion, first steps hand-checked") {
  Program p = parse_corpus("filereader.mungo");
  Configuration c = initial_configuration(p);
  // hand-stepped: allocate reader, store it, call init (allocates the File),
  // then readFile opens, loops through one read, and closes
  std::vector<std::string> expected_firing = {
      "New",  "Upd", "Seq", "CallF", "New",    "Upd",   "Seq", "Ret",  "Seq", "CallF",
      "CallF", "Ret", "Seq", "Lbl",  "CallF", "uDeref", "IfFls", "Ret", "SwF", "CallF"};
  for (size_t i = 0; i < expected_firing.size(); ++i) {
    StepResult r = step(p, c);
    REQUIRE(r.kind == StepResult::Kind::Stepped);
    CHECK_MESSAGE(r.rules.back() == expected_firing[i],
                  "step " << i + 1 << ": got " << r.rules.back());
    if (i == 0) CHECK(r.rules == std::vector<std::string>{"SeqC", "FldC", "New"});
    if (i == 10) CHECK(r.rules == std::vector<std::string>{"RetC", "SeqC", "CallF"});
    c = std::move(r.next);
    CHECK(well_formed_configuration(p, c));
    CHECK(linearity_conserved(p, c));
  }
  RunOutcome oc = run(p, RunOptions{10000, false});
  CHECK(oc.kind == RunOutcome::Kind::Terminal);
  CHECK(value_equal(oc.result, value_unit()));
  CHECK(oc.protocols_complete);
}

TEST_CASE("unchecked programs get stuck with the right reasons") {
  {
    Program p = parse_corpus("run_null_call.mungo");
    RunOutcome oc = run(p);
    CHECK(oc.kind == RunOutcome::Kind::Stuck);
    CHECK(oc.stuck == StuckKind::NullCall1);
  }
  {
    ParseResult pr = parse_program(
        "class Probe { {ping; end} void ping(void x) { unit } } "
        "class Main { {main; end} void main(void x) { new Probe; unit } }",
        "t");
    REQUIRE(pr.syntax_ok());
    RunOutcome oc = run(*pr.program);
    CHECK(oc.kind == RunOutcome::Kind::Stuck);
    CHECK(oc.stuck == StuckKind::LinearDrop);
  }
  {
    ParseResult pr = parse_program(
        "class Token { {consume; end} void consume(void x) { unit } } "
        "class Sink { {take; end} void take(Token[{consume; end}] s) { unit } } "
        "class Main { {main; end} Token t Sink k void main(void x) "
        "{ t = new Token; k = new Sink; k.take(t); unit } }",
        "t");
    REQUIRE(pr.syntax_ok());
    RunOutcome oc = run(*pr.program);
    CHECK(oc.kind == RunOutcome::Kind::Stuck);
    CHECK(oc.stuck == StuckKind::ParameterMisused);
  }
}

TEST_CASE("step budget exhaustion") {
  Program p = parse_corpus("run_budget.mungo");
  RunOutcome oc = run(p, RunOptions{500, false});
  CHECK(oc.kind == RunOutcome::Kind::Budget);
  CHECK(oc.steps == 500);
}

// ---------------------------------------------------------------------------
// run-time monitor: hand-built configurations, step agreement
// ---------------------------------------------------------------------------

namespace {

// Main driving a Cell that is still at {set; {get; end}}.
struct Rig {
  Program prog;
  Configuration cfg;

  Rig() {
    ParseResult pr = parse_program(
        "class Cell { {set; {get; end}} bool v "
        "void set(bool x) { v = x } bool get(void x) { v } } "
        "class Main { {main; end} Cell a bool r void main(void x) "
        "{ a = new Cell; a.set(true); r = a.get(unit); unit } }",
        "rig");
    REQUIRE(pr.ok());
    prog = *pr.program;
    cfg.heap["o0"] = HeapEntry{type_typestate("Main", nullptr, end_usage()),
                               {{"a", value_null()}, {"r", value_bool(false)}}};
    cfg.stack.push_back(Frame{"o0", "x", value_unit()});
    cfg.next_obj = 1;
  }

  void add_cell() {
    Usage u;
    u.body = usage_branch({{"set", usage_branch({{"get", usage_end()}})}});
    cfg.heap["o1"] = HeapEntry{type_typestate("Cell", nullptr, u),
                               {{"v", value_bool(false)}}};
    cfg.heap["o0"].fields["a"] = value_object("o1");
    cfg.next_obj = 2;
  }
};

void expect_fault(const Rig& rig, StuckKind kind) {
  auto fault = check_error(rig.prog, rig.cfg);
  REQUIRE(fault.has_value());
  CHECK(fault->kind == kind);
  StepResult r = step(rig.prog, rig.cfg);
  REQUIRE(r.kind == StepResult::Kind::Stuck);
  CHECK(r.stuck == kind);
}

}  // namespace

TEST_CASE("monitor flags a call through a null field") {
  Rig rig;
  rig.cfg.expr = expr_call(RecvKind::Field, "a", "set", expr_value(value_bool(true)));
  expect_fault(rig, StuckKind::NullCall1);
}

TEST_CASE("monitor flags a call through a null parameter") {
  Rig rig;
  rig.cfg.stack.back().value = value_null();
  rig.cfg.expr = expr_call(RecvKind::Param, "x", "set", expr_value(value_bool(true)));
  expect_fault(rig, StuckKind::NullCall2);
}

TEST_CASE("monitor flags a refused method on a field receiver") {
  Rig rig;
  rig.add_cell();
  rig.cfg.expr = expr_call(RecvKind::Field, "a", "get", expr_value(value_unit()));
  expect_fault(rig, StuckKind::MthdNotAv1);
}

TEST_CASE("monitor flags a refused method on a parameter receiver") {
  Rig rig;
  rig.add_cell();
  rig.cfg.stack.back().value = value_object("o1");
  rig.cfg.heap["o0"].fields["a"] = value_null();
  rig.cfg.expr = expr_call(RecvKind::Param, "x", "get", expr_value(value_unit()));
  expect_fault(rig, StuckKind::MthdNotAv2);
}

TEST_CASE("monitor flags a missing field") {
  Rig rig;
  rig.cfg.expr = expr_field("zz");
  expect_fault(rig, StuckKind::FldErr);
}

TEST_CASE("monitor descends into composite positions") {
  Rig rig;
  rig.cfg.expr = expr_seq(
      expr_call(RecvKind::Field, "a", "set", expr_value(value_bool(true))),
      expr_value(value_unit()));
  auto fault = check_error(rig.prog, rig.cfg);
  REQUIRE(fault.has_value());
  CHECK(fault->kind == StuckKind::NullCall1);
}

TEST_CASE("monitor is silent on every step of a checked run") {
  Program p = parse_corpus("filereader.mungo");
  Configuration c = initial_configuration(p);
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(check_error(p, c).has_value());
    StepResult r = step(p, c);
    if (r.kind != StepResult::Kind::Stepped) {
      CHECK(r.kind == StepResult::Kind::Terminal);
      break;
    }
    c = std::move(r.next);
  }
}

// ---------------------------------------------------------------------------
// harness
// ---------------------------------------------------------------------------

TEST_CASE("expectation sidecar parsing") {
  auto acc = parse_expectation("accept\n");
  REQUIRE(acc.has_value());
  CHECK(acc->kind == Expectation::Kind::Accept);
  auto rej = parse_expectation("reject FieldMisused,TypeMismatch\n");
  REQUIRE(rej.has_value());
  CHECK(rej->codes == std::vector<std::string>{"FieldMisused", "TypeMismatch"});
  auto rn = parse_expectation("run Stuck:NullCall1\n");
  REQUIRE(rn.has_value());
  CHECK(rn->run_outcome == "Stuck:NullCall1");
  CHECK_FALSE(parse_expectation("bogus\n").has_value());
  CHECK_FALSE(parse_expectation("reject\n").has_value());
}

TEST_CASE("stale expectations are reported as mismatches") {
  std::string src = slurp(corpus_path("simple_main.mungo"));
  Expectation exp;
  exp.kind = Expectation::Kind::Reject;
  exp.codes = {"TypeMismatch"};
  CaseResult res = evaluate_case(src, "simple_main.mungo", exp, 1000);
  CHECK_FALSE(res.pass);
  CHECK(res.detail.find("expected reject") != std::string::npos);
}

TEST_CASE("whole corpus passes through the library entry point") {
  CorpusReport rep = run_corpus(CORPUS_DIR, 100000);
  CHECK(rep.entries.size() >= 16);
  for (const auto& e : rep.entries)
    CHECK_MESSAGE(e.result.pass, e.path << ": " << e.result.detail);
  CHECK(rep.all_pass());
}

TEST_CASE("verify pipeline is clean on the worked example") {
  VerifyOptions opts;
  opts.wtc_every_step = true;
  VerifyReport rep = verify_source(slurp(corpus_path("filereader.mungo")),
                                   "filereader.mungo", opts);
  CHECK(rep.check.ok);
  CHECK(rep.violations.empty());
  CHECK(rep.outcome.kind == RunOutcome::Kind::Terminal);
  CHECK(rep.ok());
}

TEST_CASE("runtime error report format") {
  Program p = parse_corpus("run_null_call.mungo");
  RunOutcome oc = run(p);
  std::string msg = format_runtime_error(oc);
  CHECK(msg.rfind("runtime-error: NullCall1", 0) == 0);
  CHECK(msg.find("at step") != std::string::npos);
}

TEST_CASE("step budget default honours the environment") {
  setenv("MUNGO_MAX_STEPS", "123", 1);
  CHECK(default_max_steps() == 123);
  setenv("MUNGO_MAX_STEPS", "nonsense", 1);
  CHECK(default_max_steps() == 100000);
  unsetenv("MUNGO_MAX_STEPS");
  CHECK(default_max_steps() == 100000);
}
