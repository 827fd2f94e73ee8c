#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

// AIR: a small textual three-address representation of an app. A program is
// a manifest plus classes with single inheritance, instance fields and
// methods whose bodies use locals, field access, calls and opaque two-way
// branches (ifnd). All concrete conditionals are lowered to ifnd.

namespace bv {

struct SourcePos {
  int line = 0;
  int col = 0;
};

class AirError : public std::runtime_error {
 public:
  AirError(const std::string& msg, SourcePos pos = {});
  SourcePos where;
};

// Method signature as written at call sites: "Cls.name/arity". The arity
// counts the full argument list, receiver included for instance methods.
struct Sig {
  std::string cls;
  std::string name;
  int arity = 0;

  std::string str() const;
  static Sig parse(const std::string& text);
  auto operator<=>(const Sig&) const = default;
};

// A program point: method plus instruction index.
struct Site {
  Sig method;
  int index = -1;

  std::string str() const;
  static Site parse(const std::string& text);
  auto operator<=>(const Site&) const = default;
};

enum class Op {
  ConstString,  // dst = "..."
  ConstInt,     // dst = 42
  Assign,       // dst = src
  New,          // dst = new Type
  Cast,         // dst = cast Type src
  Get,          // dst = get recv.field
  Put,          // put recv.field = src
  Invoke,       // [dst =] vcall|scall|kcall Sig(args)
  Return,       // return [dst]
  Goto,         // goto label
  IfNondet,     // ifnd label
  Label,        // label:
};

enum class CallKind { Virtual, Static, Special };  // vcall, scall, kcall

struct Instr {
  Op op = Op::Label;
  std::string dst;    // defined local; also the returned local for Return
  std::string src;    // Assign/Cast source, Put value
  std::string type;   // New/Cast type
  std::string recv;   // Get/Put receiver local
  std::string field;  // Get/Put field name
  std::string str_val;
  long long int_val = 0;
  std::string label;  // Goto/IfNondet target, Label name
  CallKind call_kind = CallKind::Virtual;
  Sig callee;
  std::vector<std::string> args;  // receiver first for vcall/kcall and instance scall
  SourcePos pos;
};

struct Param {
  std::string name;
  std::string type;
};

struct MethodDef {
  std::string name;
  std::vector<Param> params;
  std::string ret = "void";
  bool is_static = false;
  std::set<std::string> annotations;
  std::vector<Instr> body;
  SourcePos pos;

  bool is_constructor() const { return name == "<init>"; }
  int arity() const { return static_cast<int>(params.size()) + (is_static ? 0 : 1); }
  // Locals defined on entry: "this" (instance methods) followed by parameters.
  std::vector<std::string> entry_locals() const;
};

struct FieldDef {
  std::string name;
  std::string type;
  SourcePos pos;
};

struct ClassDef {
  std::string name;
  std::string super;  // empty only for the root Object stub
  bool is_final = false;
  bool is_external = false;
  std::vector<FieldDef> fields;
  std::vector<MethodDef> methods;
  SourcePos pos;

  const MethodDef* find_method(const std::string& name, int arity) const;
  const FieldDef* find_field(const std::string& name) const;
};

struct Manifest {
  int target_api = 19;
  std::vector<Sig> entry_points;
  std::vector<std::string> permissions;
  bool present = false;  // whether the document carried a manifest block
};

struct Program {
  Manifest manifest;
  std::map<std::string, ClassDef> classes;  // app classes, generated ones included
  std::map<std::string, ClassDef> stubs;    // platform classes, external

  const ClassDef* find_class(const std::string& name) const;
  bool has_type(const std::string& name) const;  // class name or value type
  // Walks up the superclass chain; fills defined_in with the declaring class.
  const MethodDef* resolve_method(const std::string& cls, const std::string& name,
                                  int arity, std::string* defined_in = nullptr) const;
  // Signature of the resolved definition (declaring class), for rule matching.
  std::optional<Sig> def_sig(const Sig& call) const;
  // Superclass chain starting at cls, ending at the root.
  std::vector<std::string> super_chain(const std::string& cls) const;
};

inline bool is_value_type(const std::string& t) { return t == "int" || t == "string"; }
bool is_generated_class(const std::string& name);  // trailing "$BabelView"

struct AirDocument {
  std::optional<Manifest> manifest;
  std::vector<ClassDef> classes;
};

// Syntax only; no name resolution.
AirDocument parse_air(const std::string& text);

// Merges app classes with stub classes (marked external), synthesizes
// default constructors for app classes that lack one, and validates the
// whole program. Throws AirError with a location on any violation.
Program link_program(const AirDocument& app, const AirDocument& stubs);
Program parse_program(const std::string& text);  // uses the built-in platform stubs
Program parse_program(const std::string& text, const std::string& stubs_text);
void validate_program(const Program& program);

// Canonical text of the manifest and app classes (stubs are not emitted).
// Classes sort by name; parse(serialize(p)) reproduces p exactly.
std::string serialize_program(const Program& program);
std::string serialize_class(const ClassDef& cls);

// Reflexive-transitive subtypes of a class, stubs included.
std::set<std::string> subclasses(const Program& program, const std::string& type);
bool is_subtype(const Program& program, const std::string& a, const std::string& b);

// Static type of a local, reconstructed by forward dataflow per method.
struct TypeVal {
  enum Kind { Bottom, Int, Str, Obj, Any } kind = Bottom;
  std::string cls;  // for Obj

  bool operator==(const TypeVal&) const = default;
};

// Pre-state per instruction index (one extra entry for the method end).
std::vector<std::map<std::string, TypeVal>> infer_local_types(const Program& program,
                                                              const ClassDef& cls,
                                                              const MethodDef& method);

// Instruction successors within a body; body.size() acts as the end index.
std::map<std::string, int> label_indices(const MethodDef& method);
std::vector<int> instr_successors(const MethodDef& method, int index,
                                  const std::map<std::string, int>& labels);

}  // namespace bv
