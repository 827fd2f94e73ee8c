#include <sstream>

#include "babelview/air.hpp"

namespace bv {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string call_keyword(CallKind k) {
  switch (k) {
    case CallKind::Virtual: return "vcall";
    case CallKind::Static: return "scall";
    case CallKind::Special: return "kcall";
  }
  return "vcall";
}

void print_instr(std::ostringstream& os, const Instr& in) {
  if (in.op == Op::Label) {
    os << "  " << in.label << ":\n";
    return;
  }
  os << "    ";
  switch (in.op) {
    case Op::ConstString:
      os << in.dst << " = " << quote(in.str_val) << ";";
      break;
    case Op::ConstInt:
      os << in.dst << " = " << in.int_val << ";";
      break;
    case Op::Assign:
      os << in.dst << " = " << in.src << ";";
      break;
    case Op::New:
      os << in.dst << " = new " << in.type << ";";
      break;
    case Op::Cast:
      os << in.dst << " = cast " << in.type << " " << in.src << ";";
      break;
    case Op::Get:
      os << in.dst << " = get " << in.recv << "." << in.field << ";";
      break;
    case Op::Put:
      os << "put " << in.recv << "." << in.field << " = " << in.src << ";";
      break;
    case Op::Invoke: {
      if (!in.dst.empty()) os << in.dst << " = ";
      os << call_keyword(in.call_kind) << " " << in.callee.str() << "(";
      for (size_t i = 0; i < in.args.size(); ++i) {
        if (i) os << ", ";
        os << in.args[i];
      }
      os << ");";
      break;
    }
    case Op::Return:
      os << "return";
      if (!in.dst.empty()) os << " " << in.dst;
      os << ";";
      break;
    case Op::Goto:
      os << "goto " << in.label << ";";
      break;
    case Op::IfNondet:
      os << "ifnd " << in.label << ";";
      break;
    case Op::Label:
      break;
  }
  os << "\n";
}

void print_method(std::ostringstream& os, const MethodDef& m) {
  if (m.annotations.count("JavascriptInterface")) os << "  @JavascriptInterface\n";
  os << "  ";
  if (m.is_static) os << "static ";
  os << "method " << m.name << "(";
  for (size_t i = 0; i < m.params.size(); ++i) {
    if (i) os << ", ";
    os << m.params[i].name << " : " << m.params[i].type;
  }
  os << ") : " << m.ret << " {";
  if (m.body.empty()) {
    os << " }\n";
    return;
  }
  os << "\n";
  for (const auto& in : m.body) print_instr(os, in);
  os << "  }\n";
}

}  // namespace

std::string serialize_class(const ClassDef& c) {
  std::ostringstream os;
  if (c.is_final) os << "final ";
  os << "class " << c.name;
  if (!c.super.empty()) os << " extends " << c.super;
  os << " {\n";
  for (const auto& f : c.fields) os << "  field " << f.name << " : " << f.type << ";\n";
  for (size_t i = 0; i < c.methods.size(); ++i) {
    if (i || !c.fields.empty()) os << "\n";
    print_method(os, c.methods[i]);
  }
  os << "}\n";
  return os.str();
}

std::string serialize_program(const Program& p) {
  std::ostringstream os;
  if (p.manifest.present) {
    os << "manifest {\n";
    os << "  target_api = " << p.manifest.target_api << ";\n";
    for (const auto& e : p.manifest.entry_points) os << "  entry " << e.str() << ";\n";
    for (const auto& perm : p.manifest.permissions) os << "  permission " << quote(perm) << ";\n";
    os << "}\n";
  }
  bool first = !p.manifest.present;
  for (const auto& [name, cls] : p.classes) {
    if (!first) os << "\n";
    first = false;
    os << serialize_class(cls);
  }
  return os.str();
}

}  // namespace bv
