#pragma once

#include <map>
#include <string>
#include <vector>

#include "babelview/babelview_gen.hpp"
#include "babelview/interface_analysis.hpp"

namespace bv {

// Phase 3: every instantiation of a mapped Webview class is redirected to
// its generated subclass. Two idioms are rewritten: direct construction
// (new + constructor call) and findViewById results cast to a Webview
// class. Everything else stays byte-identical, and running the pass on an
// already instrumented program changes nothing.

struct InstrumentResult {
  Program program;
  WebviewInterfaceMap map;                     // discovery result on the input
  std::map<std::string, std::string> mapping;  // webview -> generated subclass
  std::vector<std::string> lints;
};

InstrumentResult instrument_program(const Program& program);

Program rewrite_constructors(const Program& program,
                             const std::map<std::string, std::string>& mapping,
                             std::vector<std::string>* lints = nullptr);

Program rewrite_findviewbyid(const Program& program,
                             const std::map<std::string, std::string>& mapping,
                             std::vector<std::string>* lints = nullptr);

}  // namespace bv
