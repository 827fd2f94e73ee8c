#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "babelview/air.hpp"
#include "babelview/defaults.hpp"

using namespace bv;

namespace {

const char* kBridgesApp = R"(
manifest {
  target_api = 19;
  entry MainActivity.onCreate/1;
}

class FrameworkBridge extends Object {
  @JavascriptInterface
  method foo() : int {
    r = 1;
    return r;
  }
}

class MyBridge extends FrameworkBridge {
  @JavascriptInterface
  method bar() : int {
    r = 2;
    return r;
  }
}

class MyWebView extends WebView {
}

class MainActivity extends Activity {
  method initInterface(aWebView : WebView, aBridge : FrameworkBridge) : void {
    n = "Android";
    vcall WebView.addJavascriptInterface/3(aWebView, aBridge, n);
    return;
  }

  method onCreate() : void {
    m = new MyWebView;
    kcall MyWebView.<init>/1(m);
    b = new MyBridge;
    kcall MyBridge.<init>/1(b);
    vcall MainActivity.initInterface/3(this, m, b);
    u = "https://example.net/start";
    vcall MyWebView.loadUrl/2(m, u);
    return;
  }
}
)";

}  // namespace

TEST_CASE("empty document yields a program with only stub classes") {
  Program p = parse_program("");
  CHECK(p.classes.empty());
  CHECK(p.stubs.count("WebView") == 1);
  CHECK(p.stubs.count("Object") == 1);
  CHECK(p.manifest.target_api == 19);
}

TEST_CASE("single annotated method parses") {
  Program p = parse_program(R"(
    class LocationUtils extends Object {
      @JavascriptInterface
      method getLocation() : string {
        lm = new LocationManager;
        kcall LocationManager.<init>/1(lm);
        prov = "gps";
        r = vcall LocationManager.getLastKnownLocation/2(lm, prov);
        return r;
      }
    }
  )");
  REQUIRE(p.classes.count("LocationUtils") == 1);
  const ClassDef& c = p.classes.at("LocationUtils");
  const MethodDef* m = c.find_method("getLocation", 1);
  REQUIRE(m != nullptr);
  CHECK(m->annotations.count("JavascriptInterface") == 1);
  CHECK(m->ret == "string");
  // default constructor is synthesized
  CHECK(c.find_method("<init>", 1) != nullptr);
}

TEST_CASE("unresolved extends is reported with the missing name") {
  try {
    parse_program("class A extends Missing { }");
    FAIL("expected an error");
  } catch (const AirError& e) {
    CHECK(std::string(e.what()).find("Missing") != std::string::npos);
  }
}

TEST_CASE("duplicate class is rejected") {
  CHECK_THROWS_AS(parse_program("class A extends Object { } class A extends Object { }"),
                  AirError);
}

TEST_CASE("inheritance cycle is rejected") {
  CHECK_THROWS_AS(parse_program("class A extends B { } class B extends A { }"), AirError);
}

TEST_CASE("syntax error carries a position") {
  try {
    parse_program("class A extends Object {\n  field x :\n}");
    FAIL("expected an error");
  } catch (const AirError& e) {
    CHECK(e.where.line >= 2);
  }
}

TEST_CASE("use before assignment is rejected") {
  CHECK_THROWS_AS(parse_program(R"(
    class A extends Object {
      method f() : void {
        x = y;
        return;
      }
    }
  )"),
                  AirError);
}

TEST_CASE("assignment on only one branch is not definite") {
  CHECK_THROWS_AS(parse_program(R"(
    class A extends Object {
      method f() : void {
        ifnd skip;
        x = 1;
      skip:
        y = x;
        return;
      }
    }
  )"),
                  AirError);
}

TEST_CASE("branch target must exist") {
  CHECK_THROWS_AS(parse_program(R"(
    class A extends Object {
      method f() : void {
        goto nowhere;
      }
    }
  )"),
                  AirError);
}

TEST_CASE("parameter reassignment is rejected") {
  CHECK_THROWS_AS(parse_program(R"(
    class A extends Object {
      method f(x : int) : void {
        x = 2;
        return;
      }
    }
  )"),
                  AirError);
}

TEST_CASE("non-void method must return on every path") {
  CHECK_THROWS_AS(parse_program(R"(
    class A extends Object {
      method f() : int {
        ifnd out;
        r = 1;
        return r;
      out:
      }
    }
  )"),
                  AirError);
}

TEST_CASE("unknown field on a known receiver type is rejected") {
  CHECK_THROWS_AS(parse_program(R"(
    class A extends Object {
      method f() : void {
        a = new A;
        kcall A.<init>/1(a);
        x = get a.nope;
        return;
      }
    }
  )"),
                  AirError);
}

TEST_CASE("call to an absent signature is rejected") {
  CHECK_THROWS_AS(parse_program(R"(
    class A extends Object {
      method f() : void {
        vcall A.g/1(this);
        return;
      }
    }
  )"),
                  AirError);
}

TEST_CASE("parse then serialize reaches a fixpoint") {
  Program p1 = parse_program(kBridgesApp);
  std::string s1 = serialize_program(p1);
  Program p2 = parse_program(s1);
  std::string s2 = serialize_program(p2);
  CHECK(s1 == s2);
  Program p3 = parse_program(s2);
  CHECK(serialize_program(p3) == s2);
}

TEST_CASE("string literals round-trip through escapes") {
  Program p = parse_program(R"(
    class A extends Object {
      method f() : string {
        s = "a\"b\\c\nd\te";
        return s;
      }
    }
  )");
  const Instr& in = p.classes.at("A").find_method("f", 1)->body.front();
  CHECK(in.str_val == "a\"b\\c\nd\te");
  std::string s1 = serialize_program(p);
  CHECK(serialize_program(parse_program(s1)) == s1);
}

TEST_CASE("subclasses on the bridges app") {
  Program p = parse_program(kBridgesApp);
  CHECK(subclasses(p, "WebView") == std::set<std::string>{"WebView", "MyWebView"});
  CHECK(subclasses(p, "FrameworkBridge") ==
        std::set<std::string>{"FrameworkBridge", "MyBridge"});
  CHECK(subclasses(p, "MyBridge") == std::set<std::string>{"MyBridge"});
  CHECK_THROWS_AS(subclasses(p, "NoSuch"), AirError);
}

TEST_CASE("is_subtype is a partial order on the program classes") {
  Program p = parse_program(kBridgesApp);
  CHECK(is_subtype(p, "MyWebView", "WebView"));
  CHECK(is_subtype(p, "MyWebView", "MyWebView"));
  CHECK_FALSE(is_subtype(p, "WebView", "MyWebView"));

  std::vector<std::string> names;
  for (const auto& [n, c] : p.classes) names.push_back(n);
  for (const auto& [n, c] : p.stubs) names.push_back(n);
  for (const auto& a : names) {
    CHECK(is_subtype(p, a, a));
    for (const auto& b : names) {
      if (a != b && is_subtype(p, a, b)) CHECK_FALSE(is_subtype(p, b, a));
      for (const auto& c : names)
        if (is_subtype(p, a, b) && is_subtype(p, b, c)) CHECK(is_subtype(p, a, c));
    }
  }
}

TEST_CASE("entry points must resolve to concrete methods") {
  CHECK_THROWS_AS(parse_program(R"(
    manifest {
      target_api = 19;
      entry Nope.onCreate/1;
    }
  )"),
                  AirError);
}

TEST_CASE("extending a final class is rejected and the flag round-trips") {
  CHECK_THROWS_AS(parse_program(R"(
    final class A extends Object { }
    class B extends A { }
  )"),
                  AirError);
  Program p = parse_program("final class A extends Object { }");
  CHECK(p.classes.at("A").is_final);
  CHECK(serialize_program(p).find("final class A") != std::string::npos);
}

TEST_CASE("default stubs parse and expose the expected surface") {
  Program p = parse_program("");
  for (const char* name :
       {"WebView", "Activity", "Intent", "SharedPreferences", "SharedPreferencesEditor",
        "StringBuilder", "TelephonyManager", "LocationManager", "File", "FileOutputStream",
        "FileInputStream", "SQLiteDatabase", "SmsManager", "MediaPlayer", "Class", "Method",
        "Constructor"}) {
    CAPTURE(name);
    CHECK(p.stubs.count(name) == 1);
    CHECK(p.stubs.at(name).is_external);
  }
  CHECK(p.resolve_method("WebView", "addJavascriptInterface", 3) != nullptr);
  CHECK(p.resolve_method("WebView", "loadDataWithBaseURL", 6) != nullptr);
}

TEST_CASE("sig and site render and parse") {
  Sig s{"WebView", "loadUrl", 2};
  CHECK(s.str() == "WebView.loadUrl/2");
  CHECK(Sig::parse("WebView.loadUrl/2") == s);
  Sig ctor = Sig::parse("A.<init>/1");
  CHECK(ctor.name == "<init>");
  Site site{s, 4};
  CHECK(Site::parse(site.str()) == site);
}
