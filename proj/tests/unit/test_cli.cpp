#include "doctest.h"
#include "tsig/linalg.hpp"
#include "tsig_cli/commands.hpp"
#include "tsig_cli/json_writer.hpp"

using namespace tsig;
using namespace tsig::cli;
using nlohmann::json;

namespace {

json t3_doc() {
  return json::parse(R"({
    "manifold": {"dim": 3},
    "flux": {"components": [{"degree": 3, "terms": [{"multi_index": [1, 2, 3], "re": 0.5}]}]},
    "truncation": 2
  })");
}

std::string pointer_of(const json& doc) {
  try {
    (void)parse_config(doc);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<accepted>";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("json writer is deterministic") {
  const json v = {{"b", 0.1}, {"a", {1, -0.0, 2.5e-300}}, {"c", std::nan("")}};
  const std::string s = write_json(v);
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.find("-0") == std::string::npos);
  CHECK(s.find("null") != std::string::npos);
  CHECK(s.back() == '\n');
  CHECK(write_json(json::parse(s)) == s);
  CHECK(write_json_compact({{"x", 1}}).find('\n') == std::string::npos);
}

TEST_CASE("config validation reports JSON pointers") {
  json doc = t3_doc();
  doc["manifold"]["metric"] = {1, 2, 0, 2, 1, 0, 0, 0, 1};
  CHECK(pointer_of(doc) == "/manifold/metric");

  doc = t3_doc();
  doc["manifold"]["dim"] = 0;
  CHECK(pointer_of(doc) == "/manifold/dim");

  doc = t3_doc();
  doc["bundle"] = {{"rank", 1}, {"holonomy", {{0.5, 1.0, 0.0}}}};
  CHECK(pointer_of(doc) == "/bundle/holonomy/0/1");

  doc = t3_doc();
  doc["flux"]["components"][0]["degree"] = 1;
  doc["flux"]["components"][0]["terms"][0]["multi_index"] = {1};
  CHECK(pointer_of(doc).rfind("/flux/components/0", 0) == 0);

  doc = t3_doc();
  doc["flux"]["components"][0]["terms"][0]["multi_index"] = {1, 2};
  CHECK(pointer_of(doc).rfind("/flux/components/0/terms/0", 0) == 0);

  CHECK(pointer_of(t3_doc()) == "<accepted>");
}

TEST_CASE("betti command output") {
  const RunConfig cfg = parse_config(t3_doc());
  const json out = json::parse(run_command("betti", &cfg, 7).output);
  CHECK(out["b_even"] == 3);
  CHECK(out["b_odd"] == 3);
  CHECK(out["command"] == "betti");
  CHECK(out.contains("kernel_tolerance"));
}

TEST_CASE("eta output carries its error") {
  const RunConfig cfg = parse_config(t3_doc());
  const json out = json::parse(run_command("eta", &cfg, 7).output);
  CHECK(out.contains("error_estimate"));
  CHECK(out["method"] == "zeta-finite-part");
}

TEST_CASE("heat trace CSV") {
  json doc = t3_doc();
  doc.erase("flux");
  doc["truncation"] = 8;
  doc["parameters"] = {{"t", {0.1, 0.5}}, {"method", "both"}};
  const RunConfig cfg = parse_config(doc);
  const std::string csv = run_command("heat-trace", &cfg, 7).output;
  CHECK(csv.rfind("t,value,method,tail_bound\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("errors map to exit codes") {
  CHECK(exit_code_for(ConfigError("/x", "bad")) == 1);
  CHECK(exit_code_for(Error(ErrorCode::TailTooLarge, "heat_kernel", "op", "m")) == 2);
  const json e = error_object(ConfigError("/manifold/metric", "bad"));
  CHECK(e["error"]["pointer"] == "/manifold/metric");
  CHECK(e["error"]["code"] == "ConfigInvalid");
  CHECK(e["error"]["module"] == "cli");
}

TEST_CASE("commands need a config") {
  CHECK_THROWS_AS(run_command("betti", nullptr, 7), ConfigError);
}

TEST_CASE("output does not depend on the thread count") {
  const RunConfig cfg = parse_config(t3_doc());
  const unsigned saved = thread_count();
  for (const char* cmd : {"betti", "eta", "aps-index"}) {
    set_thread_count(1);
    const std::string a = run_command(cmd, &cfg, 7).output;
    set_thread_count(3);
    const std::string b = run_command(cmd, &cfg, 7).output;
    CHECK(a == b);
  }
  set_thread_count(saved);
}

}  // TEST_SUITE
