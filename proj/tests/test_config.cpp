#include <filesystem>

#include "doctest.h"
#include "graphlm/config.hpp"
#include "graphlm/errors.hpp"
#include "graphlm/templates.hpp"

using namespace graphlm;

TEST_CASE("config: seed is mandatory, defaults fill everything else") {
    CHECK_THROWS_WITH_AS(RunConfig::from_json_text("{}"), doctest::Contains("seed"),
                         ConfigError);
    auto cfg = RunConfig::from_json_text(R"({"seed": 7})");
    CHECK(cfg.seed == 7);
    CHECK(cfg.model.gnn_layers == 3);
    CHECK(cfg.model.gnn_dim == 32);
    CHECK(cfg.train.seed == 7);
    CHECK(cfg.eval.targets_per_way == 20);
    CHECK(cfg.adapt.task == "classify");
}

TEST_CASE("config: unknown keys are rejected with their path") {
    CHECK_THROWS_WITH_AS(RunConfig::from_json_text(R"({"seed":1,"bogus":2})"),
                         doctest::Contains("bogus"), ConfigError);
    CHECK_THROWS_WITH_AS(RunConfig::from_json_text(R"({"seed":1,"model":{"zzz":2}})"),
                         doctest::Contains("model.zzz"), ConfigError);
    CHECK_THROWS_WITH_AS(
        RunConfig::from_json_text(R"({"seed":1,"data":{"synthetic":{"nope":1}}})"),
        doctest::Contains("data.synthetic.nope"), ConfigError);
}

TEST_CASE("config: synthetic section uses the spec field names verbatim") {
    auto cfg = RunConfig::from_json_text(R"({
        "seed": 3,
        "data": {"synthetic": {"num_classes": 5, "nodes_per_class": 50, "p_intra": 0.2,
                                "p_inter": 0.01, "vocab_per_class": 12, "shared_vocab": 20,
                                "text_len": 12}}
    })");
    CHECK(cfg.data.has_synthetic);
    CHECK(cfg.data.synthetic.num_classes == 5);
    CHECK(cfg.data.synthetic.p_inter == 0.01);
}

TEST_CASE("config: resolved echo re-parses to the same config") {
    auto cfg = RunConfig::from_json_text(R"({
        "seed": 11,
        "model": {"gnn_dim": 16, "lm": {"dim": 32}},
        "train": {"lr": 0.01, "epochs_match": 1},
        "adapt": {"shots": 3, "task": "summarize"},
        "eval": {"seeds": [4, 5]}
    })");
    auto echo = cfg.to_json_text();
    auto back = RunConfig::from_json_text(echo);
    CHECK(back.seed == 11);
    CHECK(back.model.gnn_dim == 16);
    CHECK(back.model.lm.dim == 32);
    CHECK(back.train.lr == 0.01);
    CHECK(back.adapt.shots == 3);
    CHECK(back.adapt.task == "summarize");
    CHECK(back.eval.seeds == std::vector<uint64_t>{4, 5});
    CHECK(back.to_json_text() == echo);
}

TEST_CASE("config: invalid values are rejected") {
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"seed":1,"adapt":{"task":"translate"}})"),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"seed":1,"train":{"lr":-1}})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"seed":1,"model":{"lm":{"dim":30,"heads":4}}})"),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text("not json"), ConfigError);
}

TEST_CASE("templates: builtin ids, directory override, marker expansion") {
    auto ts = TemplateSet::builtin();
    for (const char* id : {"classify", "link_predict", "summarize", "node_match"})
        CHECK(ts.has(id));
    CHECK_THROWS_AS(ts.get("missing"), DataError);

    auto dir = std::filesystem::temp_directory_path() / "graphlm_tpl_test";
    ts.write_dir(dir.string());
    auto loaded = TemplateSet::load_dir(dir.string());
    CHECK(loaded.get("classify").text == ts.get("classify").text);

    std::string inst = instantiate_template(ts.get("classify"), 3, 0, "T-TEXT", "", "TASK");
    CHECK(inst.find("<node_1>, <node_2>, <node_3>") != std::string::npos);
    CHECK(inst.find("T-TEXT") != std::string::npos);
    CHECK(inst.find("TASK") != std::string::npos);
    CHECK(inst.find("<node_tokens>") == std::string::npos);

    auto pieces = parse_node_markers(inst);
    int nodes = 0;
    for (const auto& p : pieces) nodes += p.is_node ? 1 : 0;
    CHECK(nodes == 3);
}
