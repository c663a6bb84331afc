#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "graphlm/errors.hpp"
#include "graphlm/eval.hpp"
#include "graphlm/train.hpp"

using namespace graphlm;

namespace {

TextAttributedGraph labeled_graph(int classes, int per_class, uint64_t seed) {
    SyntheticTagSpec spec;
    spec.num_classes = classes;
    spec.nodes_per_class = per_class;
    spec.p_intra = 0.3;
    spec.p_inter = 0.05;
    spec.vocab_per_class = 4;
    spec.shared_vocab = 2;
    spec.text_len = 5;
    return generate_synthetic_tag(spec, seed, 8, 0);
}

}  // namespace

TEST_CASE("parse_class_answer basics") {
    std::vector<std::string> names = {"Databases", "Neural Networks"};
    auto hit = parse_class_answer("this paper belongs to Neural Networks", names);
    REQUIRE(hit);
    CHECK(*hit == "Neural Networks");
    CHECK(!parse_class_answer("no idea", names));
    // Earliest occurrence wins.
    auto first = parse_class_answer("Databases or Neural Networks", names);
    REQUIRE(first);
    CHECK(*first == "Databases");
    // Word-boundary matching: "base" is not "databases".
    CHECK(!parse_class_answer("base rates", names));
    // Case-insensitive.
    auto ci = parse_class_answer("NEURAL networks!", names);
    REQUIRE(ci);
    CHECK(*ci == "Neural Networks");
}

TEST_CASE("bleu1 oracle values") {
    CHECK(bleu1("the cat sat", "the cat sat") == doctest::Approx(1.0).epsilon(1e-9));
    // Clipping: candidate "the the the" vs reference "the cat".
    CHECK(bleu1("the the the", "the cat") == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
    // Brevity penalty: exp(1 - 3/1).
    CHECK(bleu1("the", "the cat sat") == doctest::Approx(std::exp(-2.0)).epsilon(1e-4));
    CHECK(bleu1("", "anything") == 0.0);
    CHECK(bleu1("word", "") == 0.0);
}

TEST_CASE("bleu1 candidate reordering is neutral when the reference covers the bag") {
    double a = bleu1("alpha beta gamma", "gamma beta alpha delta");
    double b = bleu1("gamma alpha beta", "gamma beta alpha delta");
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        std::vector<std::string> words = {"a", "b", "c", "d", "e"};
        rng.shuffle(words);
        std::string cand;
        for (const auto& w : words) cand += w + " ";
        double s = bleu1(cand, "a b c d e f g");
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK(s == doctest::Approx(bleu1("a b c d e", "a b c d e f g")).epsilon(1e-12));
    }
}

TEST_CASE("rigged oracle predictor scores accuracy 1.0") {
    auto g = labeled_graph(4, 10, 60);
    auto names = g.class_names();
    auto predict = [&](int64_t id) { return "the answer is " + *g.label(g.index_of(id)); };
    auto rep = evaluate_classification_with(g, names, 5, {1, 2}, {}, predict);
    CHECK(rep.accuracy_mean == 1.0);
    CHECK(rep.accuracy_std == 0.0);
    for (const auto& [_, acc] : rep.per_class) CHECK(acc == 1.0);
}

TEST_CASE("fixed-class predictor on a balanced set scores 1/ways") {
    auto g = labeled_graph(5, 12, 61);
    auto names = g.class_names();
    auto predict = [&](int64_t) { return names[0]; };
    auto rep = evaluate_classification_with(g, names, 6, {1}, {}, predict);
    CHECK(rep.accuracy_mean == doctest::Approx(0.2).epsilon(1e-9));
    // Per-class accuracies average back to the mean on a balanced episode.
    double per_class_mean = 0.0;
    for (const auto& [_, acc] : rep.per_class) per_class_mean += acc;
    per_class_mean /= static_cast<double>(rep.per_class.size());
    CHECK(per_class_mean == doctest::Approx(rep.accuracy_mean).epsilon(1e-12));
}

TEST_CASE("uniform random class predictor lands near chance") {
    auto g = labeled_graph(5, 25, 62);
    auto names = g.class_names();
    Rng rng(9);
    auto predict = [&](int64_t) { return names[rng.below(names.size())]; };
    // 500 predictions at p = 0.2: tolerance of 0.06 is slightly over 3 sigma.
    auto rep = evaluate_classification_with(g, names, 20, {1, 2, 3, 4, 5}, {}, predict);
    CHECK(rep.accuracy_mean > 0.2 - 0.06);
    CHECK(rep.accuracy_mean < 0.2 + 0.06);
}

TEST_CASE("evaluation never touches excluded nodes and errors when short") {
    auto g = labeled_graph(3, 8, 63);
    auto names = g.class_names();
    std::vector<int64_t> excluded;
    for (int v = 0; v < g.num_nodes(); ++v)
        if (*g.label(v) == names[0] && excluded.size() < 4) excluded.push_back(g.id_of(v));

    std::set<int64_t> seen;
    auto predict = [&](int64_t id) {
        seen.insert(id);
        return std::string("x");
    };
    evaluate_classification_with(g, names, 4, {7}, excluded, predict);
    for (int64_t id : excluded) CHECK(!seen.count(id));

    CHECK_THROWS_WITH_AS(evaluate_classification_with(g, names, 5, {7}, excluded, predict),
                         doctest::Contains("eligible targets"), DataError);
}

TEST_CASE("per-seed target draws are reproducible") {
    auto g = labeled_graph(3, 10, 64);
    auto names = g.class_names();
    std::vector<PredictionRecord> rec1, rec2;
    auto predict = [&](int64_t) { return names[0]; };
    evaluate_classification_with(g, names, 4, {11, 12}, {}, predict, &rec1);
    evaluate_classification_with(g, names, 4, {11, 12}, {}, predict, &rec2);
    REQUIRE(rec1.size() == rec2.size());
    for (size_t i = 0; i < rec1.size(); ++i) CHECK(rec1[i].target == rec2[i].target);
}

TEST_CASE("icl prompt grows with shots while the task query does not") {
    auto g = labeled_graph(3, 10, 65);
    auto names = g.class_names();
    std::vector<std::string> corpus;
    for (int v = 0; v < g.num_nodes(); ++v) corpus.push_back(g.text(v));
    Vocabulary vocab = Vocabulary::build(corpus, 500);
    auto tpl = TemplateSet::builtin().get("classify");
    std::string task = classification_task_text(names);

    FewShotExampleSet none;
    none.class_names = names;
    int base_len = icl_prompt_length(none, g, task, tpl, vocab);
    int prev = base_len;
    for (int k : {1, 2, 5}) {
        auto ex = sample_few_shot(g, names, k, 66);
        int len = icl_prompt_length(ex, g, task, tpl, vocab);
        CHECK(len > prev);
        prev = len;
    }

    ModelConfig mc;
    mc.feat_dim = 8;
    mc.max_neighbors = 6;
    int64_t target = g.id_of(0);
    int q = query_length(g, target, mc, task, tpl, vocab, 1);
    CHECK(q == query_length(g, target, mc, task, tpl, vocab, 1));
}

TEST_CASE("report files are written") {
    EvalReport rep;
    rep.task = "classification";
    rep.ways = 3;
    rep.shots = 5;
    rep.accuracy_mean = 0.5;
    rep.accuracy_std = 0.1;
    rep.per_seed = {0.4, 0.6};
    rep.seeds = {1, 2};
    rep.per_class = {{"a", 0.5}, {"b", 0.5}};
    auto dir = std::filesystem::temp_directory_path() / "graphlm_eval_test";
    std::filesystem::create_directories(dir);
    write_eval_report_csv((dir / "r.csv").string(), rep);
    CHECK(std::filesystem::file_size(dir / "r.csv") > 0);
    auto text = format_eval_report(rep);
    CHECK(text.find("ways=3") != std::string::npos);

    std::vector<PredictionRecord> recs = {{7, "a", "says a", "a"}, {8, "b", "nothing", ""}};
    write_predictions_jsonl((dir / "p.jsonl").string(), recs);
    std::ifstream in(dir / "p.jsonl");
    std::string line;
    std::getline(in, line);
    CHECK(line.find("\"parsed\":\"a\"") != std::string::npos);
    std::getline(in, line);
    CHECK(line.find("\"parsed\":null") != std::string::npos);
}
