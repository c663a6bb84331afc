#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "graphlm/config.hpp"
#include "graphlm/tag.hpp"
#include "graphlm/templates.hpp"

namespace graphlm {

// Assembles the plain-text corpus the decoder is bootstrapped on: raw node
// texts from every graph, class-name lines, templated Q/A strings with
// ground-truth answers from the primary graph (node slots rendered as the
// reserved <node> marker), and generic which-of-these choice lines that teach
// answers to come from the offered list without tying them to content.
std::vector<std::string> build_bootstrap_corpus(
    const std::vector<const TextAttributedGraph*>& graphs, size_t primary_index,
    const ModelConfig& model_cfg, const BootstrapSection& cfg, const TemplateSet& templates,
    uint64_t seed, int title_len = 4);

}  // namespace graphlm
