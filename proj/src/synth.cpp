#include "lte/synth.hpp"

#include <cmath>
#include <string>

#include "lte/error.hpp"
#include "lte/rng.hpp"

namespace lte {

namespace {

// Splits the contiguous class range [lo, hi) on its top bit, mirroring
// the mean placement, so the returned tree is the generator's ground
// truth with pre-order split indices.
int plant_node(LabelTree& tree, int lo, int hi, int& next_split) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    for (int c = lo; c < hi; ++c) tree.nodes[id].labels.push_back(c + 1);
    if (hi - lo == 1) return id;
    tree.nodes[id].split_index = next_split++;
    const int mid = lo + (hi - lo) / 2;
    const int left = plant_node(tree, lo, mid, next_split);
    tree.nodes[id].left = left;
    const int right = plant_node(tree, mid, hi, next_split);
    tree.nodes[id].right = right;
    return id;
}

} // namespace

SynthData synth_hierarchy_dataset(const SynthConfig& config) {
    require(config.depth >= 1 && config.depth < 31, "synth: depth must be in [1, 30]");
    require(config.num_classes == (1 << config.depth),
            "synth: num_classes must equal 2^depth");
    require(config.feature_dim >= config.depth,
            "synth: feature_dim must be at least depth");
    require(config.separation > 0.0, "synth: separation must be > 0");
    require(config.sigma >= 0.0, "synth: sigma must be >= 0");
    require(config.snippets_per_class >= 1, "synth: need at least 1 snippet per class");
    require(config.segments_per_snippet >= 1,
            "synth: need at least 1 segment per snippet");

    SynthData out;
    out.dataset.num_classes = config.num_classes;
    out.dataset.feature_dim = config.feature_dim;

    Rng rng(config.seed);
    for (int c = 0; c < config.num_classes; ++c) {
        out.dataset.label_names.push_back("c" + std::to_string(c + 1));
        FeatureVector mean(config.feature_dim, 0.0);
        for (int level = 0; level < config.depth; ++level)
            if (c & (1 << level))
                mean[level] =
                    config.separation * std::ldexp(1.0, level - (config.depth - 1));

        for (int s = 0; s < config.snippets_per_class; ++s) {
            Snippet snippet;
            snippet.id = "c" + std::to_string(c + 1) + "_s" + std::to_string(s + 1);
            snippet.label = c + 1;
            for (int g = 0; g < config.segments_per_snippet; ++g) {
                FeatureVector x(mean);
                for (double& value : x) value += config.sigma * rng.next_normal();
                snippet.segments.push_back(std::move(x));
            }
            out.dataset.snippets.push_back(std::move(snippet));
        }
    }
    out.dataset.validate();

    out.planted.label_names = out.dataset.label_names;
    int next_split = 1;
    plant_node(out.planted, 0, config.num_classes, next_split);
    out.planted.validate();
    return out;
}

} // namespace lte
