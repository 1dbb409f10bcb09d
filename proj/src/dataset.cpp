#include "lte/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lte/error.hpp"
#include "lte/rng.hpp"
#include "io_util.hpp"

namespace lte {

using io::format_double;
using io::parse_double;
using io::parse_long;
using io::split_csv_line;

void Dataset::validate() const {
    require(num_classes >= 2, "dataset needs at least 2 classes");
    require(feature_dim >= 1, "dataset needs a positive feature dimension");
    require(!snippets.empty(), "dataset has no snippets");
    require(static_cast<int>(label_names.size()) == num_classes,
            "label_names size must equal num_classes");
    std::vector<int> per_class(num_classes, 0);
    std::set<std::string> seen_ids;
    for (const auto& sn : snippets) {
        require(sn.label >= 1 && sn.label <= num_classes,
                "snippet '" + sn.id + "' has out-of-range label");
        require(!sn.segments.empty(), "snippet '" + sn.id + "' has no segments");
        for (const auto& seg : sn.segments)
            require(static_cast<int>(seg.size()) == feature_dim,
                    "snippet '" + sn.id + "' has a segment of wrong dimension");
        require(seen_ids.insert(sn.id).second, "duplicate snippet id '" + sn.id + "'");
        ++per_class[sn.label - 1];
    }
    for (int c = 0; c < num_classes; ++c)
        require(per_class[c] > 0, "class '" + label_names[c] + "' has no snippets");
}

bool Dataset::same_structure(const Dataset& other) const {
    if (num_classes != other.num_classes || feature_dim != other.feature_dim ||
        snippets.size() != other.snippets.size())
        return false;
    std::set<std::string> names_a(label_names.begin(), label_names.end());
    std::set<std::string> names_b(other.label_names.begin(), other.label_names.end());
    if (names_a != names_b) return false;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        const Snippet& a = snippets[i];
        const Snippet& b = other.snippets[i];
        if (a.id != b.id || a.segments != b.segments) return false;
        if (name_of(a.label) != other.name_of(b.label)) return false;
    }
    return true;
}

void SampleSet::validate() const {
    require(features.size() == labels.size(), "sample set: features/labels length mismatch");
    require(!restricted_labels.empty(), "sample set: empty label set");
    require(std::is_sorted(restricted_labels.begin(), restricted_labels.end()),
            "sample set: restricted labels must be sorted");
    for (int l : labels)
        require(std::binary_search(restricted_labels.begin(), restricted_labels.end(), l),
                "sample set: label outside restricted set");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("dataset file '" + path + "' is empty");
    const auto header = split_csv_line(line);
    require(header.size() >= 4, "dataset header needs snippet_id,label,segment_index,f1,...");
    require(header[0] == "snippet_id" && header[1] == "label" && header[2] == "segment_index",
            "unknown dataset header in '" + path + "'");
    const int feature_dim = static_cast<int>(header.size()) - 3;
    for (int j = 0; j < feature_dim; ++j)
        require(header[3 + j] == "f" + std::to_string(j + 1),
                "unknown feature column '" + header[3 + j] + "' in '" + path + "'");

    struct RawSnippet {
        int label = 0;
        std::map<long, FeatureVector> segments; // ordered by segment_index
    };
    std::vector<std::string> snippet_order;
    std::map<std::string, RawSnippet> raw;
    std::vector<std::string> label_names;
    std::map<std::string, int> label_index;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        const std::string where = path + ":" + std::to_string(line_no);
        require(static_cast<int>(fields.size()) == 3 + feature_dim,
                "row with " + std::to_string(fields.size() - 3) + " features, expected " +
                    std::to_string(feature_dim) + " at " + where);
        const std::string& id = fields[0];
        const std::string& label_name = fields[1];
        require(!id.empty(), "empty snippet_id at " + where);
        require(!label_name.empty(), "empty label at " + where);

        auto [label_it, fresh] = label_index.try_emplace(label_name, 0);
        if (fresh) {
            label_names.push_back(label_name);
            label_it->second = static_cast<int>(label_names.size());
        }

        auto [snip_it, new_snippet] = raw.try_emplace(id);
        if (new_snippet) {
            snippet_order.push_back(id);
            snip_it->second.label = label_it->second;
        } else {
            require(snip_it->second.label == label_it->second,
                    "snippet '" + id + "' has conflicting labels at " + where);
        }

        const long seg_index = parse_long(fields[2], where);
        FeatureVector fv(feature_dim);
        for (int j = 0; j < feature_dim; ++j) fv[j] = parse_double(fields[3 + j], where);
        require(snip_it->second.segments.emplace(seg_index, std::move(fv)).second,
                "duplicate segment_index for snippet '" + id + "' at " + where);
    }
    require(!snippet_order.empty(), "dataset '" + path + "' has no data rows");

    Dataset ds;
    ds.feature_dim = feature_dim;
    ds.num_classes = static_cast<int>(label_names.size());
    ds.label_names = std::move(label_names);
    ds.snippets.reserve(snippet_order.size());
    for (const auto& id : snippet_order) {
        RawSnippet& rs = raw[id];
        Snippet sn;
        sn.id = id;
        sn.label = rs.label;
        sn.segments.reserve(rs.segments.size());
        for (auto& [idx, fv] : rs.segments) sn.segments.push_back(std::move(fv));
        ds.snippets.push_back(std::move(sn));
    }
    ds.validate();
    return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    dataset.validate();
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write dataset file '" + path + "'");
    out << "snippet_id,label,segment_index";
    for (int j = 1; j <= dataset.feature_dim; ++j) out << ",f" << j;
    out << "\n";
    for (const auto& sn : dataset.snippets) {
        for (std::size_t s = 0; s < sn.segments.size(); ++s) {
            out << sn.id << ',' << dataset.name_of(sn.label) << ',' << s;
            for (double v : sn.segments[s]) out << ',' << format_double(v);
            out << "\n";
        }
    }
    if (!out) throw ValidationError("failed writing dataset file '" + path + "'");
}

FeatureVector pool_average(const std::vector<FeatureVector>& vectors) {
    require(!vectors.empty(), "pool_average: empty vector list");
    const std::size_t dim = vectors.front().size();
    FeatureVector mean(dim, 0.0);
    for (const auto& v : vectors) {
        require(v.size() == dim, "pool_average: dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j) mean[j] += v[j];
    }
    const double inv = 1.0 / static_cast<double>(vectors.size());
    for (double& m : mean) m *= inv;
    return mean;
}

SampleSet segments_of(const Dataset& dataset, const std::vector<int>& labels) {
    std::vector<int> wanted = labels;
    if (wanted.empty())
        for (int c = 1; c <= dataset.num_classes; ++c) wanted.push_back(c);
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

    SampleSet out;
    out.restricted_labels = wanted;
    for (const auto& sn : dataset.snippets) {
        if (!std::binary_search(wanted.begin(), wanted.end(), sn.label)) continue;
        for (const auto& seg : sn.segments) {
            out.features.push_back(seg);
            out.labels.push_back(sn.label);
        }
    }
    return out;
}

std::vector<bool> stratified_split_mask(const std::vector<int>& labels, double fraction,
                                        std::uint64_t seed) {
    require(fraction > 0.0 && fraction < 1.0, "split fraction must be in (0,1)");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<bool> in_a(labels.size(), false);
    Rng rng(seed);
    for (auto& [label, members] : by_class) {
        const std::size_t n = members.size();
        require(n >= 2, "class " + std::to_string(label) + " has fewer than 2 members to split");
        std::size_t take = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(n)));
        // Both halves must stay nonempty.
        take = std::min(take, n - 1);
        take = std::max<std::size_t>(take, 1);
        rng.shuffle(members);
        for (std::size_t i = 0; i < take; ++i) in_a[members[i]] = true;
    }
    return in_a;
}

std::pair<SampleSet, SampleSet> stratified_split(const SampleSet& samples, double fraction,
                                                 std::uint64_t seed) {
    const auto mask = stratified_split_mask(samples.labels, fraction, seed);
    SampleSet a, b;
    a.restricted_labels = b.restricted_labels = samples.restricted_labels;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        SampleSet& part = mask[i] ? a : b;
        part.features.push_back(samples.features[i]);
        part.labels.push_back(samples.labels[i]);
    }
    return {std::move(a), std::move(b)};
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double fraction,
                                             std::uint64_t seed) {
    const auto mask = stratified_split_mask(snippet_labels(dataset), fraction, seed);
    Dataset a, b;
    a.num_classes = b.num_classes = dataset.num_classes;
    a.feature_dim = b.feature_dim = dataset.feature_dim;
    a.label_names = b.label_names = dataset.label_names;
    for (std::size_t i = 0; i < dataset.snippets.size(); ++i)
        (mask[i] ? a : b).snippets.push_back(dataset.snippets[i]);
    return {std::move(a), std::move(b)};
}

std::vector<int> stratified_fold_assignments(const std::vector<int>& labels, int k,
                                             std::uint64_t seed) {
    require(k >= 2, "k-fold needs k >= 2");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<int> fold(labels.size(), -1);
    Rng rng(seed);
    // Rotating the starting fold per class keeps overall fold sizes even
    // when class counts are not multiples of k.
    int start = 0;
    for (auto& [label, members] : by_class) {
        require(static_cast<int>(members.size()) >= k,
                "class " + std::to_string(label) + " has fewer than k members");
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i)
            fold[members[i]] = static_cast<int>((start + i) % static_cast<std::size_t>(k));
        start = (start + static_cast<int>(members.size())) % k;
    }
    return fold;
}

std::vector<FoldSplit> stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed) {
    const auto fold = stratified_fold_assignments(snippet_labels(dataset), k, seed);
    std::vector<FoldSplit> splits(k);
    for (std::size_t i = 0; i < fold.size(); ++i) {
        for (int f = 0; f < k; ++f) {
            if (fold[i] == f)
                splits[f].eval_indices.push_back(i);
            else
                splits[f].train_indices.push_back(i);
        }
    }
    return splits;
}

std::vector<int> snippet_labels(const Dataset& dataset) {
    std::vector<int> labels;
    labels.reserve(dataset.snippets.size());
    for (const auto& sn : dataset.snippets) labels.push_back(sn.label);
    return labels;
}

} // namespace lte
