#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "c4r/curation.hpp"
#include "c4r/tensor.hpp"

namespace c4r {

// Labeled set of unit-normalized embeddings matched against at inference.
class QueryStore {
public:
    QueryStore() = default;
    explicit QueryStore(std::size_t dim) : dim_(dim) {}

    void add(const std::string& label, const Vec& embedding) {
        require(dim_ == 0 || embedding.size() == dim_, ErrorKind::Data,
                "query store: dimension mismatch for label " + label);
        require(entries_.find(label) == entries_.end(), ErrorKind::Data,
                "query store: duplicate label " + label);
        if (dim_ == 0) dim_ = embedding.size();
        entries_[label] = normalized(embedding);
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, Vec>& entries() const { return entries_; }

    const Vec& at(const std::string& label) const {
        auto it = entries_.find(label);
        require(it != entries_.end(), ErrorKind::Data, "query store: unknown label " + label);
        return it->second;
    }

private:
    std::size_t dim_ = 0;
    std::map<std::string, Vec> entries_; // sorted; iteration order is the report order
};

// cosine score of an embedding against every stored query
inline std::map<std::string, double> match(const Vec& e, const QueryStore& store) {
    require(e.size() == store.dim(), ErrorKind::Data, "match: dimension mismatch");
    std::map<std::string, double> scores;
    for (const auto& [label, q] : store.entries())
        scores[label] = cosine_similarity(e, q);
    return scores;
}

using EmbedFn = std::function<Vec(const Tensor&)>;

// store[label] = normalized mean embedding of that label's exemplar images
inline QueryStore queries_from_exemplars(const EmbedFn& embed,
                                         const std::map<std::string, std::vector<Tensor>>& groups) {
    QueryStore store;
    for (const auto& [label, images] : groups) {
        require(!images.empty(), ErrorKind::Data,
                "queries_from_exemplars: empty exemplar group " + label);
        Vec mean;
        for (const Tensor& img : images) {
            Vec e = embed(img);
            if (mean.empty()) mean.assign(e.size(), 0.0);
            for (std::size_t i = 0; i < e.size(); ++i) mean[i] += e[i];
        }
        for (double& v : mean) v /= static_cast<double>(images.size());
        store.add(label, mean);
    }
    return store;
}

// distinct mask values intersected with the class-id set
inline std::set<int> masks_to_image_labels(const std::vector<std::vector<int>>& mask,
                                           const std::set<int>& class_ids) {
    std::set<int> present;
    for (const auto& row : mask)
        for (int v : row)
            if (class_ids.count(v)) present.insert(v);
    return present;
}

// ---------------------------------------------------------------------------
// ROC / AUC

struct RocPoint {
    double fpr, tpr;
};

// Threshold sweep over distinct scores descending; tied scores collapse into
// one step. Points run from (0,0) to (1,1), coordinatewise non-decreasing.
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
    require(scores.size() == labels.size() && !scores.empty(), ErrorKind::Data,
            "roc_curve: scores and labels must be nonempty and equal length");
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    require(n_pos > 0 && n_neg > 0, ErrorKind::Data,
            "roc_curve: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> points{{0.0, 0.0}};
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        points.push_back({static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos});
    }
    return points;
}

// trapezoidal area under roc_curve; equals the Mann-Whitney pairwise
// statistic with half credit for ties
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    auto points = roc_curve(scores, labels);
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
    return area;
}

struct ClassEval {
    std::string label;
    double auc_value = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    bool skipped = false; // one-sided labels: AUC undefined
};

struct LabeledImage {
    Tensor image;
    std::set<std::string> labels;
};

// Per-class zero-shot AUC: score every image against store[label], label
// positives by image-level label presence. Classes with one-sided labels are
// reported as skipped.
inline std::vector<ClassEval> evaluate_zero_shot(const EmbedFn& embed,
                                                 const std::vector<LabeledImage>& dataset,
                                                 const QueryStore& store) {
    require(!dataset.empty(), ErrorKind::Data, "evaluate_zero_shot: empty dataset");
    std::vector<Vec> embeddings;
    embeddings.reserve(dataset.size());
    for (const auto& item : dataset) embeddings.push_back(embed(item.image));

    std::vector<ClassEval> table;
    for (const auto& [label, q] : store.entries()) {
        ClassEval row;
        row.label = label;
        std::vector<double> scores;
        std::vector<int> truth;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            scores.push_back(cosine_similarity(embeddings[i], q));
            int pos = dataset[i].labels.count(label) ? 1 : 0;
            truth.push_back(pos);
            (pos ? row.n_pos : row.n_neg)++;
        }
        if (row.n_pos == 0 || row.n_neg == 0) {
            row.skipped = true;
        } else {
            row.auc_value = auc(scores, truth);
        }
        table.push_back(std::move(row));
    }
    return table; // store iteration is sorted by class name
}

// ---------------------------------------------------------------------------
// File formats

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// QueryStore / EmbeddingSet text format:
//   dim=<d>
//   <label>\t<v1> <v2> ... <vd>
inline void save_store_lines(std::ostream& os, std::size_t dim,
                             const std::vector<std::pair<std::string, Vec>>& rows) {
    os << "dim=" << dim << "\n";
    for (const auto& [label, v] : rows) {
        os << label << "\t";
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << format_double(v[i]);
        os << "\n";
    }
}

inline void save_query_store(const QueryStore& store, const std::string& path) {
    std::ofstream f(path);
    require(f.good(), ErrorKind::Data, "cannot open for writing: " + path);
    std::vector<std::pair<std::string, Vec>> rows(store.entries().begin(), store.entries().end());
    save_store_lines(f, store.dim(), rows);
}

inline EmbeddingSet load_embedding_set(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorKind::Data, "cannot open: " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), ErrorKind::Data,
            path + ": empty embedding file");
    require(line.rfind("dim=", 0) == 0, ErrorKind::Data,
            path + ": first line must be dim=<d>");
    std::size_t dim = std::stoul(line.substr(4));
    require(dim > 0, ErrorKind::Data, path + ": dimension must be positive");
    EmbeddingSet set;
    set.dim = dim;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        require(tab != std::string::npos, ErrorKind::Data,
                path + ":" + std::to_string(lineno) + ": expected <label>\\t<values>");
        std::string label = line.substr(0, tab);
        std::istringstream vs(line.substr(tab + 1));
        Vec v;
        double x;
        while (vs >> x) v.push_back(x);
        require(v.size() == dim, ErrorKind::Data,
                path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                    " values, got " + std::to_string(v.size()));
        set.add(std::move(v), label);
    }
    return set;
}

// loader normalizes rows (store invariant: unit norm)
inline QueryStore load_query_store(const std::string& path) {
    EmbeddingSet set = load_embedding_set(path);
    QueryStore store(set.dim);
    for (std::size_t i = 0; i < set.size(); ++i) store.add(set.ids[i], set.rows[i]);
    return store;
}

// Evaluation report: class,auc,n_pos,n_neg; skipped classes leave auc empty.
inline std::string report_csv(const std::vector<ClassEval>& table) {
    std::ostringstream os;
    os << "class,auc,n_pos,n_neg\n";
    for (const auto& row : table) {
        os << row.label << ",";
        if (!row.skipped) os << format_double(row.auc_value);
        os << "," << row.n_pos << "," << row.n_neg << "\n";
    }
    return os.str();
}

// Minimal standalone SVG of one ROC curve.
inline std::string roc_svg(const std::vector<RocPoint>& points, const std::string& title) {
    const int w = 400, h = 400, m = 40;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
    auto px = [&](double fpr) { return m + fpr * (w - 2 * m); };
    auto py = [&](double tpr) { return h - m - tpr * (h - 2 * m); };
    os << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
       << py(1) << "\" stroke=\"lightgray\" stroke-dasharray=\"4\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (const auto& p : points) os << px(p.fpr) << "," << py(p.tpr) << " ";
    os << "\"/>\n";
    os << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << w - 2 * m << "\" height=\""
       << h - 2 * m << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace c4r
