#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "simlens/dimred/projection.hpp"
#include "simlens/report/svg.hpp"
#include "simlens/saliency.hpp"
#include "simlens/simcore.hpp"

namespace simlens {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kReportSchema = "simlens.report/1";

// Which figures a report renders to.
//   compare:    per pair pca, tsne, umap, saliency, cosine and attention
//   report_all: one fragment heatmap, then per pair pca, tsne, umap, saliency
enum class FigureSet { compare, report_all };

struct FragmentInfo {
  std::string id;
  std::string language;
  std::string source;
  std::vector<Token> tokens;  // code tokens only
};

struct PairReport {
  std::string first;
  std::string second;
  FragmentSimilarity similarity;
  SimilarityMatrix cosine;
  SimilarityMatrix attention;
  std::vector<Projection2D> projections;  // pca, tsne, umap
  SaliencyPair saliency;
};

struct ComparisonReport {
  std::string tool_version{kToolVersion};
  FigureSet figures = FigureSet::compare;
  nlohmann::json backend;
  std::uint64_t seed = 0;
  Pooling pooling = Pooling::greedy_match;
  std::vector<FragmentInfo> fragments;
  FragmentMatrix fragment_similarity;
  std::vector<PairReport> pairs;
};

struct Figure {
  std::string filename;
  std::string content;
};

// -- JSON ------------------------------------------------------------------

namespace detail {

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

inline Matrix matrix_from(const nlohmann::json& j, std::size_t cols_if_empty = 0) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? cols_if_empty : j.at(0).size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j.at(i).size() != cols) throw InvalidArgument("report: ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

inline Pooling pooling_from(const std::string& s) {
  if (s == "mean_pool_cosine") return Pooling::mean_pool_cosine;
  if (s == "greedy_match") return Pooling::greedy_match;
  throw InvalidArgument("report: unknown pooling '" + s + "'");
}

inline ProjectionMethod method_from(const std::string& s) {
  if (s == "pca") return ProjectionMethod::pca;
  if (s == "tsne") return ProjectionMethod::tsne;
  if (s == "umap") return ProjectionMethod::umap;
  throw InvalidArgument("report: unknown projection method '" + s + "'");
}

inline nlohmann::json to_json(const SimilarityMatrix& s) {
  return {{"kind", to_string(s.kind)},
          {"rows", s.rows()},
          {"cols", s.cols()},
          {"row_labels", s.row_labels},
          {"col_labels", s.col_labels},
          {"values", matrix_json(s.values)}};
}

inline SimilarityMatrix similarity_from(const nlohmann::json& j) {
  SimilarityMatrix s;
  s.kind = j.at("kind").get<std::string>() == "cosine" ? SimilarityKind::cosine : SimilarityKind::attention_product;
  s.values = matrix_from(j.at("values"), j.at("cols").get<std::size_t>());
  s.row_labels = j.at("row_labels").get<std::vector<std::string>>();
  s.col_labels = j.at("col_labels").get<std::vector<std::string>>();
  return s;
}

inline nlohmann::json to_json(const Projection2D& p) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& l : p.labels) labels.push_back({l.fragment_id, l.surface});
  return {{"method", to_string(p.method)},
          {"seed", p.seed},
          {"degenerate", p.degenerate},
          {"labels", labels},
          {"points", matrix_json(p.points)},
          {"trace", p.trace}};
}

inline Projection2D projection_from(const nlohmann::json& j) {
  Projection2D p;
  p.method = method_from(j.at("method").get<std::string>());
  p.seed = j.at("seed").get<std::uint64_t>();
  p.degenerate = j.at("degenerate").get<bool>();
  for (const auto& l : j.at("labels")) p.labels.push_back({l.at(0).get<std::string>(), l.at(1).get<std::string>()});
  p.points = matrix_from(j.at("points"), 2);
  p.trace = j.at("trace").get<std::vector<double>>();
  return p;
}

inline nlohmann::json to_json(const SaliencyVector& s) {
  return {{"fragment_id", s.fragment_id},
          {"paired_fragment_id", s.paired_fragment_id},
          {"pooling", to_string(s.pooling)},
          {"scores", s.scores}};
}

inline SaliencyVector saliency_from(const nlohmann::json& j) {
  return {j.at("fragment_id").get<std::string>(), j.at("paired_fragment_id").get<std::string>(),
          pooling_from(j.at("pooling").get<std::string>()), j.at("scores").get<std::vector<double>>()};
}

inline nlohmann::json to_json(const Token& t) {
  return {{"id", t.token_id}, {"surface", t.surface}, {"span", {t.span.begin, t.span.end}}, {"special", t.is_special}};
}

inline Token token_from(const nlohmann::json& j) {
  return {j.at("id").get<std::int64_t>(), j.at("surface").get<std::string>(),
          {j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()},
          j.at("special").get<bool>()};
}

}  // namespace detail

inline nlohmann::json to_json(const TokenSequence& seq) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : seq.tokens) tokens.push_back(detail::to_json(t));
  return {{"fragment_id", seq.fragment_id}, {"count", seq.size()}, {"tokens", tokens}};
}

inline nlohmann::json to_json(const Projection2D& p) { return detail::to_json(p); }
inline nlohmann::json to_json(const SaliencyVector& s) { return detail::to_json(s); }

inline nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json frags = nlohmann::json::array();
  for (const auto& f : r.fragments) {
    nlohmann::json tokens = nlohmann::json::array();
    for (const auto& t : f.tokens) tokens.push_back(detail::to_json(t));
    frags.push_back({{"id", f.id},
                     {"language", f.language},
                     {"source", f.source},
                     {"token_count", f.tokens.size()},
                     {"tokens", tokens}});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    nlohmann::json projections = nlohmann::json::array();
    for (const auto& pr : p.projections) projections.push_back(detail::to_json(pr));
    pairs.push_back({{"first", p.first},
                     {"second", p.second},
                     {"similarity", {{"value", p.similarity.value}, {"pooling", to_string(p.similarity.pooling)}}},
                     {"cosine", detail::to_json(p.cosine)},
                     {"attention_product", detail::to_json(p.attention)},
                     {"projections", projections},
                     {"saliency", {detail::to_json(p.saliency.first), detail::to_json(p.saliency.second)}}});
  }
  return {{"schema", kReportSchema},
          {"tool_version", r.tool_version},
          {"figure_set", r.figures == FigureSet::compare ? "compare" : "report_all"},
          {"backend", r.backend},
          {"seed", r.seed},
          {"pooling", to_string(r.pooling)},
          {"fragments", frags},
          {"fragment_similarity",
           {{"ids", r.fragment_similarity.ids},
            {"pooling", to_string(r.fragment_similarity.pooling)},
            {"values", detail::matrix_json(r.fragment_similarity.values)}}},
          {"pairs", pairs}};
}

inline ComparisonReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) {
      throw InvalidArgument("unsupported report schema '" + j.at("schema").get<std::string>() + "'");
    }
    ComparisonReport r;
    r.tool_version = j.at("tool_version").get<std::string>();
    r.figures = j.at("figure_set").get<std::string>() == "compare" ? FigureSet::compare : FigureSet::report_all;
    r.backend = j.at("backend");
    r.seed = j.at("seed").get<std::uint64_t>();
    r.pooling = detail::pooling_from(j.at("pooling").get<std::string>());
    for (const auto& f : j.at("fragments")) {
      FragmentInfo info{f.at("id").get<std::string>(), f.at("language").get<std::string>(),
                        f.at("source").get<std::string>(), {}};
      for (const auto& t : f.at("tokens")) info.tokens.push_back(detail::token_from(t));
      r.fragments.push_back(std::move(info));
    }
    const auto& fs = j.at("fragment_similarity");
    r.fragment_similarity.ids = fs.at("ids").get<std::vector<std::string>>();
    r.fragment_similarity.pooling = detail::pooling_from(fs.at("pooling").get<std::string>());
    r.fragment_similarity.values = detail::matrix_from(fs.at("values"));
    for (const auto& p : j.at("pairs")) {
      PairReport pr;
      pr.first = p.at("first").get<std::string>();
      pr.second = p.at("second").get<std::string>();
      pr.similarity = {p.at("similarity").at("value").get<double>(),
                       detail::pooling_from(p.at("similarity").at("pooling").get<std::string>())};
      pr.cosine = detail::similarity_from(p.at("cosine"));
      pr.attention = detail::similarity_from(p.at("attention_product"));
      for (const auto& proj : p.at("projections")) pr.projections.push_back(detail::projection_from(proj));
      pr.saliency.first = detail::saliency_from(p.at("saliency").at(0));
      pr.saliency.second = detail::saliency_from(p.at("saliency").at(1));
      r.pairs.push_back(std::move(pr));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed report: ") + e.what());
  }
}

inline std::string serialize(const ComparisonReport& r) { return to_json(r).dump(2) + "\n"; }

inline ComparisonReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open report " + path.string());
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("malformed report " + path.string() + ": " + e.what());
  }
}

// -- figures ---------------------------------------------------------------

inline std::string pair_key(std::string_view a, std::string_view b) {
  return std::string(a) + "__" + std::string(b);
}

inline const FragmentInfo& fragment_info(const ComparisonReport& r, const std::string& id) {
  for (const auto& f : r.fragments)
    if (f.id == id) return f;
  throw InvalidArgument("report has no fragment '" + id + "'");
}

inline std::string saliency_figure(const ComparisonReport& r, const PairReport& p) {
  std::vector<svg::SaliencyPanel> panels;
  for (const SaliencyVector* s : {&p.saliency.first, &p.saliency.second}) {
    const auto& f = fragment_info(r, s->fragment_id);
    panels.push_back({f.id, f.source, f.tokens, s->scores});
  }
  return svg::render_saliency(panels, "Saliency (" + std::string(to_string(p.saliency.first.pooling)) + "): " +
                                          p.first + " vs " + p.second);
}

// Every figure of a report, in a fixed order. Rendering depends only on the
// report, so a re-loaded report re-renders byte-identically.
inline std::vector<Figure> render_figures(const ComparisonReport& r) {
  std::vector<Figure> out;
  if (r.figures == FigureSet::report_all) {
    out.push_back({"fragments_heatmap.svg",
                   svg::render_heatmap(r.fragment_similarity.values, r.fragment_similarity.ids,
                                       r.fragment_similarity.ids,
                                       "Fragment similarity (" + std::string(to_string(r.fragment_similarity.pooling)) + ")")});
  }
  for (const auto& p : r.pairs) {
    const std::string key = pair_key(p.first, p.second);
    for (const auto& proj : p.projections) {
      const std::string m(to_string(proj.method));
      out.push_back({key + "_" + m + ".svg", svg::render_scatter(proj, m + ": " + p.first + " vs " + p.second)});
    }
    out.push_back({key + "_saliency.svg", saliency_figure(r, p)});
    if (r.figures == FigureSet::compare) {
      out.push_back({key + "_cosine.svg", svg::render_heatmap(p.cosine.values, p.cosine.row_labels,
                                                              p.cosine.col_labels,
                                                              "Token cosine similarity: " + p.first + " vs " + p.second)});
      out.push_back({key + "_attention.svg",
                     svg::render_heatmap(p.attention.values, p.attention.row_labels, p.attention.col_labels,
                                         "Attention-product similarity: " + p.first + " vs " + p.second)});
    }
  }
  return out;
}

}  // namespace simlens
