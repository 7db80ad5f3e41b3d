// simlens command-line driver.
//
// Exit codes: 0 success, 2 usage error, 3 backend load failure,
// 4 compute error, 1 anything else (I/O).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simlens/simlens.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;
constexpr int kExitCompute = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string backend = "stub";
  std::string model;
  std::string tokenizer;
  std::uint64_t seed = 7;
  std::string pooling = "greedy";
  std::string out;
  bool no_figures = false;
  std::size_t jobs = 0;
};

void add_backend_flags(CLI::App* app, CommonOptions& o) {
  app->add_option("--backend", o.backend, "Embedding backend")->check(CLI::IsMember({"stub", "model"}));
  app->add_option("--model", o.model, "Model weights (.safetensors file or directory)");
  app->add_option("--tokenizer", o.tokenizer, "Tokenizer definition (tokenizer.json)");
  app->add_option("--seed", o.seed, "Seed for the stub backend and the projections");
}

void add_pooling_flag(CLI::App* app, CommonOptions& o) {
  app->add_option("--pooling", o.pooling, "Fragment similarity pooling")->check(CLI::IsMember({"mean", "greedy"}));
}

simlens::BackendConfig backend_config(const CommonOptions& o) {
  simlens::BackendConfig cfg;
  cfg.kind = o.backend == "model" ? simlens::BackendKind::model : simlens::BackendKind::stub;
  cfg.model_path = o.model;
  cfg.tokenizer_path = o.tokenizer;
  cfg.seed = o.seed;
  return cfg;
}

simlens::Pooling pooling_of(const CommonOptions& o) {
  return o.pooling == "mean" ? simlens::Pooling::mean_pool_cosine : simlens::Pooling::greedy_match;
}

simlens::PipelineOptions pipeline_options(const CommonOptions& o) {
  simlens::PipelineOptions p;
  p.seed = o.seed;
  p.pooling = pooling_of(o);
  p.jobs = o.jobs;
  return p;
}

// "fixtures:NAME" selects a built-in fragment; anything else is a file
// whose stem becomes the fragment id.
simlens::CodeFragment load_input(const std::string& arg) {
  constexpr std::string_view prefix = "fixtures:";
  if (arg.rfind(prefix, 0) == 0) {
    const std::string name = arg.substr(prefix.size());
    if (auto f = simlens::fixtures::find(name)) return *f;
    std::string known;
    for (const auto& e : simlens::fixtures::kCorpus) known += " " + std::string(e.short_name);
    throw UsageError("unknown fixture '" + name + "' (known:" + known + ")");
  }
  std::ifstream in(arg, std::ios::binary);
  if (!in) throw UsageError("cannot read input file '" + arg + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::filesystem::path path(arg);
  const std::string ext = path.extension().string();
  std::string language = "python";
  if (ext == ".cpp" || ext == ".cc" || ext == ".hpp" || ext == ".h") language = "cpp";
  else if (ext == ".java") language = "java";
  else if (ext == ".js") language = "javascript";
  return {path.stem().string(), language, buf.str()};
}

std::vector<simlens::CodeFragment> load_inputs(const std::vector<std::string>& specs) {
  std::vector<simlens::CodeFragment> out;
  for (const auto& s : specs) out.push_back(load_input(s));
  return out;
}

void emit(const CommonOptions& o, const std::string& filename, const std::string& content) {
  if (o.out.empty()) {
    std::cout << content;
    return;
  }
  simlens::OutputWriter(o.out).write(filename, content);
}

int run_tokenize(const CommonOptions& o, const std::string& input) {
  const auto backend = simlens::make_backend(backend_config(o));
  const auto fragment = load_input(input);
  simlens::validate(fragment);
  emit(o, fragment.id + "_tokens.json", simlens::to_json(backend->tokenize(fragment)).dump(2) + "\n");
  return 0;
}

int run_report(const CommonOptions& o, const std::vector<std::string>& inputs, simlens::FigureSet set) {
  auto corpus = inputs.empty() ? simlens::fixtures::corpus() : load_inputs(inputs);
  if (corpus.size() < 2) throw UsageError("need at least two fragments");
  const auto backend = simlens::make_backend(backend_config(o));
  const auto report = simlens::build_report(corpus, *backend, pipeline_options(o), set);
  const std::string dir = o.out.empty() ? "." : o.out;
  const auto files = simlens::write_report(report, dir, !o.no_figures);
  std::cerr << "wrote " << files.size() << " file(s) to " << dir << "\n";
  return 0;
}

int run_project(const CommonOptions& o, const std::vector<std::string>& inputs, const std::string& method_name) {
  const auto backend = simlens::make_backend(backend_config(o));
  const auto encoded = simlens::encode_corpus(load_inputs(inputs), *backend, o.jobs);
  std::vector<simlens::EmbeddingMatrix> parts;
  std::string key;
  for (const auto& f : encoded) {
    parts.push_back(f.embeddings);
    key += (key.empty() ? "" : "__") + f.fragment.id;
  }
  std::vector<simlens::ProjectionMethod> methods;
  if (method_name.empty()) methods = {simlens::ProjectionMethod::pca, simlens::ProjectionMethod::tsne,
                                      simlens::ProjectionMethod::umap};
  else methods = {simlens::detail::method_from(method_name)};

  const auto points = simlens::stack(parts);
  nlohmann::json all = nlohmann::json::array();
  for (auto m : methods) {
    const auto proj = simlens::project(points, m, pipeline_options(o));
    all.push_back(simlens::to_json(proj));
    if (!o.out.empty() && !o.no_figures) {
      const std::string name(to_string(m));
      emit(o, key + "_" + name + ".svg", simlens::svg::render_scatter(proj, name + ": " + key));
    }
  }
  emit(o, key + "_projection.json", all.dump(2) + "\n");
  return 0;
}

int run_saliency(const CommonOptions& o, const std::vector<std::string>& inputs) {
  const auto backend = simlens::make_backend(backend_config(o));
  const auto encoded = simlens::encode_corpus(load_inputs(inputs), *backend, o.jobs);
  const auto& a = encoded[0];
  const auto& b = encoded[1];
  const auto pair = simlens::saliency_map(a.embeddings, b.embeddings, pooling_of(o));
  const std::string key = simlens::pair_key(a.fragment.id, b.fragment.id);
  nlohmann::json j = {{"similarity", simlens::fragment_similarity(a.embeddings, b.embeddings, pooling_of(o)).value},
                      {"saliency", {simlens::to_json(pair.first), simlens::to_json(pair.second)}}};
  emit(o, key + "_saliency.json", j.dump(2) + "\n");
  if (!o.out.empty() && !o.no_figures) {
    std::vector<simlens::svg::SaliencyPanel> panels;
    for (const auto* f : {&a, &b}) {
      const auto info = simlens::fragment_info(*f);
      const auto& scores = f == &a ? pair.first.scores : pair.second.scores;
      panels.push_back({info.id, info.source, info.tokens, scores});
    }
    emit(o, key + "_saliency.svg",
         simlens::svg::render_saliency(panels, "Saliency (" + std::string(to_string(pooling_of(o))) + "): " +
                                                   a.fragment.id + " vs " + b.fragment.id));
  }
  return 0;
}

int run_render(const CommonOptions& o, const std::string& report_path) {
  const auto report = simlens::load_report(report_path);
  const std::string dir = o.out.empty() ? "." : o.out;
  simlens::OutputWriter writer(dir);
  for (const auto& f : simlens::render_figures(report)) writer.write(f.filename, f.content);
  std::cerr << "wrote " << writer.written().size() << " figure(s) to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simlens: token-level similarity, projections and saliency for code fragments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(simlens::kToolVersion));

  CommonOptions o;
  std::string single;
  std::vector<std::string> inputs;
  std::string method;

  auto* tok = app.add_subcommand("tokenize", "Print the token sequence of one fragment");
  tok->add_option("input", single, "File path or fixtures:NAME")->required();
  add_backend_flags(tok, o);
  tok->add_option("--out", o.out, "Write <id>_tokens.json here instead of stdout");

  auto* cmp = app.add_subcommand("compare", "Compare two fragments: report plus six figures");
  cmp->add_option("inputs", inputs, "Two file paths or fixtures:NAME")->required()->expected(2);
  add_backend_flags(cmp, o);
  add_pooling_flag(cmp, o);
  cmp->add_option("--out", o.out, "Output directory");
  cmp->add_flag("--no-figures", o.no_figures, "Write the report only");
  cmp->add_option("--jobs", o.jobs, "Worker threads (0: all cores)");

  auto* all = app.add_subcommand("report-all", "Fragment heatmap and every pairwise figure");
  all->add_option("inputs", inputs, "Fragments (default: the five built-in sorting fixtures)");
  add_backend_flags(all, o);
  add_pooling_flag(all, o);
  all->add_option("--out", o.out, "Output directory");
  all->add_flag("--no-figures", o.no_figures, "Write the report only");
  all->add_option("--jobs", o.jobs, "Worker threads (0: all cores)");

  auto* proj = app.add_subcommand("project", "Joint 2-D projection of the token embeddings of fragments");
  proj->add_option("inputs", inputs, "One or more file paths or fixtures:NAME")->required();
  add_backend_flags(proj, o);
  proj->add_option("--method", method, "Projection method (default: all three)")
      ->check(CLI::IsMember({"pca", "tsne", "umap"}));
  proj->add_option("--out", o.out, "Output directory (default: JSON to stdout)");
  proj->add_flag("--no-figures", o.no_figures, "Skip the scatter plots");

  auto* sal = app.add_subcommand("saliency", "Per-token saliency of a fragment pair");
  sal->add_option("inputs", inputs, "Two file paths or fixtures:NAME")->required()->expected(2);
  add_backend_flags(sal, o);
  add_pooling_flag(sal, o);
  sal->add_option("--out", o.out, "Output directory (default: JSON to stdout)");
  sal->add_flag("--no-figures", o.no_figures, "Skip the saliency figure");

  auto* ren = app.add_subcommand("render", "Re-render every figure of a saved report");
  ren->add_option("report", single, "report.json")->required()->check(CLI::ExistingFile);
  ren->add_option("--out", o.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*tok) return run_tokenize(o, single);
    if (*cmp) return run_report(o, inputs, simlens::FigureSet::compare);
    if (*all) return run_report(o, inputs, simlens::FigureSet::report_all);
    if (*proj) return run_project(o, inputs, method);
    if (*sal) return run_saliency(o, inputs);
    if (*ren) return run_render(o, single);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const simlens::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const simlens::ComputeError& e) {
    std::cerr << "compute error: " << e.what() << "\n";
    return kExitCompute;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
