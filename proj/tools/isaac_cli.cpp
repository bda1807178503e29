// isaac: command-line front end for a reading project.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

#include "isaac/agree/agree.hpp"
#include "isaac/app/config.hpp"
#include "isaac/app/project.hpp"
#include "isaac/app/service.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/fs.hpp"
#include "isaac/util/text.hpp"

namespace {

using namespace isaac;
namespace fsys = std::filesystem;

struct Globals {
  std::string project = ".";
  std::optional<std::uint64_t> seed;
  std::string config;
  bool json = false;
};

app::Config load(const Globals& g) {
  app::Config c;
  if (!g.config.empty()) c = app::load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  return c;
}

std::uint64_t seed_for(const Globals& g, const app::Workspace& w) { return g.seed.value_or(w.state().seed); }

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

std::string fmt(const std::optional<double>& v, int digits = 3) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, *v);
  return buf;
}

// "id" or "id:reason"
recommend::CurationMask parse_excludes(const std::vector<std::string>& items) {
  recommend::CurationMask m;
  for (const auto& item : items) {
    const auto colon = item.find(':');
    m.excluded[item.substr(0, colon)] = colon == std::string::npos ? "" : item.substr(colon + 1);
  }
  return m;
}

void apply_mask(app::Workspace& w, const std::vector<std::string>& exclude, bool clear) {
  if (clear) w.set_mask({});
  if (!exclude.empty()) w.set_mask(parse_excludes(exclude));
}

void print_recommendations(const recommend::RecommendResult& r) {
  std::cout << r.note << "\n";
  if (!r.items.empty() && r.items.front().informativeness) {
    std::printf("%-4s %-40s %10s %9s  %s\n", "rank", "title", "info gain", "predicted", "top reasons");
  } else {
    std::printf("%-4s %-40s %9s  %s\n", "rank", "title", "predicted", "top reasons");
  }
  for (const auto& item : r.items) {
    std::string reasons;
    for (const auto& c : item.explanation) {
      if (!reasons.empty()) reasons += ", ";
      reasons += c.dimension_id + (c.contribution >= 0 ? " +" : " ") + fmt(c.contribution, 2);
    }
    if (item.informativeness) {
      std::printf("%-4zu %-40.40s %10s %9s  %s\n", item.rank, item.title.c_str(), fmt(item.informativeness).c_str(),
                  fmt(item.predicted).c_str(), reasons.c_str());
    } else {
      std::printf("%-4zu %-40.40s %9s  %s\n", item.rank, item.title.c_str(), fmt(item.predicted).c_str(), reasons.c_str());
    }
  }
}

app::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Reading-preference analysis: annotate rated books, compare introspection with data, recommend."};
  cli.require_subcommand(1);
  Globals g;
  cli.add_option("--project", g.project, "Project directory")->capture_default_str();
  cli.add_option("--seed", g.seed, "Seed for every random choice");
  cli.add_option("--config", g.config, "Config file (key = value)");
  cli.add_flag("--json", g.json, "Print JSON instead of tables");

  // init
  auto* init = cli.add_subcommand("init", "Create an empty project");
  std::string schema_file;
  init->add_option("--schema", schema_file, "Schema JSON (default: built-in schema)");

  // ingest
  auto* ingest_cmd = cli.add_subcommand("ingest", "Load ratings, candidates or journal notes");
  std::string ratings_file, candidates_file, notes_file, format = "auto", dnf = "include";
  ingest_cmd->add_option("--ratings", ratings_file, "Goodreads export or simple CSV")->check(CLI::ExistingFile);
  ingest_cmd->add_option("--candidates", candidates_file, "Unread candidates (title, author)")->check(CLI::ExistingFile);
  ingest_cmd->add_option("--notes", notes_file, "Journal notes CSV")->check(CLI::ExistingFile);
  ingest_cmd->add_option("--format", format, "auto, goodreads or simple")->capture_default_str();
  ingest_cmd->add_option("--dnf", dnf, "include, exclude or impute-floor")->capture_default_str();

  // annotate
  auto* annotate_cmd = cli.add_subcommand("annotate", "Annotate rated books and candidates via the backend");
  std::optional<int> workers;
  std::optional<std::size_t> max_books;
  std::string comments_dir;
  annotate_cmd->add_option("--workers", workers, "Books annotated concurrently");
  annotate_cmd->add_option("--max-books", max_books, "Stop after this many books (resume later)");
  annotate_cmd->add_option("--comments-dir", comments_dir, "Directory of <book_id>.txt comment files");

  // agree
  auto* agree_cmd = cli.add_subcommand("agree", "Compare human annotations with the stored records");
  std::string human_file, report_file;
  agree_cmd->add_option("--human", human_file, "Human annotations CSV")->required()->check(CLI::ExistingFile);
  agree_cmd->add_option("--report", report_file, "Write the markdown disagreement report here");

  // analyze
  auto* analyze = cli.add_subcommand("analyze", "Show per-dimension effects (locks expectations)");
  std::optional<std::size_t> min_n;
  std::string effects_out;
  analyze->add_option("--min-n", min_n, "Minimum books per level before flagging low n");
  analyze->add_option("--out", effects_out, "Also write effects.csv here");

  // expect
  auto* expect = cli.add_subcommand("expect", "Register expected effect signs before viewing effects");
  std::string expect_file;
  bool post_hoc = false;
  expect->add_option("file", expect_file, "Expectations JSON")->required()->check(CLI::ExistingFile);
  expect->add_flag("--post-hoc", post_hoc, "Store after effects were viewed, labelled post-hoc");

  // predict
  auto* predict_cmd = cli.add_subcommand("predict", "Compare models by leave-one-out cross-validation");
  std::vector<std::size_t> curve;
  std::size_t repeats = 20;
  std::vector<std::string> exclude;
  bool clear_mask = false;
  std::string predictions_out;
  predict_cmd->add_option("--curve", curve, "Learning-curve sizes")->delimiter(',');
  predict_cmd->add_option("--repeats", repeats, "Subsamples per curve size")->capture_default_str();
  predict_cmd->add_option("--out", predictions_out, "Write the model report JSON here");

  // recommend / explore
  auto* rec = cli.add_subcommand("recommend", "Rank candidates by predicted enjoyment");
  auto* explore = cli.add_subcommand("explore", "Rank candidates by how much they would teach the model");
  std::size_t k = 10;
  std::string model;
  bool journal = false;
  for (auto* sub : {predict_cmd, rec, explore}) {
    sub->add_option("--exclude", exclude, "Mask a dimension: id or id:reason (repeatable)");
    sub->add_flag("--clear-mask", clear_mask, "Remove every mask entry first");
  }
  for (auto* sub : {rec, explore}) {
    sub->add_option("-k", k, "Number of books")->capture_default_str();
    sub->add_option("--model", model, "ridge or random_forest (default: best by LOOCV)");
    sub->add_flag("--journal", journal, "Use journal-derived dimensions");
  }

  // serve
  auto* serve = cli.add_subcommand("serve", "Serve the JSON API");
  std::string bind = "127.0.0.1:8080";
  serve->add_option("--bind", bind, "host:port")->capture_default_str();

  CLI11_PARSE(cli, argc, argv);

  try {
    const auto config = load(g);
    const fsys::path root(g.project);

    if (init->parsed()) {
      auto schema = default_schema();
      if (!schema_file.empty()) schema = schema_from_json(nlohmann::json::parse(fs::read_file(schema_file)));
      auto w = app::Workspace::create(root, schema, g.seed.value_or(config.seed));
      std::cout << "created project in " << root.string() << " (" << schema.dimensions().size() << " dimensions)\n";
      return 0;
    }

    auto w = app::Workspace::open(root);

    if (ingest_cmd->parsed()) {
      if (ratings_file.empty() && candidates_file.empty() && notes_file.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "give --ratings, --candidates and/or --notes");
      }
      if (!ratings_file.empty()) {
        const auto r = w.ingest_ratings(fs::read_file(ratings_file), ingest::parse_ratings_format(format),
                                        ingest::parse_dnf_policy(dnf));
        for (const auto& warn : r.warnings) std::cerr << "warning: " << warn << "\n";
        std::cout << "rated books: " << r.books.size() << "\n";
      }
      if (!candidates_file.empty()) {
        const auto r = w.ingest_ratings(fs::read_file(candidates_file), ingest::RatingsFormat::kAuto,
                                        ingest::DnfPolicy::kInclude, true);
        std::cout << "candidates: " << r.books.size() << "\n";
      }
      if (!notes_file.empty()) {
        const auto notes = w.attach_notes(fs::read_file(notes_file));
        for (const auto& u : notes.unmatched) std::cerr << "warning: no rated book for note '" << u << "'\n";
        std::cout << "notes attached: " << notes.notes.size() << "\n";
      }
    } else if (annotate_cmd->parsed()) {
      auto backend = app::make_backend(config);
      annotate::RunOptions opts;
      opts.workers = workers.value_or(config.workers);
      if (max_books) opts.max_books = *max_books;
      if (!comments_dir.empty()) opts.comments_dir = comments_dir;
      const auto report = w.annotate(*backend, opts);
      if (g.json) {
        print_json(annotate::run_report_to_json(report));
      } else {
        for (const auto& b : report.books) {
          if (b.status == annotate::BookStatus::kFailed || b.status == annotate::BookStatus::kNotDocumented) {
            std::cerr << to_string(b.status) << ": " << b.title << (b.error.empty() ? "" : " (" + b.error + ")") << "\n";
          }
        }
        std::printf("annotated %zu, cached %zu, not documented %zu, failed %zu%s\n", report.annotated, report.cached,
                    report.not_documented, report.failed, report.complete ? "" : " (stopped early; run again to resume)");
        std::printf("sources: wikipedia %zu, goodreads %zu, both %zu, other web only %zu\n", report.wikipedia,
                    report.goodreads, report.both, report.other_web_only);
      }
    } else if (agree_cmd->parsed()) {
      const auto& s = w.state();
      const auto human = agree::parse_human_csv(fs::read_file(human_file), s.schema);
      std::map<std::string, std::string> titles;
      for (const auto& b : s.books) titles[b.book_id] = b.title;
      for (const auto& b : s.candidates) titles[b.book_id] = b.title;
      const auto results = agree::compare_all(human, s.records, s.schema, titles);
      if (!report_file.empty()) fs::atomic_write(report_file, agree::disagreement_report(results));
      if (g.json) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : results) out.push_back(agree::agreement_to_json(r));
        print_json(out);
      } else {
        std::printf("%-28s %8s %6s %7s %7s\n", "dimension", "compared", "agree", "percent", "kappa");
        for (const auto& r : results) {
          std::printf("%-28s %8zu %6zu %6d%% %7s\n", r.dimension_id.c_str(), r.n_compared, r.n_agree, r.percent,
                      fmt(r.kappa, 2).c_str());
        }
      }
    } else if (analyze->parsed()) {
      const auto table = w.view_effects(min_n.value_or(config.min_n));
      if (!effects_out.empty()) fs::atomic_write(effects_out, stats::effects_csv(table));
      if (g.json) {
        auto j = stats::effects_json(table, &w.state().schema);
        if (table.has_expectations) j["concordance"] = stats::concordance_json(
                                        stats::concordance(table.estimates(), w.state().expectations));
        print_json(j);
      } else {
        std::cout << stats::effects_csv(table);
        if (table.has_expectations) {
          try {
            const auto c = stats::concordance(table.estimates(), w.state().expectations);
            std::printf("concordance: %zu/%zu = %d%%%s\n", c.matches, c.compared, c.percent,
                        c.post_hoc ? " (post-hoc expectations)" : "");
          } catch (const Error& e) {
            std::cerr << e.what() << "\n";
          }
        }
      }
    } else if (expect->parsed()) {
      const auto set = expectations_from_json(nlohmann::json::parse(fs::read_file(expect_file)));
      const auto& stored = w.register_expectations(set, post_hoc);
      std::cout << "registered " << stored.items.size() << " expectations" << (stored.post_hoc ? " (post-hoc)" : "")
                << "\n";
    } else if (predict_cmd->parsed()) {
      apply_mask(w, exclude, clear_mask);
      app::ModelEvalOptions opts;
      opts.cv.seed = seed_for(g, w);
      opts.cv.threads = config.threads;
      opts.curve_sizes = curve;
      opts.curve_repeats = repeats;
      const auto& report = w.evaluate_models(opts);
      if (!predictions_out.empty()) fs::atomic_write(predictions_out, report.dump(2) + "\n");
      if (g.json) {
        print_json(report);
      } else {
        for (const auto& [name, m] : report.at("models").items()) {
          if (m.contains("error")) {
            std::printf("%-20s %s\n", name.c_str(), m.at("error").at("message").get<std::string>().c_str());
          } else {
            const auto& r = m.at("loocv").at("r");
            std::printf("%-20s LOOCV r = %s\n", name.c_str(), r.is_null() ? "undefined" : fmt(r.get<double>()).c_str());
          }
        }
        std::cout << "best: " << report.at("best").get<std::string>() << "\n";
        if (report.contains("learning_curve")) {
          for (const auto& p : report.at("learning_curve")) {
            std::printf("m = %3d  mean r = %s\n", p.at("m").get<int>(),
                        p.at("mean_r").is_null() ? "undefined" : fmt(p.at("mean_r").get<double>()).c_str());
          }
        }
      }
    } else if (rec->parsed() || explore->parsed()) {
      apply_mask(w, exclude, clear_mask);
      recommend::RecommendOptions opts;
      opts.k = k;
      opts.include_journal = journal;
      opts.min_n = config.min_n;
      opts.cv.seed = seed_for(g, w);
      opts.cv.threads = config.threads;
      if (!model.empty()) opts.model = predict::parse_model_kind(model);
      const auto mode = rec->parsed() ? recommend::Mode::kEnjoyment : recommend::Mode::kExploration;
      const auto result = w.recommend(mode, opts);
      if (g.json) {
        auto j = recommend::result_to_json(result);
        j["excluded"] = w.state().mask.ids();
        print_json(j);
      } else {
        print_recommendations(result);
      }
    } else if (serve->parsed()) {
      const auto colon = bind.rfind(':');
      if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--bind must be host:port");
      const auto port = text::parse_double(bind.substr(colon + 1));
      if (!port) throw Error(ErrorCode::kInvalidArgument, "--bind port is not a number");
      std::unique_ptr<annotate::AnnotationBackend> backend;
      try {
        backend = app::make_backend(config);
      } catch (const Error& e) {
        std::cerr << "annotation disabled: " << e.what() << "\n";
      }
      app::Service service(std::move(w), std::move(backend), config);
      const int bound = service.bind(bind.substr(0, colon), static_cast<int>(*port));
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving " << root.string() << " on http://" << bind.substr(0, colon) << ":" << bound << "\n"
                << std::flush;
      service.run();
      g_service = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: FormatError: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
