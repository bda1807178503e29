// Python bindings. Structured results cross the boundary as JSON text; the
// package's __init__ turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "isaac/agree/agree.hpp"
#include "isaac/annotate/mock_backend.hpp"
#include "isaac/app/project.hpp"
#include "isaac/app/service.hpp"
#include "isaac/ingest/ingest.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/fs.hpp"

namespace py = pybind11;
using namespace isaac;

namespace {

ingest::SkewnessEstimator estimator(const std::string& name) {
  if (name == "g1") return ingest::SkewnessEstimator::kG1;
  if (name == "G1" || name == "adjusted") return ingest::SkewnessEstimator::kAdjustedG1;
  if (name == "b1") return ingest::SkewnessEstimator::kB1;
  throw Error(ErrorCode::kInvalidArgument, "estimator must be g1, G1 or b1");
}

std::string books_json(const std::vector<RatedBook>& books) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : books) out.push_back(book_to_json(b));
  return out.dump();
}

// Owns the workspace and its service so requests share one writer queue.
class Project {
 public:
  explicit Project(app::Workspace w) : service_(std::make_unique<app::Service>(std::move(w), nullptr)) {}
  Project(app::Workspace w, const std::filesystem::path& mock_corpus)
      : service_(std::make_unique<app::Service>(
            std::move(w), std::make_unique<annotate::MockBackend>(nlohmann::json::parse(fs::read_file(mock_corpus))))) {}

  py::tuple request(const std::string& method, const std::string& path, const std::string& body,
                    const std::map<std::string, std::string>& query, const std::string& key) {
    app::ServiceResponse r;
    {
      py::gil_scoped_release release;
      r = service_->handle(method, path, body, query, key);
    }
    return py::make_tuple(r.status, r.body.dump());
  }

 private:
  std::unique_ptr<app::Service> service_;
};

}  // namespace

PYBIND11_MODULE(_isaac, m) {
  m.doc() = "Native core of the isaac package";

  static py::exception<Error> error(m, "IsaacError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      exc.attr("code") = std::string(code_name(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("percentile_rank", [](const std::vector<double>& v) { return ingest::percentile_rank(v); },
        "(rank - 0.5) / n with average ranks for ties");
  m.def(
      "skewness", [](const std::vector<double>& v, const std::string& est) { return ingest::skewness(v, estimator(est)); },
      py::arg("values"), py::arg("estimator") = "g1");
  m.def(
      "parse_ratings",
      [](const std::string& text, const std::string& format, const std::string& dnf) {
        auto r = ingest::parse_ratings_text(text, ingest::parse_ratings_format(format));
        auto books = ingest::apply_dnf_policy(std::move(r.books), ingest::parse_dnf_policy(dnf));
        ingest::apply_percentiles(books);
        return py::make_tuple(books_json(books), r.warnings);
      },
      py::arg("text"), py::arg("format") = "auto", py::arg("dnf") = "include");
  m.def(
      "agreement",
      [](const std::string& human_csv, const std::filesystem::path& project) {
        const auto s = app::load_project(project);
        const auto results = agree::compare_all(agree::parse_human_csv(human_csv, s.schema), s.records, s.schema);
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : results) out.push_back(agree::agreement_to_json(r));
        return out.dump();
      },
      py::arg("human_csv"), py::arg("project"));
  m.def("default_schema", [] { return schema_to_json(default_schema()).dump(); });

  py::class_<Project>(m, "_Project")
      .def_static(
          "create",
          [](const std::filesystem::path& root, std::uint64_t seed, std::optional<std::filesystem::path> mock) {
            auto w = app::Workspace::create(root, default_schema(), seed);
            return mock ? std::make_unique<Project>(std::move(w), *mock) : std::make_unique<Project>(std::move(w));
          },
          py::arg("root"), py::arg("seed") = 42, py::arg("mock_corpus") = std::nullopt)
      .def_static(
          "open",
          [](const std::filesystem::path& root, std::optional<std::filesystem::path> mock) {
            auto w = app::Workspace::open(root);
            return mock ? std::make_unique<Project>(std::move(w), *mock) : std::make_unique<Project>(std::move(w));
          },
          py::arg("root"), py::arg("mock_corpus") = std::nullopt)
      .def("request", &Project::request, py::arg("method"), py::arg("path"), py::arg("body") = "",
           py::arg("query") = std::map<std::string, std::string>{}, py::arg("idempotency_key") = "");
}
