#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dml/experiment.hpp"
#include "dml/io.hpp"
#include "dml/rng.hpp"
#include "dml/synthetic.hpp"

using namespace dml;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("dense csv loader") {
    TempDir tmp("dml_io_dense");

    SECTION("labels map to dense ids in first-appearance order") {
        write_file(tmp.file("basic.csv"), "1,2,a\n3,4,b\n5,6,a\n");
        const Dataset ds = load_dense_csv(tmp.file("basic.csv"));
        CHECK(ds.n() == 3);
        CHECK(ds.dim() == 2);
        CHECK(ds.labels == std::vector<int>{0, 1, 0});
        CHECK(ds.patterns(1, 1) == 4.0);
        CHECK(ds.name == "basic");
    }

    SECTION("header row is detected and skipped") {
        write_file(tmp.file("header.csv"), "f1,f2,class\n1,2,0\n3,4,1\n");
        const Dataset ds = load_dense_csv(tmp.file("header.csv"));
        CHECK(ds.n() == 2);
        CHECK(ds.labels == std::vector<int>{0, 1});
    }

    SECTION("ragged rows fail with the line number") {
        write_file(tmp.file("ragged.csv"), "1,2,3,a\n4,5,b\n");
        try {
            load_dense_csv(tmp.file("ragged.csv"));
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SECTION("non-numeric feature cells fail with the line number") {
        write_file(tmp.file("bad.csv"), "1,2,a\n3,oops,b\n");
        try {
            load_dense_csv(tmp.file("bad.csv"));
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SECTION("unreadable file") {
        CHECK_THROWS_AS(load_dense_csv(tmp.file("missing.csv")), parse_error);
    }

    SECTION("explicit label column") {
        write_file(tmp.file("labelled.csv"), "x,1.5,2.5\ny,3.5,4.5\n");
        const Dataset ds = load_dense_csv(tmp.file("labelled.csv"), 0);
        CHECK(ds.dim() == 2);
        CHECK(ds.labels == std::vector<int>{0, 1});
        CHECK(ds.patterns(0, 0) == 1.5);
    }
}

TEST_CASE("sparse loader") {
    TempDir tmp("dml_io_sparse");

    SECTION("densifies with 1-based indices") {
        write_file(tmp.file("a.libsvm"), "1 1:0.5 3:2.0\n-1 2:1.0\n");
        const Dataset ds = load_sparse(tmp.file("a.libsvm"));
        CHECK(ds.n() == 2);
        CHECK(ds.dim() == 3);
        CHECK(ds.patterns(0, 0) == 0.5);
        CHECK(ds.patterns(0, 1) == 0.0);
        CHECK(ds.patterns(0, 2) == 2.0);
        CHECK(ds.patterns(1, 1) == 1.0);
        CHECK(ds.labels == std::vector<int>{0, 1});
    }

    SECTION("+1/-1 labels map to two class ids") {
        write_file(tmp.file("signs.libsvm"), "+1 1:1.0\n-1 1:2.0\n+1 1:3.0\n");
        const Dataset ds = load_sparse(tmp.file("signs.libsvm"));
        CHECK(ds.labels == std::vector<int>{0, 1, 0});
    }

    SECTION("empty feature list gives an all-zero pattern") {
        write_file(tmp.file("empty.libsvm"), "2\n1 1:4.0\n");
        const Dataset ds = load_sparse(tmp.file("empty.libsvm"));
        CHECK(ds.patterns(0, 0) == 0.0);
        CHECK(ds.labels[0] == 0);
    }

    SECTION("non-increasing indices fail with the line number") {
        write_file(tmp.file("order.libsvm"), "1 1:1.0 2:2.0\n1 3:1.0 2:2.0\n");
        try {
            load_sparse(tmp.file("order.libsvm"));
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SECTION("malformed tokens fail") {
        write_file(tmp.file("tok.libsvm"), "1 1:1.0 nonsense\n");
        CHECK_THROWS_AS(load_sparse(tmp.file("tok.libsvm")), parse_error);
    }
}

TEST_CASE("dense csv round trip") {
    TempDir tmp("dml_io_roundtrip");
    const Dataset original = generate_synthetic(SyntheticKind::ThreeClassRings, 30, 5);
    save_dense_csv(original, tmp.file("rings.csv"));
    const Dataset reloaded = load_dense_csv(tmp.file("rings.csv"));
    REQUIRE(reloaded.n() == original.n());
    REQUIRE(reloaded.dim() == original.dim());
    CHECK(reloaded.labels == original.labels);
    for (std::size_t i = 0; i < original.n(); ++i)
        for (std::size_t j = 0; j < original.dim(); ++j)
            CHECK(reloaded.patterns(i, j) == original.patterns(i, j));
}

TEST_CASE("transform serialization") {
    TempDir tmp("dml_io_transform");
    Rng rng(4);
    Matrix a(3, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) a(i, j) = rng.uniform(-5.0, 5.0);

    write_transform(a, tmp.file("t.txt"));
    const std::string text = read_file(tmp.file("t.txt"));
    CHECK(text.rfind("3 2\n", 0) == 0);
    // 17 significant digits per value
    CHECK(text.find('e') != std::string::npos);

    const TransformMatrix back = read_transform(tmp.file("t.txt"));
    REQUIRE(back.rows() == 3);
    REQUIRE(back.cols() == 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(back(i, j) == a(i, j));
}

TEST_CASE("error matrix csv round trip") {
    TempDir tmp("dml_io_matrix");
    ErrorMatrix em;
    em.methods = {"euclidean", "dmlfe"};
    em.datasets = {"iris", "wine"};
    em.errors = Matrix(2, 2, {3.87, 1.91, 2.80, 1.50});
    write_error_matrix_csv(em, tmp.file("m.csv"));
    const ErrorMatrix back = read_error_matrix_csv(tmp.file("m.csv"));
    CHECK(back.methods == em.methods);
    CHECK(back.datasets == em.datasets);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t d = 0; d < 2; ++d) CHECK(back.errors(m, d) == em.errors(m, d));
}

TEST_CASE("experiment config") {
    TempDir tmp("dml_io_config");

    SECTION("full round trip of keys") {
        write_file(tmp.file("exp.cfg"),
                   "# comment\n"
                   "datasets = iris, wine\n"
                   "methods = euclidean, dmlfe\n"
                   "out = somewhere\n"
                   "seed = 9\n"
                   "cv.runs = 3\n"
                   "cv.folds = 2\n"
                   "cv.kmax = 10\n"
                   "solver.schedule = quench\n"
                   "solver.max_sweeps = 50\n"
                   "solver.step = 0.5\n"
                   "scaling = global\n");
        const ExperimentConfig config = parse_experiment_config(tmp.file("exp.cfg"));
        CHECK(config.datasets == std::vector<std::string>{"iris", "wine"});
        CHECK(config.methods == std::vector<std::string>{"euclidean", "dmlfe"});
        CHECK(config.output_dir == "somewhere");
        CHECK(config.seed == 9);
        CHECK(config.cv.runs == 3);
        CHECK(config.cv.kmax == 10);
        CHECK(config.solver.schedule.kind == TemperatureSchedule::Kind::Quench);
        CHECK(config.solver.max_sweeps == 50);
        CHECK(config.solver.proposal.step_scale == 0.5);
        CHECK(config.cv.global_scaling);
    }

    SECTION("unknown keys are rejected") {
        write_file(tmp.file("bad.cfg"), "nonsense = 1\n");
        CHECK_THROWS_AS(parse_experiment_config(tmp.file("bad.cfg")), parse_error);
    }

    SECTION("bad values are rejected") {
        write_file(tmp.file("badval.cfg"), "cv.runs = many\n");
        CHECK_THROWS_AS(parse_experiment_config(tmp.file("badval.cfg")), std::invalid_argument);
    }

    SECTION("missing dataset fails before any output") {
        TempDir out("dml_io_run_missing");
        write_file(tmp.file("missing.cfg"),
                   "datasets = /nonexistent/file.csv\n"
                   "methods = euclidean\n"
                   "out = " + out.file("results") + "\n");
        const ExperimentConfig config = parse_experiment_config(tmp.file("missing.cfg"));
        CHECK_THROWS_AS(command_run(config), parse_error);
        CHECK_FALSE(fs::exists(out.file("results")));
    }
}

TEST_CASE("resolve_dataset") {
    CHECK(resolve_dataset("iris").n() == 150);
    CHECK(resolve_dataset("two-gaussians", std::nullopt, 40, 3).n() == 40);
    CHECK_THROWS_AS(resolve_dataset("not-a-thing"), parse_error);
}

TEST_CASE("command_run determinism and outputs") {
    TempDir tmp("dml_io_run");
    ExperimentConfig config;
    config.datasets = {"two-gaussians"};
    config.methods = {"euclidean", "dmlfe"};
    config.seed = 11;
    config.solver.max_sweeps = 30;
    config.solver.patience = 10;
    config.cv.runs = 2;
    config.workers = 1;

    std::ostringstream log;
    config.output_dir = tmp.file("a");
    REQUIRE(command_run(config, log) == 0);
    config.output_dir = tmp.file("b");
    REQUIRE(command_run(config, log) == 0);

    const std::vector<std::string> files{"results.csv",
                                         "results.json",
                                         "error_matrix.csv",
                                         "ranks.csv",
                                         "stats_report.csv",
                                         "transform_two-gaussians_euclidean.txt",
                                         "transform_two-gaussians_dmlfe.txt"};
    for (const std::string& name : files) {
        INFO(name);
        REQUIRE(fs::exists(tmp.file("a/" + name)));
        CHECK(read_file(tmp.file("a/" + name)) == read_file(tmp.file("b/" + name)));
    }

    // two result rows: one per method
    const std::string results = read_file(tmp.file("a/results.csv"));
    CHECK(std::count(results.begin(), results.end(), '\n') == 3);  // header + 2 rows
}

TEST_CASE("command_trace file contract") {
    TempDir tmp("dml_io_trace");
    TraceOptions options;
    options.dataset = "two-gaussians";
    options.output_dir = tmp.file("traces");
    options.restarts = 3;
    options.seed = 5;
    options.solver.max_sweeps = 40;
    options.solver.patience = 15;
    options.snapshot_interval = 20;
    options.synthetic_n = 24;

    std::ostringstream log;
    REQUIRE(command_trace(options, log) == 0);

    CHECK(fs::exists(tmp.file("traces/trace_annealing.csv")));
    for (int j = 0; j < 3; ++j)
        CHECK(fs::exists(tmp.file("traces/trace_quench_0" + std::to_string(j) + ".csv")));
    CHECK_FALSE(fs::exists(tmp.file("traces/trace_quench_03.csv")));

    // 2-D data: snapshots incl. the final best transform
    CHECK(fs::exists(tmp.file("traces/snapshot_sweep_0.csv")));
    CHECK(fs::exists(tmp.file("traces/snapshot_final.csv")));

    // quench trace energies are non-increasing
    std::ifstream in(tmp.file("traces/trace_quench_00.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "sweep,temperature,energy,accepted");
    double previous = 2.0;
    while (std::getline(in, line)) {
        const auto fields = detail::split(line, ',');
        REQUIRE(fields.size() == 4);
        double energy;
        REQUIRE(detail::parse_double(fields[2], energy));
        CHECK(energy <= previous + 1e-15);
        previous = energy;
    }
}

TEST_CASE("command_gen") {
    TempDir tmp("dml_io_gen");
    REQUIRE(command_gen("three-class-rings", 60, 7, tmp.file("rings.csv")) == 0);
    const Dataset ds = load_dense_csv(tmp.file("rings.csv"));
    CHECK(ds.n() == 60);
    CHECK(ds.dim() == 2);
    CHECK(ds.class_count() == 3);
    // balanced within one
    std::vector<int> counts(3, 0);
    for (int label : ds.labels) counts[label] += 1;
    CHECK(*std::max_element(counts.begin(), counts.end()) -
              *std::min_element(counts.begin(), counts.end()) <=
          1);

    // same seed, same bytes
    REQUIRE(command_gen("three-class-rings", 60, 7, tmp.file("rings2.csv")) == 0);
    CHECK(read_file(tmp.file("rings.csv")) == read_file(tmp.file("rings2.csv")));

    CHECK_THROWS_AS(command_gen("pentagons", 60, 7, tmp.file("x.csv")), std::invalid_argument);
}

TEST_CASE("synthetic generators") {
    SECTION("two-gaussians balanced halves") {
        const Dataset ds = generate_synthetic(SyntheticKind::TwoGaussians, 40, 1);
        std::vector<int> counts(2, 0);
        for (int label : ds.labels) counts[label] += 1;
        CHECK(counts[0] == 20);
        CHECK(counts[1] == 20);
    }

    SECTION("same seed reproduces the dataset exactly") {
        const Dataset a = generate_synthetic(SyntheticKind::Xor, 33, 9);
        const Dataset b = generate_synthetic(SyntheticKind::Xor, 33, 9);
        CHECK(a.patterns == b.patterns);
        CHECK(a.labels == b.labels);
    }

    SECTION("n below 4 is rejected") {
        CHECK_THROWS_AS(generate_synthetic(SyntheticKind::Xor, 3, 1), std::invalid_argument);
    }
}
