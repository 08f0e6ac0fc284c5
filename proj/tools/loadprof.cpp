// loadprof: hourly smart-meter readings to clustered representative day
// profiles, one pipeline stage per subcommand sharing a run directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "loadprof/cleaning.hpp"
#include "loadprof/cluster.hpp"
#include "loadprof/daytype.hpp"
#include "loadprof/ingest.hpp"
#include "loadprof/manifest.hpp"
#include "loadprof/profile.hpp"
#include "loadprof/report.hpp"
#include "loadprof/synth.hpp"

namespace fs = std::filesystem;
using namespace loadprof;

namespace {

struct GlobalOptions {
  std::string out;
  std::uint64_t seed = 0;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::string run_id;
};

struct Paths {
  fs::path run;
  fs::path dataset() const { return run / "dataset"; }
  fs::path cleaned() const { return run / "clean"; }
  fs::path labels() const { return run / "labels.csv"; }
  fs::path profiles() const { return run / "profiles.csv"; }
  fs::path elbow() const { return run / "elbow.csv"; }
  fs::path cluster() const { return run / "cluster.json"; }
  fs::path report() const { return run / "report"; }
  fs::path synth() const { return run / "synth"; }
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::missing_file, path.string() + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

template <typename Writer>
fs::path write_with(const fs::path& path, Writer&& writer) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  writer(out);
  return path;
}

void require(const fs::path& path, const std::string& command) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::missing_stage,
                path.string() + " not found; run `loadprof " + command + "` first");
  }
}

class Stage {
 public:
  Stage(const GlobalOptions& global, std::string name)
      : global_(global), name_(std::move(name)), paths_{global.out} {
    fs::create_directories(paths_.run);
    manifest_ = RunManifest::load_or_create(paths_.run);
    if (!global.run_id.empty()) {
      manifest_.run_id = global.run_id;
    } else if (manifest_.run_id.empty()) {
      manifest_.run_id = fs::path(global.out).lexically_normal().filename().string();
      if (manifest_.run_id.empty()) manifest_.run_id = "run";
    }
    manifest_.version = std::string(kVersion);
  }

  const Paths& paths() const { return paths_; }
  RunManifest& manifest() { return manifest_; }
  void use_seed() { manifest_.seed = global_.seed; }
  void note_config(const std::string& path) {
    if (!path.empty()) manifest_.configs[name_] = path;
  }

  void finish(const std::vector<fs::path>& outputs) {
    manifest_.record(name_, paths_.run, outputs);
    manifest_.save(paths_.run);
  }

 private:
  const GlobalOptions& global_;
  std::string name_;
  Paths paths_;
  RunManifest manifest_;
};

Dataset read_cleaned(const Paths& paths) {
  require(paths.cleaned() / "days.csv", "clean");
  return read_dataset(paths.cleaned());
}

Labeling read_labels(const Paths& paths) {
  require(paths.labels(), "label");
  std::ifstream in(paths.labels());
  return read_labels_csv(in, paths.labels().string());
}

std::vector<DayProfile> read_profiles(const Paths& paths) {
  require(paths.profiles(), "profile");
  std::ifstream in(paths.profiles());
  return read_profiles_csv(in, paths.profiles().string());
}

// -- stages -----------------------------------------------------------------

struct IngestArgs {
  std::string in;
  std::string schema;
};

void cmd_ingest(const GlobalOptions& g, const IngestArgs& args) {
  Stage stage(g, "ingest");
  std::optional<SchemaMap> schema;
  if (!args.schema.empty()) {
    schema = SchemaMap::load(args.schema);
    stage.note_config(args.schema);
  }
  const auto loaded = load_dataset(args.in, {g.threads, schema ? &*schema : nullptr});
  stage.manifest().input_dir = args.in;

  save_dataset(loaded.dataset, stage.paths().dataset());
  const auto report = write_with(stage.paths().dataset() / "ingest_report.csv", [&](auto& out) {
    out << "file,line,column,cell,kind\n";
    for (const auto& r : loaded.parse_reports) {
      for (const auto& issue : r.issues) {
        out << fs::path(r.file).filename().string() << ',' << issue.line << ',' << issue.column
            << ',' << issue.cell << ",absent\n";
      }
    }
    for (const auto& f : loaded.merge_flags) {
      out << "environment," << format_date(f.date) << ':' << f.hour << ',' << f.series << ','
          << format_double(f.merged) << ",disagreement\n";
    }
  });
  stage.finish({stage.paths().dataset() / "days.csv", stage.paths().dataset() / "environment.csv",
                report});

  std::cout << loaded.dataset.property_ids().size() << " properties, "
            << loaded.summary.day_records << " day records (" << loaded.summary.files
            << " files, " << loaded.summary.rows << " rows)\n";
  if (!loaded.merge_flags.empty()) {
    std::cerr << "warning: " << loaded.merge_flags.size()
              << " environment values disagreed across properties; see ingest_report.csv\n";
  }
}

struct LabelArgs {
  std::string scheme;
  std::string holidays;
  std::string axes;
  bool drop_unlabeled = false;
};

DayTypeScheme load_scheme(const LabelArgs& args) {
  auto scheme = args.scheme.empty() ? DayTypeScheme{} : DayTypeScheme::load(args.scheme);
  if (!args.axes.empty()) scheme = DayTypeScheme::parse("axes=" + args.axes);
  if (!args.holidays.empty()) scheme.holidays = load_holidays(args.holidays);
  scheme.validate();
  return scheme;
}

void cmd_label(const GlobalOptions& g, const LabelArgs& args) {
  Stage stage(g, "label");
  stage.note_config(args.scheme);
  require(stage.paths().dataset() / "days.csv", "ingest");
  const auto dataset = read_dataset(stage.paths().dataset());
  const auto labels = label_dataset(dataset, load_scheme(args), args.drop_unlabeled);
  const auto path = write_with(stage.paths().labels(), [&](auto& out) { write_labels_csv(out, labels); });
  stage.finish({path});

  std::map<std::string, std::size_t> cells;
  for (const auto& [key, label] : labels) ++cells[to_string(label)];
  std::cout << labels.size() << " days labelled into " << cells.size() << " day types\n";
  for (const auto& [name, count] : cells) std::cout << "  " << name << ": " << count << '\n';
  if (labels.size() < dataset.days().size()) {
    std::cout << dataset.days().size() - labels.size() << " unlabelable days dropped\n";
  }
}

struct CleanArgs {
  std::string policy = "omit";
};

void cmd_clean(const GlobalOptions& g, const CleanArgs& args) {
  Stage stage(g, "clean");
  const auto policy = parse_cleaning_policy(args.policy);
  require(stage.paths().dataset() / "days.csv", "ingest");
  const auto dataset = read_dataset(stage.paths().dataset());
  std::optional<Labeling> labels;
  if (policy == CleaningPolicy::impute_by_daytype) labels = read_labels(stage.paths());

  const auto result = clean(dataset, *policy, labels ? &*labels : nullptr);
  const auto dir = stage.paths().cleaned();
  save_dataset(result.dataset, dir);
  const auto table = format_validity_table(result.report);
  write_text(dir / "validity.txt", table);
  std::vector<fs::path> outputs{dir / "days.csv", dir / "environment.csv", dir / "validity.txt"};
  outputs.push_back(write_with(dir / "validity.csv",
                               [&](auto& out) { write_validity_csv(out, result.report); }));
  outputs.push_back(write_with(dir / "imputation_log.csv",
                               [&](auto& out) { write_imputation_log(out, result.log); }));
  outputs.push_back(
      write_with(dir / "events.csv", [&](auto& out) { write_clean_events(out, result.events); }));
  stage.finish(outputs);

  std::cout << table;
  std::cout << "policy " << args.policy << ": kept " << result.dataset.days().size()
            << " day records, imputed " << result.log.size() << ", dropped "
            << std::count_if(result.events.begin(), result.events.end(),
                             [](const CleanEvent& e) { return e.kind == CleanEventKind::dropped; })
            << '\n';
}

struct ProfileArgs {
  std::string grouping = "property";
  std::string mode = "amplitude";
};

void cmd_profile(const GlobalOptions& g, const ProfileArgs& args) {
  Stage stage(g, "profile");
  const auto dataset = read_cleaned(stage.paths());
  const auto grouping = *parse_grouping(args.grouping);
  std::optional<Labeling> labels;
  if (grouping == Grouping::per_property_label) labels = read_labels(stage.paths());
  const auto matrix = profile_matrix(dataset, grouping, *parse_similarity_mode(args.mode),
                                     labels ? &*labels : nullptr);
  const auto path = write_with(stage.paths().profiles(),
                               [&](auto& out) { write_profiles_csv(out, matrix.profiles); });
  stage.finish({path});
  for (const auto& d : matrix.dropped) std::cerr << "dropped " << d << '\n';
  std::cout << matrix.profiles.size() << " profiles (" << args.mode << " mode)\n";
}

struct KMeansArgs {
  std::size_t k = 4;
  std::size_t kmin = 2;
  std::size_t kmax = 10;
  std::size_t restarts = 1000;
  std::size_t max_iterations = 100;
};

KMeansConfig kmeans_config(const GlobalOptions& g, const KMeansArgs& args) {
  KMeansConfig cfg;
  cfg.k = args.k;
  cfg.restarts = args.restarts;
  cfg.max_iterations = args.max_iterations;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.validate();
  return cfg;
}

void cmd_elbow(const GlobalOptions& g, const KMeansArgs& args) {
  Stage stage(g, "elbow");
  stage.use_seed();
  const auto profiles = read_profiles(stage.paths());
  const auto report = elbow_scan(profiles, args.kmin, args.kmax, kmeans_config(g, args));
  const auto path = write_with(stage.paths().elbow(), [&](auto& out) { write_elbow_csv(out, report); });
  stage.finish({path});

  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    std::cout << "k=" << report.entries[i].k << "  wcss=" << format_double(report.entries[i].wcss)
              << '\n';
  }
  std::cout << "suggested k: " << report.suggested_k
            << (report.degenerate ? " (degenerate curve)" : "") << '\n';
  for (auto k : report.non_monotone) {
    std::cerr << "warning: best WCSS at k=" << k << " exceeds k=" << k - 1 << '\n';
  }
}

void cmd_cluster(const GlobalOptions& g, const KMeansArgs& args) {
  Stage stage(g, "cluster");
  stage.use_seed();
  const auto profiles = read_profiles(stage.paths());
  const auto cfg = kmeans_config(g, args);
  const auto result = kmeans_best(profiles, cfg);
  const auto path = stage.paths().cluster();
  write_text(path, clustering_to_json(result, cfg, profiles));
  stage.finish({path});

  std::cout << "k=" << cfg.k << " restarts=" << cfg.restarts
            << " total wcss=" << format_double(result.total_wcss)
            << " (restart " << result.winning_restart << ")\n";
  std::vector<std::size_t> sizes(cfg.k, 0);
  for (auto a : result.assignments) ++sizes[a];
  for (std::size_t c = 0; c < cfg.k; ++c) {
    std::cout << "  " << result.centroids[c].id << ": " << sizes[c] << " members, wcss "
              << format_double(result.per_cluster_wcss[c]) << '\n';
  }
}

struct ReportArgs {
  std::string reference;
};

void cmd_report(const GlobalOptions& g, const ReportArgs& args) {
  Stage stage(g, "report");
  stage.note_config(args.reference);
  const auto& paths = stage.paths();
  require(paths.cluster(), "cluster");
  const auto profiles = read_profiles(paths);
  const auto stored = clustering_from_json(read_text(paths.cluster()));
  if (stored.profile_ids.size() != profiles.size()) {
    throw Error(ErrorKind::malformed_input, "cluster.json does not match profiles.csv; rerun "
                                            "`loadprof cluster`");
  }
  const auto run_id = stage.manifest().run_id;
  auto outputs = write_bundle(render_cluster_panels(stored.result, profiles), paths.report(), run_id);

  if (fs::exists(paths.elbow())) {
    std::ifstream in(paths.elbow());
    const auto elbow = read_elbow_csv(in, paths.elbow().string());
    for (auto& p : write_bundle(render_elbow(elbow), paths.report(), run_id)) outputs.push_back(p);
  }
  if (!args.reference.empty()) {
    std::ifstream in(args.reference);
    if (!in) throw Error(ErrorKind::missing_file, args.reference + ": cannot open file");
    const auto overlay =
        overlay_reference(stored.result.centroids, read_reference_csv(in, args.reference));
    for (auto& p : write_bundle(overlay.bundle, paths.report(), run_id)) outputs.push_back(p);
    outputs.push_back(write_with(paths.report() / (run_id + "_reference_distances.csv"),
                                 [&](auto& out) { write_reference_distances(out, overlay.distances); }));
  }
  if (fs::exists(paths.cleaned() / "validity.txt")) {
    const auto table = paths.report() / (run_id + "_validity.txt");
    write_text(table, read_text(paths.cleaned() / "validity.txt"));
    outputs.push_back(table);
  }
  stage.finish(outputs);
  std::cout << outputs.size() << " report files in " << paths.report().string() << '\n';
}

struct SynthArgs {
  std::string config;
  std::string dir;
};

void cmd_synth(const GlobalOptions& g, const SynthArgs& args, bool seed_given) {
  Stage stage(g, "synth");
  auto spec = args.config.empty() ? SynthSpec::defaults(g.seed) : SynthSpec::parse(read_text(args.config));
  if (seed_given || args.config.empty()) spec.seed = g.seed;
  stage.note_config(args.config);
  stage.manifest().seed = spec.seed;
  const fs::path dir = args.dir.empty() ? stage.paths().synth() : fs::path(args.dir);
  const auto output = generate(spec);
  write_synth_output(output, dir);
  std::vector<fs::path> outputs;
  for (const auto& [id, text] : output.files) outputs.push_back(dir / (id + ".csv"));
  outputs.push_back(dir / "ledger.json");
  stage.finish(outputs);
  std::cout << output.files.size() << " dwelling files, " << spec.days << " days each, in "
            << dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representative daily load profiles from hourly household readings"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file supplying option defaults");

  GlobalOptions g;
  app.add_option("--out", g.out, "Run directory shared by all stages")->required();
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--threads", g.threads, "Worker cap; results do not depend on it")
      ->check(CLI::PositiveNumber);
  app.add_option("--run-id", g.run_id, "Name prefix for report files");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Load <property_id>.csv dwelling files");
  ingest->add_option("--in", ingest_args.in, "Directory of dwelling files")->required();
  ingest->add_option("--schema-map", ingest_args.schema, "Column remapping (key=value)");

  CleanArgs clean_args;
  auto* clean_cmd = app.add_subcommand("clean", "Drop or impute incomplete days");
  clean_cmd->add_option("--policy", clean_args.policy, "omit | impute | impute_by_daytype")
      ->check(CLI::IsMember({"omit", "impute", "impute_by_daytype"}));

  LabelArgs label_args;
  auto* label = app.add_subcommand("label", "Assign day types");
  label->add_option("--scheme", label_args.scheme, "Day-type scheme file (key=value)");
  label->add_option("--holidays", label_args.holidays, "Holiday dates, one per line");
  label->add_option("--axes", label_args.axes, "Comma-joined axes overriding the scheme");
  label->add_flag("--drop-unlabeled", label_args.drop_unlabeled,
                  "Skip days lacking weather for an enabled axis");

  ProfileArgs profile_args;
  auto* profile = app.add_subcommand("profile", "Average days into representative profiles");
  profile->add_option("--grouping", profile_args.grouping, "property | property-label")
      ->check(CLI::IsMember({"property", "property-label"}));
  profile->add_option("--mode", profile_args.mode, "amplitude | shape")
      ->check(CLI::IsMember({"amplitude", "shape"}));

  KMeansArgs kmeans_args;
  auto* cluster = app.add_subcommand("cluster", "Best-of-restarts k-means");
  cluster->add_option("--k", kmeans_args.k, "Number of clusters")->check(CLI::PositiveNumber);
  auto* elbow = app.add_subcommand("elbow", "WCSS over a range of k");
  elbow->add_option("--kmin", kmeans_args.kmin, "Smallest k")->check(CLI::Range(2, 1 << 20));
  elbow->add_option("--kmax", kmeans_args.kmax, "Largest k")->check(CLI::PositiveNumber);
  for (auto* sub : {cluster, elbow}) {
    sub->add_option("--restarts", kmeans_args.restarts, "Random starts per k")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-iterations", kmeans_args.max_iterations, "Lloyd iteration cap")
        ->check(CLI::PositiveNumber);
  }

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Plots and tables for a clustered run");
  report->add_option("--reference", report_args.reference, "Reference profiles to overlay");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic dataset");
  synth->add_option("--synth-config", synth_args.config, "Synthetic population (key=value)");
  synth->add_option("--dir", synth_args.dir, "Output directory (default <out>/synth)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest) cmd_ingest(g, ingest_args);
    if (*clean_cmd) cmd_clean(g, clean_args);
    if (*label) cmd_label(g, label_args);
    if (*profile) cmd_profile(g, profile_args);
    if (*cluster) cmd_cluster(g, kmeans_args);
    if (*elbow) cmd_elbow(g, kmeans_args);
    if (*report) cmd_report(g, report_args);
    if (*synth) cmd_synth(g, synth_args, seed_opt->count() > 0);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
