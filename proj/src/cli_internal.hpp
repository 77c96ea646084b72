#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "fracfourier/branch.hpp"
#include "fracfourier/error.hpp"
#include "fracfourier/fourier.hpp"
#include "fracfourier/hypgeom.hpp"
#include "fracfourier/systems.hpp"
#include "fracfourier/thermo.hpp"

namespace fracfourier::cli {

using Json = nlohmann::ordered_json;

// Typed view of one config object. Every accessed key is remembered; close()
// rejects the rest. Resolved values (defaults included) land in `resolved`.
class Node {
public:
    Node(const Json* j, std::string path, Node* parent = nullptr, std::string key = {});

    const std::string& path() const { return path_; }
    bool has(const std::string& k) const;

    double number(const std::string& k, std::optional<double> def = std::nullopt);
    std::int64_t integer(const std::string& k, std::optional<std::int64_t> def = std::nullopt,
                         std::int64_t lo = INT64_MIN, std::int64_t hi = INT64_MAX);
    std::uint64_t unsigned_integer(const std::string& k);
    bool boolean(const std::string& k, std::optional<bool> def = std::nullopt);
    std::string text(const std::string& k, std::optional<std::string> def = std::nullopt,
                     const std::vector<std::string>& allowed = {});
    std::vector<double> numbers(const std::string& k, std::optional<std::vector<double>> def = std::nullopt);
    std::vector<std::int64_t> integers(const std::string& k, std::optional<std::vector<std::int64_t>> def = std::nullopt,
                                       std::int64_t lo = INT64_MIN, std::int64_t hi = INT64_MAX);
    // raw value, recorded as used and echoed
    const Json& raw(const std::string& k);

    // object child; an absent key yields an empty object
    Node child(const std::string& k);
    // array of objects; elements echo themselves
    std::vector<Node> children(const std::string& k);

    void close();

    Json resolved = Json::object();

private:
    const Json& at(const std::string& k);
    [[noreturn]] void bad(const std::string& k, const std::string& what) const;

    const Json* j_;
    std::string path_;
    Node* parent_;
    std::string key_;
    std::set<std::string> used_;
    Json empty_ = Json::object();
};

// Checked invariants. Contracts decide the exit code; observations are measured
// claims that are reported with pass/fail but do not.
class Ledger {
public:
    void contract(const std::string& name, bool pass, Json detail = Json::object());
    void observe(const std::string& name, bool pass, Json detail = Json::object());
    bool ok() const { return ok_; }
    const Json& entries() const { return entries_; }

private:
    void add(const char* kind, const std::string& name, bool pass, Json detail);
    Json entries_ = Json::array();
    bool ok_ = true;
};

struct Column {
    std::string name;
    std::vector<double> num;
    std::vector<std::string> text;
    bool is_text = false;

    Column(std::string n, std::vector<double> v) : name(std::move(n)), num(std::move(v)) {}
    Column(std::string n, std::vector<std::string> v) : name(std::move(n)), text(std::move(v)), is_text(true) {}
    std::size_t size() const { return is_text ? text.size() : num.size(); }
};

struct PlotSpec {
    std::string name;
    std::string x, y;  // column names
    bool log2x = false, log2y = false;
};

class SeriesWriter {
public:
    SeriesWriter(std::filesystem::path dir, Ledger& ledger) : dir_(std::move(dir)), ledger_(ledger) {}
    // writes series_<name>.csv; `declared` is the grid size the rows must match
    void add(const std::string& name, std::size_t declared, const std::vector<Column>& cols,
             const std::vector<PlotSpec>& plots = {});
    const Json& meta() const { return meta_; }

private:
    std::filesystem::path dir_;
    Ledger& ledger_;
    Json meta_ = Json::array();
};

// shortest round-trip decimal
std::string format_double(double v);

struct Context {
    Node& root;
    Json payload = Json::object();
    Ledger ledger;
    std::unique_ptr<SeriesWriter> series;
    std::optional<std::uint64_t> seed;

    explicit Context(Node& r) : root(r) {}
    std::uint64_t require_seed(const std::string& why) const;
};

// ---------------------------------------------------------------- config helpers

struct SystemHandle {
    std::string kind;
    SystemPtr branch;
    std::shared_ptr<DoublingPerturbation> doubling;
    std::shared_ptr<LinearIFS> linear;
    std::shared_ptr<JuliaQuadratic> julia;
    std::shared_ptr<SolenoidSystem> solenoid;
    std::shared_ptr<SchottkyGroup> schottky;
    const CircleExpandingMap* circle = nullptr;
};

struct SystemConfig {
    std::string kind;
    std::string Phi = "cos";
    double delta = 0.0;
    std::vector<LinearIFS::Piece> pieces;
    cplx c;
    int N_max = 6;
    std::string precision = "working";
    double eps = 0.0;
    bool with_g = true;
    std::vector<SchottkyGenerator> generators;
};

SystemConfig parse_system(Node n, const std::vector<std::string>& allowed);
SystemHandle build_system(const SystemConfig& c);

struct PotentialConfig {
    std::string kind = "zero";
    double c = 0.0, s = 0.0, p = 0.5, scale = 1.0;
    double lo = 0.0, hi = 0.5, width = 0.3;
    std::vector<double> values;
    std::string function = "cos";
    bool normalize = false;
};

PotentialConfig parse_potential(Node n, const std::string& default_kind = "zero");

struct PotentialHandle {
    PotentialConfig cfg;
    PotentialSpec spec;
    double normalize_defect = 0.0;
};

PotentialHandle build_potential(const PotentialConfig& c, const SystemHandle& sys, int grid_points = 4096);

// Closed-form pressure when one is known for this (system, potential) pair.
std::optional<double> closed_form_pressure(const SystemHandle& sys, const PotentialConfig& pot);

// Log of the spectral radius of a 0/1 transition matrix.
double log_spectral_radius(const TransitionMatrix& m);

// Number of admissible words of length n.
std::size_t admissible_count(const TransitionMatrix& m, int n);

struct MeasureConfig {
    std::string kind = "equilibrium";
    int depth = 10;
    int grid_points = 4096;
    int bins = 32;
};

MeasureConfig parse_measure(Node& params, int default_depth);
struct BuiltMeasure {
    AtomicMeasure atoms;
    std::optional<EquilibriumData> eq;
    std::optional<PsMeasure> ps;
};
BuiltMeasure build_measure(const MeasureConfig& m, int depth, const SystemHandle* sys, const PotentialHandle* pot);

FrequencyGrid parse_frequencies(Node n);

Json to_json(const DecayReport& r);
Json complex_json(cplx z);

// experiment table
using ExperimentFn = void (*)(Context&);
struct ExperimentEntry {
    const char* name;
    ExperimentFn fn;
    const char* summary;
};
const std::vector<ExperimentEntry>& experiment_table();

void write_plots(const Json& report, const std::filesystem::path& series_dir, const std::filesystem::path& out_dir);

}  // namespace fracfourier::cli
