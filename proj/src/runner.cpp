#include "rydpulse/runner.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rydpulse/blockade.hpp"
#include "rydpulse/ensemble.hpp"
#include "rydpulse/parallel.hpp"
#include "rydpulse/rng.hpp"

namespace rydpulse {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

class Outputs {
public:
    Outputs(const ExperimentConfig& config, std::string hash, std::ostream* log)
        : dir_(config.output_dir), hash_(std::move(hash)), seed_(config.seed), log_(log) {
        fs::create_directories(dir_);
    }

    const fs::path& dir() const { return dir_; }
    const std::string& hash() const { return hash_; }
    std::uint64_t seed() const { return seed_; }
    std::vector<Artifact>& artifacts() { return artifacts_; }

    void note(const std::string& message) const {
        if (log_) *log_ << message << '\n';
    }

    // CSV with a provenance comment line; every data row is prefixed with
    // config_hash and master_seed.
    void write_csv(const std::string& name, const std::string& kind, const std::string& header,
                   const std::vector<std::string>& rows) {
        std::ofstream out(dir_ / name, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << "# config_hash=" << hash_ << " seed=" << seed_ << '\n';
        out << "config_hash,seed," << header << '\n';
        for (const auto& row : rows) out << hash_ << ',' << seed_ << ',' << row << '\n';
        if (!out.flush()) throw std::runtime_error("write failed for " + name);
        artifacts_.push_back({name, kind, rows.size()});
    }

    void write_json(const std::string& name, const std::string& kind, const nlohmann::json& doc) {
        std::ofstream out(dir_ / name, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << doc.dump(2) << '\n';
        artifacts_.push_back({name, kind, 1});
    }

private:
    fs::path dir_;
    std::string hash_;
    std::uint64_t seed_;
    std::ostream* log_;
    std::vector<Artifact> artifacts_;
};

// Append-only JSON-lines file. Each record is written with one call and
// flushed, so an interrupted run leaves a valid prefix plus at most one
// partial line, which --resume discards.
class RecordLog {
public:
    RecordLog(Outputs& out, std::string name, bool resume) : out_(out), name_(std::move(name)) {
        const fs::path path = out_.dir() / name_;
        if (resume && fs::exists(path)) {
            std::ifstream in(path);
            std::string line;
            std::string kept;
            while (std::getline(in, line)) {
                if (in.eof()) break;  // no trailing newline: partial write
                nlohmann::json doc;
                try {
                    doc = nlohmann::json::parse(line);
                } catch (const nlohmann::json::parse_error&) {
                    break;
                }
                if (doc.value("config_hash", "") != out_.hash()) {
                    throw std::runtime_error("--resume: " + path.string() + " was written by config " +
                                             doc.value("config_hash", "?") + ", not " + out_.hash());
                }
                existing_.push_back(std::move(doc));
                kept += line + '\n';
            }
            in.close();
            std::ofstream rewrite(path, std::ios::trunc);
            rewrite << kept;
        } else {
            std::ofstream truncate(path, std::ios::trunc);
        }
        file_.open(path, std::ios::app);
        if (!file_) throw std::runtime_error("cannot open " + path.string());
    }

    ~RecordLog() { out_.artifacts().push_back({name_, "records", existing_.size() + written_}); }

    const std::vector<nlohmann::json>& existing() const { return existing_; }

    void append(nlohmann::json doc, std::int64_t sample_id) {
        nlohmann::json line = {{"config_hash", out_.hash()}, {"seed", out_.seed()}, {"sample_id", sample_id}};
        line.update(doc);
        file_ << line.dump() << '\n';
        file_.flush();
        if (!file_) throw std::runtime_error("write failed for " + name_);
        ++written_;
    }

    std::uint64_t written() const { return written_; }
    std::uint64_t resumed() const { return existing_.size(); }

private:
    Outputs& out_;
    std::string name_;
    std::ofstream file_;
    std::vector<nlohmann::json> existing_;
    std::uint64_t written_ = 0;
};

EnsembleSettings settings_for(const ExperimentConfig& c) {
    EnsembleSettings s;
    s.n_atoms = c.n_atoms;
    s.c6 = c.c6;
    s.m_segments = c.m_segments;
    s.omega_max = c.omega_max;
    s.delta_max = c.delta_max;
    s.bipartition = resolve_bipartition(c);
    s.smax = c.analysis.smax;
    s.keep_central = c.analysis.keep_central;
    return s;
}

EnsembleAccumulator make_accumulator(const AnalysisOptions& a) {
    return EnsembleAccumulator(a.entropy_bins, a.ratio_bins, a.omega_bins, a.omega_hi);
}

struct Cell {
    std::string label;
    double spacing = 0.0;
    double t_final = 0.0;
    EnsembleAccumulator acc;
};

const char* kSummaryHeader =
    "cell,spacing,t_final,samples,median_entropy,q16_entropy,q84_entropy,mean_entropy,mean_ratio,n_ratios,"
    "degenerate_gaps,js_entropy_haar,js_ratio_haar,js_omega_porter_thomas,median_nn,q16_nn,q84_nn,mean_excitation";

std::string summary_row(const Cell& cell, const EnsembleAccumulator* reference) {
    const CellSummary s = summarize_cell(cell.acc, reference);
    auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    std::ostringstream row;
    row << cell.label << ',' << num(cell.spacing) << ',' << num(cell.t_final) << ',' << s.samples << ','
        << num(s.entropy.median) << ',' << num(s.entropy.lo) << ',' << num(s.entropy.hi) << ',' << num(s.mean_entropy)
        << ',' << num(s.mean_ratio) << ',' << s.n_ratios << ',' << cell.acc.degenerate << ','
        << opt(s.js_entropy_reference) << ',' << opt(s.js_ratio_reference) << ',' << num(s.js_omega_porter_thomas)
        << ',' << num(s.nn_correlation.median) << ',' << num(s.nn_correlation.lo) << ','
        << num(s.nn_correlation.hi) << ',' << num(s.mean_excitation);
    return row.str();
}

const char* kHistogramHeader = "cell,spacing,t_final,quantity,lo,hi,count,mass,reference_mass";

void histogram_rows(const Cell& cell, const EnsembleAccumulator* reference, std::vector<std::string>& rows) {
    auto emit = [&](const char* quantity, const Histogram& h, const std::vector<double>& ref) {
        const auto masses = h.masses(true);
        for (std::size_t i = 0; i < h.bins(); ++i) {
            rows.push_back(cell.label + ',' + num(cell.spacing) + ',' + num(cell.t_final) + ',' + quantity + ',' +
                           num(h.edges[i]) + ',' + num(h.edges[i + 1]) + ',' + std::to_string(h.counts[i]) + ',' +
                           num(masses[i]) + ',' + (ref.empty() ? std::string() : num(ref[i])));
        }
    };
    const std::vector<double> none;
    emit("normalized_entropy", cell.acc.entropy, reference ? reference->entropy.masses(true) : none);
    emit("gap_ratio", cell.acc.ratios, reference ? reference->ratios.masses(true) : none);
    emit("omega", cell.acc.omegas, porter_thomas_masses(cell.acc.omegas));
}

// Draws `count` Haar-sector records starting at sample 0, in parallel, in order.
template <class Sink>
void haar_records(const EnsembleContext& ctx, std::uint64_t seed, int count, int workers, const Histogram& omega_layout,
                  std::int64_t first, Sink&& sink) {
    const int chunk = std::max(1, resolve_workers(workers)) * 32;
    for (std::int64_t start = first; start < count; start += chunk) {
        const auto n = static_cast<std::size_t>(std::min<std::int64_t>(chunk, count - start));
        std::vector<EnsembleRecord> batch(n);
        parallel_for(n, workers, [&](std::size_t i) {
            batch[i] = ctx.haar_sector_sample(seed, start + static_cast<std::int64_t>(i));
            bin_omegas(batch[i], omega_layout);
        });
        for (auto& r : batch) sink(r);
    }
}

EnsembleAccumulator haar_reference(const EnsembleContext& ctx, const ExperimentConfig& c, Outputs& out) {
    out.note("haar-sector reference: " + std::to_string(c.reference_samples) + " states");
    EnsembleAccumulator ref = make_accumulator(c.analysis);
    // The reference uses its own stream family so it never coincides with a data sample.
    haar_records(ctx, stream_seed(c.seed, {static_cast<std::uint64_t>(StreamTag::reference)}), c.reference_samples,
                 c.workers, ref.omegas, 0, [&](EnsembleRecord& r) { ref.add(r); });
    return ref;
}

// Random-pulse cells over spacings x T_f, shared by ensemble, porter-thomas and blockade.
std::vector<Cell> random_pulse_cells(const ExperimentConfig& c, EnsembleContext& ctx, Outputs& out, RecordLog& log) {
    std::vector<Cell> cells;
    for (double d : c.spacings) {
        ctx.prepare(d);
        for (double t : c.t_finals) {
            cells.push_back({"d=" + num(d) + " T=" + num(t), d, t, make_accumulator(c.analysis)});
        }
    }
    const auto total = static_cast<std::int64_t>(cells.size()) * c.samples;

    // Resumed records must form the in-order prefix of the sample grid.
    std::int64_t done = 0;
    for (const auto& doc : log.existing()) {
        const auto cell_index = static_cast<std::size_t>(done / c.samples);
        const std::int64_t sample = done % c.samples;
        if (doc.at("cell").get<std::size_t>() != cell_index || doc.at("sample_id").get<std::int64_t>() != sample) {
            throw std::runtime_error("--resume: record order does not match the sample grid");
        }
        cells[cell_index].acc.add(ensemble_record_from_json(doc));
        ++done;
    }
    if (done > 0) out.note("resuming after " + std::to_string(done) + " of " + std::to_string(total) + " records");

    const int chunk = std::max(1, resolve_workers(c.workers)) * 16;
    while (done < total) {
        const auto n = static_cast<std::size_t>(std::min<std::int64_t>(chunk, total - done));
        std::vector<EnsembleRecord> batch(n);
        parallel_for(n, c.workers, [&](std::size_t i) {
            const std::int64_t index = done + static_cast<std::int64_t>(i);
            const auto cell_index = static_cast<std::uint64_t>(index / c.samples);
            const Cell& cell = cells[cell_index];
            batch[i] = ctx.random_pulse_sample(c.seed, cell_index, index % c.samples, cell.spacing, cell.t_final);
            bin_omegas(batch[i], cell.acc.omegas);
        });
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t index = done + static_cast<std::int64_t>(i);
            const auto cell_index = static_cast<std::size_t>(index / c.samples);
            cells[cell_index].acc.add(batch[i]);
            nlohmann::json doc = to_json(batch[i], false);
            doc["cell"] = cell_index;
            log.append(std::move(doc), batch[i].sample_id);
        }
        done += static_cast<std::int64_t>(n);
        if (done % (chunk * 64) < static_cast<std::int64_t>(n) || done == total) {
            out.note(std::to_string(done) + "/" + std::to_string(total) + " samples");
        }
    }
    return cells;
}

void write_cell_tables(const std::vector<Cell>& cells, const Cell* haar, Outputs& out, const std::string& prefix) {
    const EnsembleAccumulator* ref = haar ? &haar->acc : nullptr;
    std::vector<std::string> summary, hist;
    for (const auto& cell : cells) {
        summary.push_back(summary_row(cell, ref));
        histogram_rows(cell, ref, hist);
    }
    if (haar) {
        summary.push_back(summary_row(*haar, nullptr));
        histogram_rows(*haar, nullptr, hist);
    }
    out.write_csv(prefix + "_summary.csv", "summary", kSummaryHeader, summary);
    out.write_csv(prefix + "_histograms.csv", "histogram", kHistogramHeader, hist);
}

void run_random_pulse_kind(const ExperimentConfig& c, Outputs& out, const RunOptions& opt, RunSummary& summary) {
    EnsembleContext ctx(settings_for(c));
    out.note("bipartition A = {" + ctx.settings().bipartition.label() + "}");
    Cell haar{"haar-sector", 0.0, 0.0, haar_reference(ctx, c, out)};
    std::vector<Cell> cells;
    {
        RecordLog log(out, "records.jsonl", opt.resume);
        cells = random_pulse_cells(c, ctx, out, log);
        summary.records_written = log.written();
        summary.records_resumed = log.resumed();
    }
    std::string prefix = to_string(c.kind);
    std::replace(prefix.begin(), prefix.end(), '-', '_');
    write_cell_tables(cells, &haar, out, prefix);

    if (c.kind == ExperimentKind::porter_thomas) {
        std::vector<std::string> rows;
        for (const auto& cell : cells) {
            rows.push_back(cell.label + ',' + num(cell.spacing) + ',' + num(cell.t_final) + ',' +
                           std::to_string(cell.acc.count()) + ',' + num(summarize_cell(cell.acc).js_omega_porter_thomas));
        }
        rows.push_back(haar.label + ",,," + std::to_string(haar.acc.count()) + ',' +
                       num(summarize_cell(haar.acc).js_omega_porter_thomas));
        out.write_csv("porter_thomas_js.csv", "summary", "cell,spacing,t_final,samples,js_omega_porter_thomas", rows);
    }
    if (c.kind == ExperimentKind::blockade) {
        std::vector<std::string> rows;
        const double d_tilde = characteristic_distance(c.c6, c.omega_max, c.delta_max);
        for (const auto& cell : cells) {
            const EtaModel m = eta_model_for_spacing(cell.spacing, c.c6, c.omega_max, c.delta_max);
            const Summary nn = blockade_diagnostic(cell.acc.nn_correlation);
            rows.push_back(cell.label + ',' + num(cell.spacing) + ',' + num(cell.t_final) + ',' + num(m.v) + ',' +
                           num(m.eta_minus()) + ',' + num(m.eta_plus()) + ',' +
                           (m.interaction_dominated() ? "A" : "B") + ',' + num(nn.median) + ',' + num(nn.lo) + ',' +
                           num(nn.hi) + ',' + num(d_tilde));
        }
        out.write_csv("blockade_diagnostic.csv", "summary",
                      "cell,spacing,t_final,v_nn,eta_minus,eta_plus,case,median_nn,q16_nn,q84_nn,d_tilde", rows);
    }
}

void run_haar_baseline(const ExperimentConfig& c, Outputs& out, const RunOptions& opt, RunSummary& summary) {
    EnsembleContext ctx(settings_for(c));
    Cell haar{"haar-sector", 0.0, 0.0, make_accumulator(c.analysis)};
    {
        RecordLog log(out, "records.jsonl", opt.resume);
        for (const auto& doc : log.existing()) haar.acc.add(ensemble_record_from_json(doc));
        haar_records(ctx, c.seed, c.samples, c.workers, haar.acc.omegas, static_cast<std::int64_t>(log.resumed()),
                     [&](EnsembleRecord& r) {
                         haar.acc.add(r);
                         log.append(to_json(r, false), r.sample_id);
                     });
        summary.records_written = log.written();
        summary.records_resumed = log.resumed();
    }
    write_cell_tables({}, &haar, out, "haar_baseline");

    // Full-space Haar states on the same bipartition, for the Page comparison.
    const Bipartition& part = ctx.settings().bipartition;
    std::vector<double> entropies(c.samples);
    parallel_for(entropies.size(), c.workers, [&](std::size_t i) {
        Rng rng = make_stream(c.seed, {static_cast<std::uint64_t>(StreamTag::haar_full), i});
        entropies[i] = schmidt_decompose(haar_full(rng, c.n_atoms), part, c.analysis.smax).entropy;
    });
    const double smax = entropy_max(c.n_atoms, c.analysis.smax);
    std::vector<double> sector_entropy(haar.acc.normalized_entropy.size());
    std::transform(haar.acc.normalized_entropy.begin(), haar.acc.normalized_entropy.end(), sector_entropy.begin(),
                   [&](double s) { return s * smax; });
    std::vector<std::string> rows{
        "haar-full," + std::to_string(entropies.size()) + ',' + num(mean(entropies)) + ',' + num(mean(entropies) / smax),
        "haar-sector," + std::to_string(sector_entropy.size()) + ',' + num(mean(sector_entropy)) + ',' +
            num(mean(sector_entropy) / smax)};
    out.write_csv("haar_entropy.csv", "summary", "ensemble,samples,mean_entropy,mean_normalized_entropy", rows);
}

void run_ratio_stats(const ExperimentConfig& c, Outputs& out, RunSummary&) {
    EnsembleContext ctx(settings_for(c));
    const Bipartition& part = ctx.settings().bipartition;
    EnsembleAccumulator acc = make_accumulator(c.analysis);
    haar_records(ctx, c.seed, c.samples, c.workers, acc.omegas, 0, [&](EnsembleRecord& r) { acc.add(r); });

    const int small = static_cast<int>(std::min(part.sites.size(), part.complement().size()));
    const int d_a = 1 << small, d_b = 1 << (c.n_atoms - small);
    std::vector<std::pair<std::string, std::vector<double>>> pools{{"haar-sector", acc.pooled_ratios}};
    const std::pair<ReferenceEnsemble, std::uint64_t> refs[] = {{ReferenceEnsemble::complex_ginibre, 1},
                                                                {ReferenceEnsemble::real_ginibre, 2},
                                                                {ReferenceEnsemble::poisson, 3}};
    for (const auto& [ensemble, id] : refs) {
        Rng rng = make_stream(c.seed, {static_cast<std::uint64_t>(StreamTag::reference), id});
        pools.emplace_back(to_string(ensemble),
                           wishart_reference_ratios(rng, d_a, d_b, ensemble, c.reference_samples, c.analysis.keep_central));
    }
    std::vector<std::string> rows;
    for (const auto& [name, ratios] : pools) {
        rows.push_back(name + ',' + std::to_string(ratios.size()) + ',' + num(mean(ratios)));
    }
    out.write_csv("ratio_means.csv", "summary", "ensemble,n_ratios,mean_ratio", rows);

    std::vector<Histogram> hists;
    for (const auto& [name, ratios] : pools) {
        hists.push_back(Histogram::uniform(0.0, 1.0, c.analysis.ratio_bins));
        hists.back().add(ratios);
    }
    rows.clear();
    const auto& edges = hists.front().edges;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double mid = 0.5 * (edges[i] + edges[i + 1]);
        std::string row = num(edges[i]) + ',' + num(edges[i + 1]);
        for (const auto& h : hists) row += ',' + num(h.density()[i]);
        row += ',' + num(wigner_dyson_pdf(mid, 1)) + ',' + num(wigner_dyson_pdf(mid, 2)) + ',' + num(poisson_ratio_pdf(mid));
        rows.push_back(row);
    }
    out.write_csv("ratio_histograms.csv", "histogram",
                  "lo,hi,haar_sector,complex_ginibre,real_ginibre,poisson,surmise_beta1,surmise_beta2,poisson_pdf", rows);
}

// floor(N/2)-site subsets, one per dihedral class (smallest mask in the class).
std::vector<Bipartition> bipartition_classes(int n) {
    const int k = n / 2;
    std::vector<Bipartition> out;
    for (Bitstring mask = 0; mask < (Bitstring{1} << n); ++mask) {
        if (std::popcount(mask) != k) continue;
        if (canonical_representative(mask, n) != mask) continue;
        std::vector<int> sites;
        for (int i = 0; i < n; ++i) {
            if ((mask >> i) & 1U) sites.push_back(i);
        }
        out.push_back(make_bipartition(n, sites));
    }
    return out;
}

void run_bipartition_scan(const ExperimentConfig& c, Outputs& out, RunSummary&) {
    const SectorBasis basis = dihedral_orbits(c.n_atoms);
    const auto parts = bipartition_classes(c.n_atoms);
    struct Result {
        std::vector<double> ratios;
        double max_asymmetry = 0.0;
    };
    std::vector<std::vector<Result>> per_sample(c.samples);
    std::vector<SymmetryClass> classes;
    for (const auto& p : parts) classes.push_back(classify_bipartition(p));
    parallel_for(per_sample.size(), c.workers, [&](std::size_t i) {
        Rng rng = make_stream(c.seed, {static_cast<std::uint64_t>(StreamTag::haar_sector), i});
        const StateVector full = embed(haar_sector(rng, basis), basis);
        auto& results = per_sample[i];
        results.resize(parts.size());
        for (std::size_t b = 0; b < parts.size(); ++b) {
            const auto ent = schmidt_decompose(full, parts[b], c.analysis.smax);
            results[b].ratios = gap_ratios(ent, c.analysis.keep_central).ratios;
            if (classes[b].exchange) results[b].max_asymmetry = symmetric_coefficient_check(full, parts[b]);
        }
    });
    std::vector<std::string> rows;
    for (std::size_t b = 0; b < parts.size(); ++b) {
        std::vector<double> pooled;
        double asym = 0.0;
        for (const auto& sample : per_sample) {
            pooled.insert(pooled.end(), sample[b].ratios.begin(), sample[b].ratios.end());
            asym = std::max(asym, sample[b].max_asymmetry);
        }
        rows.push_back('"' + parts[b].label() + "\"," + std::to_string(parts[b].mask()) + ',' +
                       to_string(classes[b].kind()) + ',' + (classes[b].exchange ? "1" : "0") + ',' +
                       (classes[b].internal ? "1" : "0") + ',' + std::to_string(pooled.size()) + ',' +
                       num(mean(pooled)) + ',' + (classes[b].exchange ? num(asym) : std::string()));
    }
    out.write_csv("bipartition_scan.csv", "summary",
                  "sites,mask,symmetry,exchange,internal,n_ratios,mean_ratio,max_coefficient_asymmetry", rows);
}

void run_eta_pdf(const ExperimentConfig& c, Outputs& out, RunSummary&) {
    std::vector<std::string> grid_rows, summary_rows;
    const double d_tilde = characteristic_distance(c.c6, c.omega_max, c.delta_max);
    for (std::size_t s = 0; s < c.spacings.size(); ++s) {
        const double d = c.spacings[s];
        const EtaModel m = eta_model_for_spacing(d, c.c6, c.omega_max, c.delta_max);
        const double upper = std::isfinite(m.eta_plus()) ? std::min(m.eta_plus(), 20.0 * m.eta_minus())
                                                         : 20.0 * m.eta_minus();
        const double hi = std::max(upper, 2.0 * m.eta_minus());
        for (int i = 0; i < c.eta.grid_points; ++i) {
            const double eta = hi * i / (c.eta.grid_points - 1);
            grid_rows.push_back(num(d) + ',' + num(eta) + ',' + num(eta_pdf(eta, m)) + ',' + num(eta_cdf(eta, m)));
        }
        Rng rng = make_stream(c.seed, {static_cast<std::uint64_t>(StreamTag::reference), s});
        const double ks = eta_monte_carlo_ks(rng, m, c.eta.mc_samples);
        summary_rows.push_back(num(d) + ',' + num(m.v) + ',' + num(m.eta_minus()) + ',' + num(m.eta_plus()) + ',' +
                               (m.interaction_dominated() ? "A" : "B") + ',' +
                               (m.interaction_dominated() ? num(m.plateau_density()) : std::string()) + ',' +
                               std::to_string(c.eta.mc_samples) + ',' + num(ks) + ',' + num(d_tilde));
    }
    out.write_csv("eta_pdf.csv", "histogram", "spacing,eta,pdf,cdf", grid_rows);
    out.write_csv("eta_summary.csv", "summary",
                  "spacing,v_nn,eta_minus,eta_plus,case,plateau_density,mc_samples,mc_ks_distance,d_tilde", summary_rows);
}

struct GrapeTarget {
    TargetInfo info;
    StateVector state;
};

void run_grape_targets(const ExperimentConfig& c, const std::vector<GrapeTarget>& targets, double prep_spacing,
                       Outputs& out, const RunOptions& opt, RunSummary& summary) {
    const SectorBasis basis = dihedral_orbits(c.n_atoms);
    const SectorOperators ops = build_sector_operators(basis, make_params(c.n_atoms, prep_spacing, c.c6));
    GrapeConfig gc = c.grape.optimizer;
    gc.workers = c.workers;

    std::vector<std::string> rows;
    std::vector<StudyPoint> points;
    auto record = [&](const nlohmann::json& doc) {
        const auto& t = doc.at("target");
        int converged = doc.at("n_restarts_converged").get<int>();
        int failed = 0;
        for (const auto& r : doc.at("restarts")) failed += r.at("failed").get<bool>();
        summary.grape_failures += failed;
        const double s = t.at("normalized_entropy").get<double>();
        const double inf = doc.at("best_infidelity").get<double>();
        points.push_back({s, inf});
        rows.push_back(std::to_string(t.at("target_id").get<std::int64_t>()) + ',' + num(s) + ',' +
                       num(t.at("generation_t_final").get<double>()) + ',' + num(inf) + ',' +
                       num(doc.at("t_opt").get<double>()) + ',' + std::to_string(converged) + ',' + std::to_string(failed));
    };
    {
        RecordLog log(out, "grape_results.jsonl", opt.resume);
        if (log.resumed() > targets.size()) throw std::runtime_error("--resume: more results than targets");
        for (std::size_t i = 0; i < log.resumed(); ++i) {
            if (log.existing()[i].at("sample_id").get<std::int64_t>() != targets[i].info.target_id) {
                throw std::runtime_error("--resume: result order does not match the target list");
            }
            record(log.existing()[i]);
        }
        for (std::size_t i = log.resumed(); i < targets.size(); ++i) {
            const auto& t = targets[i];
            const auto t0 = std::chrono::steady_clock::now();
            const ControlProblem problem = make_control_problem(ops, basis, t.state);
            const GrapeResult result = optimize(problem, gc, c.seed, t.info);
            const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            nlohmann::json doc = to_json(result);
            record(doc);
            log.append(doc, t.info.target_id);
            char line[160];
            std::snprintf(line, sizeof line, "target %lld (S=%.3f): best infidelity %.3e, %d/%d restarts converged, %.0f s",
                          static_cast<long long>(t.info.target_id), t.info.normalized_entropy.value_or(0.0),
                          result.best_infidelity, result.n_converged(), gc.n_restarts, sec);
            out.note(line);
        }
        summary.records_written = log.written();
        summary.records_resumed = log.resumed();
    }
    if (summary.grape_failures > 0) {
        out.note(std::to_string(summary.grape_failures) + " restarts failed; see grape_results.jsonl");
    }
    out.write_csv("grape_study.csv", "summary",
                  "target_id,normalized_entropy,generation_t_final,best_infidelity,t_opt,n_restarts_converged,"
                  "n_restarts_failed",
                  rows);
    std::vector<std::string> curve;
    for (const auto& b : success_curve(points, c.analysis.gamma, c.analysis.delta_s)) {
        curve.push_back(num(b.lo) + ',' + num(b.hi) + ',' + std::to_string(b.count) + ',' + std::to_string(b.successes) +
                        ',' + num(b.probability) + ',' + num(b.median) + ',' + num(b.q16) + ',' + num(b.q84));
    }
    out.write_csv("success_curve.csv", "summary", "lo,hi,count,successes,probability,median_infidelity,q16,q84", curve);
}

GrapeTarget make_target(const EnsembleContext& ctx, std::uint64_t seed, std::uint64_t group, std::int64_t index,
                        double spacing, double t_final) {
    const std::uint64_t stream = stream_seed(seed, {static_cast<std::uint64_t>(StreamTag::grape_pool)});
    GrapeTarget t;
    t.state = ctx.random_pulse_state(stream, group, index, spacing, t_final);
    const EnsembleRecord r = ctx.analyse(t.state, index, spacing, t_final);
    t.info.normalized_entropy = r.normalized_entropy;
    t.info.generation_t_final = t_final;
    return t;
}

void run_grape_benchmark(const ExperimentConfig& c, Outputs& out, const RunOptions& opt, RunSummary& summary) {
    EnsembleContext ctx(settings_for(c));
    const double d = c.grape.target_spacing;
    const double t_f = c.grape.optimizer.t_max;
    ctx.prepare(d);
    std::vector<GrapeTarget> targets(c.grape.n_targets);
    parallel_for(targets.size(), c.workers, [&](std::size_t i) {
        targets[i] = make_target(ctx, c.seed, 0, static_cast<std::int64_t>(i), d, t_f);
        targets[i].info.target_id = static_cast<std::int64_t>(i);
    });
    out.note("grape-benchmark: " + std::to_string(targets.size()) + " targets at d=" + num(d) + ", T=" + num(t_f));
    run_grape_targets(c, targets, d, out, opt, summary);
}

void run_grape_study(const ExperimentConfig& c, Outputs& out, const RunOptions& opt, RunSummary& summary) {
    EnsembleContext ctx(settings_for(c));
    const auto& g = c.grape;
    ctx.prepare(g.target_spacing);
    const std::size_t per_time = static_cast<std::size_t>(g.pool_size);
    std::vector<GrapeTarget> pool(per_time * g.target_t_finals.size());
    parallel_for(pool.size(), c.workers, [&](std::size_t i) {
        const std::size_t group = i / per_time;
        pool[i] = make_target(ctx, c.seed, group + 1, static_cast<std::int64_t>(i % per_time), g.target_spacing,
                              g.target_t_finals[group]);
        pool[i].info.target_id = static_cast<std::int64_t>(i);
    });
    std::vector<TargetCandidate> candidates;
    for (const auto& t : pool) candidates.push_back({*t.info.normalized_entropy, *t.info.generation_t_final});
    const StratifiedSelection sel = stratified_targets(candidates, g.n_bins, g.per_bin);
    std::vector<std::string> bins;
    for (int b = 0; b < g.n_bins; ++b) {
        bins.push_back(std::to_string(b) + ',' + num(sel.edges.empty() ? 0.0 : sel.edges[b]) + ',' +
                       num(sel.edges.empty() ? 0.0 : sel.edges[b + 1]) + ',' + std::to_string(sel.per_bin[b]));
    }
    out.write_csv("stratification.csv", "summary", "bin,lo,hi,selected", bins);
    if (!sel.empty_bins.empty()) out.note(std::to_string(sel.empty_bins.size()) + " entropy bins are empty");
    std::vector<GrapeTarget> targets;
    for (std::size_t i : sel.selected) targets.push_back(pool[i]);
    out.note("grape-study: " + std::to_string(targets.size()) + " targets from a pool of " + std::to_string(pool.size()));
    run_grape_targets(c, targets, g.prep_spacing, out, opt, summary);
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    const ValidationReport report = validate_config(config);
    if (!report.ok()) throw report.errors.front();
    for (const auto& w : report.warnings) {
        if (options.log) *options.log << "warning: " << w << '\n';
    }

    RunSummary summary;
    summary.config_hash = config_hash(config);
    Outputs out(config, summary.config_hash, options.log);
    out.note(to_string(config.kind) + " (config " + summary.config_hash + ", seed " + std::to_string(config.seed) + ")");

    switch (config.kind) {
        case ExperimentKind::ensemble:
        case ExperimentKind::porter_thomas:
        case ExperimentKind::blockade: run_random_pulse_kind(config, out, options, summary); break;
        case ExperimentKind::haar_baseline: run_haar_baseline(config, out, options, summary); break;
        case ExperimentKind::ratio_stats: run_ratio_stats(config, out, summary); break;
        case ExperimentKind::eta_pdf: run_eta_pdf(config, out, summary); break;
        case ExperimentKind::grape_benchmark: run_grape_benchmark(config, out, options, summary); break;
        case ExperimentKind::grape_study: run_grape_study(config, out, options, summary); break;
        case ExperimentKind::bipartition_scan: run_bipartition_scan(config, out, summary); break;
    }

    out.write_json("config.json", "config", to_json(config));
    summary.artifacts = out.artifacts();
    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& a : summary.artifacts) {
        artifacts.push_back({{"path", a.path}, {"kind", a.kind}, {"rows", a.rows}, {"config_hash", summary.config_hash}});
    }
    artifacts.push_back({{"path", "manifest.json"}, {"kind", "manifest"}, {"rows", 1}, {"config_hash", summary.config_hash}});
    const nlohmann::json manifest = {{"experiment", to_string(config.kind)},
                                     {"config_hash", summary.config_hash},
                                     {"seed", config.seed},
                                     {"created", utc_timestamp()},
                                     {"records_written", summary.records_written},
                                     {"records_resumed", summary.records_resumed},
                                     {"grape_failed_restarts", summary.grape_failures},
                                     {"artifacts", artifacts}};
    std::ofstream(out.dir() / "manifest.json", std::ios::trunc) << manifest.dump(2) << '\n';
    summary.artifacts.push_back({"manifest.json", "manifest", 1});
    return summary;
}

}  // namespace rydpulse
