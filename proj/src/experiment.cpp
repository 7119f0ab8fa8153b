#include "lptail/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "lptail/poisson.hpp"
#include "lptail/version.hpp"

namespace lptail {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string hex_of(double v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(std::bit_cast<uint64_t>(v)));
  return buf;
}

double double_of_hex(const std::string& s) {
  return std::bit_cast<double>(static_cast<uint64_t>(std::stoull(s, nullptr, 16)));
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open file: " + path);
  json j;
  in >> j;
  return j;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

// ---- spec parsing ----------------------------------------------------------

std::string ExperimentSpec::canonical_json() const {
  json j;
  j["model"] = model;
  j["n"] = n;
  j["d"] = d;
  j["law"] = json::parse(law_json);
  j["threshold"] = {{"type", threshold.type},
                    {"value", threshold.value},
                    {"q", threshold.q},
                    {"calib_samples", threshold.calib_samples},
                    {"mu_samples", threshold.mu_samples}};
  j["sampler"] = sampler;
  j["samples"] = samples;
  j["replicas"] = replicas;
  j["burnin"] = burnin;
  j["thin"] = thin;
  j["max_tries"] = max_tries;
  j["box_budget"] = box_budget;
  j["eps_d"] = eps_d;
  j["events_eps"] = events_eps;
  j["h_quantile"] = h_quantile;
  j["seed"] = seed;
  j["save_geodesics"] = save_geodesics;
  json jm = json::array();
  for (const auto& m : masks) {
    json e;
    e["type"] = m.type;
    if (m.type == "cylinder") {
      e["eps"] = m.eps;
      e["curve"] = m.curve_file.empty() ? m.curve_name : m.curve_file;
    } else {
      e["i"] = m.strip_i;
      e["K"] = m.strip_k;
    }
    jm.push_back(e);
  }
  j["masks"] = jm;
  json jc = json::array();
  for (const auto& c : curves) {
    json e;
    e["name"] = c.name;
    if (!c.file.empty()) e["file"] = c.file;
    jc.push_back(e);
  }
  j["curves"] = jc;
  j["metrics"] = metrics;
  return j.dump(2);
}

uint64_t ExperimentSpec::spec_hash() const {
  std::string s = canonical_json();
  uint64_t h = 0x243F6A8885A308D3ULL;
  for (char ch : s) h = mix64(h ^ static_cast<uint8_t>(ch));
  return h;
}

ExperimentSpec parse_spec_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw SpecError(std::string("spec is not valid JSON: ") + e.what());
  }
  ExperimentSpec s;
  auto need = [&](const char* field) {
    if (!j.contains(field)) throw SpecError(std::string("spec missing field: ") + field);
  };
  need("model");
  need("n");
  need("seed");
  s.model = j["model"].get<std::string>();
  if (s.model != "lattice" && s.model != "poisson")
    throw SpecError("field 'model' must be lattice or poisson, got " + s.model);
  s.n = j["n"].get<int>();
  if (s.n < 1) throw SpecError("field 'n' must be >= 1");
  s.d = j.value("d", 2);
  if (s.d < 2) throw SpecError("field 'd' must be >= 2");
  if (s.model == "poisson" && s.d != 2)
    throw SpecError("field 'd' must be 2 for the poisson model");
  s.law_json = j.value("law", json{{"name", "exp"}}).dump();
  if (j.contains("threshold")) {
    const json& t = j["threshold"];
    s.threshold.type = t.value("type", "quantile");
    if (s.threshold.type != "delta" && s.threshold.type != "absolute" &&
        s.threshold.type != "quantile" && s.threshold.type != "none")
      throw SpecError("field 'threshold.type' must be delta|absolute|quantile|none");
    s.threshold.value = t.value("value", 0.0);
    s.threshold.q = t.value("q", 0.01);
    s.threshold.calib_samples = t.value("calib_samples", int64_t(100000));
    s.threshold.mu_samples = t.value("mu_samples", 32);
    if (s.threshold.type == "quantile" &&
        !(s.threshold.q > 0 && s.threshold.q < 1))
      throw SpecError("field 'threshold.q' must lie in (0,1)");
  } else {
    s.threshold.type = "none";
  }
  s.sampler = j.value("sampler", std::string("gibbs"));
  if (s.sampler != "gibbs" && s.sampler != "rejection" &&
      s.sampler != "coupled" && s.sampler != "box_gibbs")
    throw SpecError("field 'sampler' must be gibbs|rejection|coupled|box_gibbs");
  if (s.model == "poisson" && (s.sampler == "gibbs" || s.sampler == "coupled"))
    throw SpecError("field 'sampler': poisson model supports rejection|box_gibbs");
  if (s.model == "lattice" && s.sampler == "box_gibbs")
    throw SpecError("field 'sampler': box_gibbs is poisson-only");
  s.samples = j.value("samples", int64_t(100));
  if (s.samples < 1) throw SpecError("field 'samples' must be >= 1");
  s.replicas = j.value("replicas", 1);
  if (s.replicas < 1) throw SpecError("field 'replicas' must be >= 1");
  s.burnin = j.value("burnin", int64_t(-1));
  s.thin = j.value("thin", int64_t(-1));
  s.max_tries = j.value("max_tries", uint64_t(10000000));
  s.box_budget = j.value("box_budget", uint64_t(100000));
  s.eps_d = j.value("eps_d", 1.0);
  s.events_eps = j.value("events_eps", 0.05);
  s.h_quantile = j.value("h_quantile", 0.9);
  s.seed = j["seed"].get<uint64_t>();
  s.save_geodesics = j.value("save_geodesics", false);
  for (const json& m : j.value("masks", json::array())) {
    MaskSpec ms;
    ms.type = m.value("type", "cylinder");
    if (ms.type == "cylinder") {
      ms.eps = m.value("eps", 0.1);
      if (!(ms.eps > 0)) throw SpecError("field 'masks[].eps' must be > 0");
      if (m.contains("curve")) {
        std::string c = m["curve"].get<std::string>();
        if (c == "identity") ms.curve_name = c;
        else { ms.curve_name = "file"; ms.curve_file = c; }
      }
    } else if (ms.type == "strip") {
      ms.strip_i = m.value("i", 0);
      ms.strip_k = m.value("K", 1);
      if (ms.strip_k < 1) throw SpecError("field 'masks[].K' must be >= 1");
    } else {
      throw SpecError("field 'masks[].type' must be cylinder|strip");
    }
    s.masks.push_back(ms);
  }
  for (const json& c : j.value("curves", json::array())) {
    CurveSpec cs;
    cs.name = c.value("name", "identity");
    cs.file = c.value("file", "");
    if (cs.name != "identity" && cs.name != "batch-median" && cs.file.empty())
      throw SpecError("field 'curves[].name' must be identity|batch-median or give a file");
    if (!cs.file.empty() && !fs::exists(cs.file))
      throw SpecError("field 'curves[].file' does not exist: " + cs.file);
    s.curves.push_back(cs);
  }
  s.metrics = j.value("metrics", std::vector<std::string>{});
  // referenced files must exist up front
  json law = json::parse(s.law_json);
  if (law.value("name", "") == "tabulated") {
    std::string f = law.value("file", "");
    if (f.empty() || !fs::exists(f))
      throw SpecError("field 'law.file' does not exist: " + f);
  }
  for (const auto& m : s.masks)
    if (!m.curve_file.empty() && !fs::exists(m.curve_file))
      throw SpecError("field 'masks[].curve' file does not exist: " + m.curve_file);
  return s;
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec_json(ss.str());
}

LawPtr law_from_spec(const ExperimentSpec& spec) {
  json law = json::parse(spec.law_json);
  std::string name = law.value("name", "exp");
  if (name == "exp") return make_exp_law();
  if (name == "gamma") return make_gamma_law(law.value("k", 2.0));
  if (name == "half-normal")
    return make_half_normal_law(law.value("sigma", std::sqrt(3.141592653589793 / 2.0)));
  if (name == "expmix" || name == "uniform-positive-part")
    return make_expmix_law(law.value("w1", 0.5));
  if (name == "tabulated") {
    std::string cls = law.value("class", "other");
    LawClass lc = cls == "p1" ? LawClass::p1
                              : (cls == "p2" ? LawClass::p2 : LawClass::other);
    return make_tabulated_law(law.value("file", ""), lc);
  }
  throw SpecError("field 'law.name' unknown: " + name);
}

// ---- threshold resolution ----------------------------------------------

namespace {

// threshold failures produce a failure record, unlike invalid specs
struct ThresholdError : std::runtime_error {
  explicit ThresholdError(const std::string& m) : std::runtime_error(m) {}
};

struct Resolved {
  double c = kInf;
  bool conditioned = false;
  std::string note;
};

Resolved resolve_threshold(const ExperimentSpec& spec, const LawPtr& law) {
  Resolved r;
  RngKey key{spec.seed, 0xC0FFEE};
  const auto& t = spec.threshold;
  if (t.type == "none") {
    r.c = kInf;
    r.conditioned = false;
    r.note = "unconditioned";
    return r;
  }
  r.conditioned = true;
  if (t.type == "absolute") {
    if (!(t.value > 0)) throw SpecError("field 'threshold.value' must be > 0");
    r.c = t.value;
    r.note = "absolute";
    return r;
  }
  if (t.type == "delta") {
    double mu;
    if (spec.model == "poisson") {
      mu = 2.0;
    } else if (json::parse(spec.law_json).value("name", "exp") == "exp" &&
               spec.d == 2) {
      mu = 4.0;
    } else {
      // empirical per-unit passage constant
      double sum = 0;
      if (spec.model == "lattice") {
        GridPtr g = make_grid(spec.n, spec.d);
        for (int k = 0; k < t.mu_samples; ++k)
          sum += passage_value(
              sample_iid_field(g, *law, key, Stream::calib, 1000000 + k));
      }
      mu = sum / (t.mu_samples * spec.n);
    }
    if (!(t.value > 0 && t.value < mu))
      throw SpecError("field 'threshold.value' (delta) must lie in (0, mu)");
    r.c = (mu - t.value) * spec.n;
    r.note = "delta, mu=" + fmt_g17(mu);
    return r;
  }
  // quantile
  if (t.calib_samples < 1 || t.q * t.calib_samples < 1.0)
    throw ThresholdError("threshold quantile unobtainable within calib_samples budget");
  std::vector<double> vals;
  vals.reserve(t.calib_samples);
  if (spec.model == "lattice") {
    GridPtr g = make_grid(spec.n, spec.d);
    for (int64_t k = 0; k < t.calib_samples; ++k)
      vals.push_back(
          passage_value(sample_iid_field(g, *law, key, Stream::calib, k)));
  } else {
    for (int64_t k = 0; k < t.calib_samples; ++k) {
      SiteRng rng(key, Stream::calib, k, 0);
      vals.push_back(lis_all(sample_ppp(spec.n, 1.0, rng)));
    }
  }
  r.c = quantile_of(std::move(vals), t.q);
  if (!(r.c > 0))
    throw ThresholdError("threshold quantile resolved to a nonpositive value");
  r.note = "quantile q=" + fmt_g17(t.q);
  return r;
}

// ---- per-replica state -------------------------------------------------

struct ReplicaCkpt {
  int replica = 0;
  std::string status = "ok";  // ok | exhausted
  int64_t samples_done = 0;
  int64_t sweep_count = 0;
  int64_t move_count = 0;
  uint64_t tries_done = 0;
  int64_t domination_violations = 0;
  std::vector<double> field;       // lattice chain state (dm order)
  std::vector<double> free_field;  // coupled companion
  std::vector<Pt> points;          // poisson chain state
  std::vector<SampleRecord> records;
  std::vector<std::vector<std::array<int, 3>>> witnesses;  // poisson (i,bx,by)
};

json ckpt_to_json(const ReplicaCkpt& c, uint64_t spec_hash) {
  json j;
  j["version"] = LPTAIL_VERSION;
  char hb[24];
  std::snprintf(hb, sizeof hb, "%016llx", (unsigned long long)spec_hash);
  j["spec_hash"] = hb;
  j["replica"] = c.replica;
  j["status"] = c.status;
  j["samples_done"] = c.samples_done;
  j["sweep_count"] = c.sweep_count;
  j["move_count"] = c.move_count;
  j["tries_done"] = c.tries_done;
  j["domination_violations"] = c.domination_violations;
  auto hexvec = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(hex_of(x));
    return a;
  };
  j["field"] = hexvec(c.field);
  j["free_field"] = hexvec(c.free_field);
  json pts = json::array();
  for (const auto& p : c.points)
    pts.push_back(json::array({hex_of(p.x), hex_of(p.y)}));
  j["points"] = pts;
  json rows = json::array();
  for (size_t k = 0; k < c.records.size(); ++k) {
    const auto& r = c.records[k];
    json row;
    row["replica"] = r.replica;
    row["sweep"] = r.sweep;
    row["passage"] = hex_of(r.passage);
    row["mass"] = hex_of(r.mass);
    row["events_b"] = r.events_b;
    row["events_m"] = r.events_m;
    row["restricted"] = hexvec(r.restricted);
    row["heights"] = r.geo_heights;
    if (k < c.witnesses.size()) {
      json w = json::array();
      for (const auto& b : c.witnesses[k])
        w.push_back(json::array({b[0], b[1], b[2]}));
      row["witnesses"] = w;
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

ReplicaCkpt ckpt_from_json(const json& j, uint64_t spec_hash) {
  std::string ver = j.value("version", "");
  if (ver != LPTAIL_VERSION)
    throw SpecError("checkpoint version mismatch: record has " + ver +
                    ", this build is " LPTAIL_VERSION);
  char hb[24];
  std::snprintf(hb, sizeof hb, "%016llx", (unsigned long long)spec_hash);
  if (j.value("spec_hash", "") != hb)
    throw SpecError("checkpoint spec hash mismatch: spec was altered");
  ReplicaCkpt c;
  c.replica = j["replica"].get<int>();
  c.status = j.value("status", "ok");
  c.samples_done = j["samples_done"].get<int64_t>();
  c.sweep_count = j["sweep_count"].get<int64_t>();
  c.move_count = j["move_count"].get<int64_t>();
  c.tries_done = j["tries_done"].get<uint64_t>();
  c.domination_violations = j.value("domination_violations", int64_t(0));
  for (const auto& h : j["field"]) c.field.push_back(double_of_hex(h));
  for (const auto& h : j["free_field"])
    c.free_field.push_back(double_of_hex(h));
  for (const auto& p : j["points"])
    c.points.push_back({double_of_hex(p[0]), double_of_hex(p[1])});
  for (const auto& row : j["rows"]) {
    SampleRecord r;
    r.replica = row["replica"].get<int>();
    r.sweep = row["sweep"].get<int64_t>();
    r.passage = double_of_hex(row["passage"]);
    r.mass = double_of_hex(row["mass"]);
    r.events_b = row["events_b"].get<int>();
    r.events_m = row["events_m"].get<int>();
    for (const auto& h : row["restricted"])
      r.restricted.push_back(double_of_hex(h));
    for (const auto& h : row["heights"]) r.geo_heights.push_back(h.get<int>());
    c.records.push_back(std::move(r));
    std::vector<std::array<int, 3>> w;
    if (row.contains("witnesses"))
      for (const auto& b : row["witnesses"])
        w.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<int>()});
    c.witnesses.push_back(std::move(w));
  }
  return c;
}

// ---- lattice replica runner ----------------------------------------------

struct RunContext {
  ExperimentSpec spec;
  LawPtr law;
  double c = kInf;
  bool conditioned = false;
  GridPtr grid;                      // lattice
  std::vector<RegionMask> masks;     // lattice restricted-passage masks
  std::vector<double> mask_eps;      // eps' for cylinder masks (0 for strips)
  int64_t burnin = 0;
  int64_t thin = 1;
};

MonotoneCurve curve_of(const MaskSpec& m) {
  if (m.curve_name == "identity") return MonotoneCurve::identity();
  return MonotoneCurve::from_file(m.curve_file);
}

RunContext make_context(const ExperimentSpec& spec, const LawPtr& law,
                        double c, bool conditioned) {
  RunContext ctx;
  ctx.spec = spec;
  ctx.law = law;
  ctx.c = c;
  ctx.conditioned = conditioned;
  ctx.burnin = spec.burnin >= 0 ? spec.burnin : 50LL * spec.n;
  ctx.thin = spec.thin >= 0 ? std::max<int64_t>(1, spec.thin) : spec.n;
  if (spec.model == "lattice") {
    ctx.grid = make_grid(spec.n, spec.d);
    for (const auto& m : spec.masks) {
      if (m.type == "cylinder") {
        ctx.masks.push_back(cylinder(curve_of(m), m.eps, ctx.grid));
        ctx.mask_eps.push_back(m.eps);
      } else {
        ctx.masks.push_back(strip(ctx.grid, m.strip_i, m.strip_k));
        ctx.mask_eps.push_back(0.0);
      }
    }
  }
  return ctx;
}

int count_events_b(const WeightField& f, double law_mean, double eps) {
  const GridSpec& g = *f.grid;
  if (g.d != 2) return 0;
  int cnt = 0;
  for (DiagonalIndex i : central_indices(g, eps)) {
    double sum = 0;
    for (int64_t dm = g.diag_offset[i]; dm < g.diag_offset[i + 1]; ++dm)
      sum += f.w[dm];
    if (sum <= (1 - 2 * eps) * law_mean * g.diag_size(i)) ++cnt;
  }
  return cnt;
}

int count_events_m(const WeightField& f, const PassageTables& t, double c,
                   double eps) {
  const GridSpec& g = *f.grid;
  if (g.d != 2 || std::isinf(c)) return 0;
  const double M = solve_M(eps);
  int cnt = 0;
  for (DiagonalIndex i : central_indices(g, eps)) {
    auto slack = slack_field(f, t, c, i);
    int64_t small = 0;
    for (double r : slack)
      if (r <= M) ++small;
    if (small >= eps * g.diag_size(i) / 2.0) ++cnt;
  }
  return cnt;
}

SampleRecord record_lattice_sample(const RunContext& ctx, const WeightField& f,
                                   const PassageTables& t, int replica,
                                   int64_t sweep) {
  SampleRecord r;
  r.replica = replica;
  r.sweep = sweep;
  r.passage = t.fwd[f.grid->corner_dm()];
  r.mass = f.total_mass();
  if (f.grid->d == 2) r.geo_heights = geodesic_heights(geodesic(f, t), *f.grid);
  for (const auto& m : ctx.masks)
    r.restricted.push_back(restricted_passage(f, m).value);
  if (f.grid->d == 2 && ctx.spec.events_eps > 0 &&
      ctx.spec.events_eps < 1.0 / 16) {
    r.events_b = count_events_b(f, ctx.law->mean(), ctx.spec.events_eps);
    r.events_m = ctx.conditioned
                     ? count_events_m(f, t, ctx.c, ctx.spec.events_eps)
                     : 0;
  }
  return r;
}

void run_replica_lattice(const RunContext& ctx, ReplicaCkpt& ck) {
  const ExperimentSpec& spec = ctx.spec;
  RngKey key{spec.seed, static_cast<uint64_t>(ck.replica)};
  const int64_t target = spec.samples;

  if (spec.sampler == "rejection") {
    while (ck.samples_done < target) {
      uint64_t left = spec.max_tries > ck.tries_done
                          ? spec.max_tries - ck.tries_done
                          : 0;
      if (left == 0) { ck.status = "exhausted"; return; }
      auto res = rejection_oracle(ctx.grid, ctx.law, ctx.c, left, key,
                                  ck.tries_done);
      ck.tries_done += res.tries;
      if (!res.field) { ck.status = "exhausted"; return; }
      PassageTables t = full_tables(*res.field);
      ck.records.push_back(record_lattice_sample(
          ctx, *res.field, t, ck.replica,
          static_cast<int64_t>(ck.tries_done)));
      ++ck.samples_done;
    }
    return;
  }

  // gibbs / coupled: restore or initialize the chain
  GibbsState st;
  WeightField free_field;
  if (ck.field.empty()) {
    WeightField f0 = sample_iid_field(ctx.grid, *ctx.law, key, Stream::init, 0);
    if (std::isinf(ctx.c)) {
      st.field = f0;
      st.c = kInf;
      st.law = ctx.law;
      st.key = key;
      st.tables = full_tables(st.field);
    } else {
      st = init_state(f0, ctx.c, ctx.law, key);
    }
    free_field = st.field;
  } else {
    st.field = make_field(ctx.grid);
    st.field.w = ck.field;
    st.c = ctx.c;
    st.law = ctx.law;
    st.key = key;
    st.sweep_count = ck.sweep_count;
    st.move_count = ck.move_count;
    st.tables = full_tables(st.field);
    free_field = make_field(ctx.grid);
    if (!ck.free_field.empty()) free_field.w = ck.free_field;
  }

  const bool coupled = spec.sampler == "coupled";
  CoupledState cs;
  if (coupled) {
    cs = make_coupled(std::move(st));
    cs.free_field = free_field;
  }

  auto do_sweep = [&]() {
    if (coupled) {
      coupled_sweep(cs);
      for (int64_t dm = 0; dm < ctx.grid->vertex_count; ++dm)
        if (cs.star.field.w[dm] > cs.free_field.w[dm])
          ++ck.domination_violations;
    } else {
      gibbs_sweep(st);
    }
  };
  GibbsState& chain = coupled ? cs.star : st;

  while (chain.sweep_count < ctx.burnin && ck.samples_done == 0)
    do_sweep();
  while (ck.samples_done < target) {
    int64_t next_at = ctx.burnin + (ck.samples_done + 1) * ctx.thin;
    while (chain.sweep_count < next_at) do_sweep();
    ck.records.push_back(record_lattice_sample(ctx, chain.field, chain.tables,
                                               ck.replica, chain.sweep_count));
    ++ck.samples_done;
  }
  ck.sweep_count = chain.sweep_count;
  ck.move_count = chain.move_count;
  ck.field = chain.field.w;
  if (coupled) ck.free_field = cs.free_field.w;
}

// ---- poisson replica runner ------------------------------------------------

void run_replica_poisson(const RunContext& ctx, ReplicaCkpt& ck) {
  const ExperimentSpec& spec = ctx.spec;
  RngKey key{spec.seed, static_cast<uint64_t>(ck.replica)};
  const int64_t target = spec.samples;
  const int c_int = static_cast<int>(std::floor(ctx.c));

  auto record_sample = [&](const PointConfig& cfg, int64_t round) {
    SampleRecord r;
    r.replica = ck.replica;
    r.sweep = round;
    r.passage = lis_all(cfg);
    r.mass = static_cast<double>(cfg.count());
    std::vector<std::array<int, 3>> wit;
    if (ctx.conditioned) {
      auto rep = saturation_stats(cfg, ctx.c, spec.eps_d, spec.events_eps);
      int sat = 0, zero = 0;
      for (const auto& d : rep.diagonals) {
        if (d.saturated) ++sat;
        zero += d.zero_slack_boxes;
      }
      r.events_b = zero;  // zero-slack box count
      r.events_m = sat;   // saturated diagonal count
      for (const auto& [bx, by] : rep.zero_boxes)
        wit.push_back({bx + by, bx, by});
    }
    ck.records.push_back(std::move(r));
    ck.witnesses.push_back(std::move(wit));
  };

  if (spec.sampler == "rejection") {
    while (ck.samples_done < target) {
      uint64_t left = spec.max_tries > ck.tries_done
                          ? spec.max_tries - ck.tries_done
                          : 0;
      if (left == 0) { ck.status = "exhausted"; return; }
      auto res = poisson_rejection_conditional(spec.n, ctx.c, left, key,
                                               ck.tries_done);
      ck.tries_done += res.tries;
      if (!res.config) { ck.status = "exhausted"; return; }
      record_sample(*res.config, static_cast<int64_t>(ck.tries_done));
      ++ck.samples_done;
    }
    return;
  }

  // box_gibbs: an empty configuration is always feasible
  BoxGrid grid = make_box_grid(spec.n, spec.eps_d);
  PointConfig cfg;
  if (ck.points.empty() && ck.sweep_count == 0) {
    cfg = make_config(spec.n, {});
  } else {
    cfg = make_config(spec.n, ck.points);
  }
  int64_t round = ck.sweep_count;
  while (round < ctx.burnin && ck.samples_done == 0) {
    poisson_gibbs_sweep(cfg, grid, c_int, spec.box_budget, key, round);
    ++round;
  }
  while (ck.samples_done < target) {
    int64_t next_at = ctx.burnin + (ck.samples_done + 1) * ctx.thin;
    while (round < next_at) {
      poisson_gibbs_sweep(cfg, grid, c_int, spec.box_budget, key, round);
      ++round;
    }
    record_sample(cfg, round);
    ++ck.samples_done;
  }
  ck.sweep_count = round;
  ck.points = cfg.pts;
}

// ---- record emission -------------------------------------------------------

std::string samples_csv(const RunContext& ctx,
                        const std::vector<ReplicaCkpt>& cks) {
  std::ostringstream os;
  if (ctx.spec.model == "lattice") {
    os << "replica,sweep,passage,mass,events_b,events_m";
    for (size_t j = 0; j < ctx.masks.size(); ++j) os << ",restricted_" << j;
    os << "\n";
    for (const auto& ck : cks)
      for (const auto& r : ck.records) {
        os << r.replica << "," << r.sweep << "," << fmt_g17(r.passage) << ","
           << fmt_g17(r.mass) << "," << r.events_b << "," << r.events_m;
        for (double v : r.restricted) os << "," << fmt_g17(v);
        os << "\n";
      }
  } else {
    os << "replica,round,count,lis,gap,zero_slack_boxes,saturated_diagonals\n";
    for (const auto& ck : cks)
      for (const auto& r : ck.records) {
        double gap = std::isinf(ctx.c) ? 0.0 : std::floor(ctx.c) - r.passage;
        os << r.replica << "," << r.sweep << "," << int64_t(r.mass) << ","
           << int64_t(r.passage) << "," << fmt_g17(gap) << "," << r.events_b
           << "," << r.events_m << "\n";
      }
  }
  return os.str();
}

std::string boxes_csv(const std::vector<ReplicaCkpt>& cks) {
  std::ostringstream os;
  os << "replica,round,diag,bx,by\n";
  for (const auto& ck : cks)
    for (size_t k = 0; k < ck.records.size(); ++k)
      if (k < ck.witnesses.size())
        for (const auto& w : ck.witnesses[k])
          os << ck.records[k].replica << "," << ck.records[k].sweep << ","
             << w[0] << "," << w[1] << "," << w[2] << "\n";
  return os.str();
}

std::string geodesics_csv(const RunContext& ctx,
                          const std::vector<ReplicaCkpt>& cks) {
  std::ostringstream os;
  os << "replica,sweep,x,height\n";
  for (const auto& ck : cks)
    for (const auto& r : ck.records)
      for (size_t x = 0; x < r.geo_heights.size(); ++x)
        os << r.replica << "," << r.sweep << "," << x << ","
           << r.geo_heights[x] << "\n";
  return os.str();
}

SampleBatch assemble_batch(const RunContext& ctx,
                           const std::vector<ReplicaCkpt>& cks) {
  SampleBatch b;
  b.model = ctx.spec.model;
  b.n = ctx.spec.n;
  b.d = ctx.spec.d;
  b.law_name = json::parse(ctx.spec.law_json).value("name", "exp");
  b.law_mean = ctx.spec.model == "lattice" ? law_from_spec(ctx.spec)->mean() : 1.0;
  b.c = ctx.c;
  b.conditioned = ctx.conditioned;
  b.sampler = ctx.spec.sampler;
  b.seed = ctx.spec.seed;
  for (const auto& ck : cks)
    for (const auto& r : ck.records) b.records.push_back(r);
  if (ctx.spec.model == "lattice" && ctx.spec.d == 2 && ctx.grid) {
    b.occupancy.assign(ctx.grid->vertex_count, 0);
    const int n = ctx.spec.n;
    for (const auto& r : b.records) {
      int prev = 0;
      for (int x = 0; x <= n; ++x) {
        for (int y = prev; y <= r.geo_heights[x]; ++y)
          ++b.occupancy[ctx.grid->dm_of_rm[int64_t(x) * (n + 1) + y]];
        prev = r.geo_heights[x];
      }
    }
  }
  return b;
}

std::string estimates_csv(const RunContext& ctx, const SampleBatch& batch) {
  std::ostringstream os;
  os << "metric,param,value,stderr,count\n";
  auto put = [&](const std::string& metric, const std::string& param,
                 double value, double se, int64_t count) {
    os << metric << "," << param << "," << fmt_g17(value) << "," << fmt_g17(se)
       << "," << count << "\n";
  };
  auto want = [&](const std::string& m) {
    return std::find(ctx.spec.metrics.begin(), ctx.spec.metrics.end(), m) !=
           ctx.spec.metrics.end();
  };
  if (batch.records.empty()) return os.str();

  if (want("mass_deficit") || ctx.spec.metrics.empty()) {
    Summary s = mass_deficit(batch);
    put("mass_ratio", "mean", s.mean, s.stderr_mean, s.count);
    put("mass_ratio", "median", s.median, 0, s.count);
  }
  if (ctx.conditioned && (want("concentration") || ctx.spec.metrics.empty())) {
    auto v = concentration_statistic(batch);
    Summary s = summarize(v);
    put("concentration", "median", s.median, 0, s.count);
    put("concentration", "mean", s.mean, s.stderr_mean, s.count);
    put("concentration", "q95", s.q95, 0, s.count);
  }
  if (batch.model == "lattice" && batch.d == 2 && want("containment")) {
    for (const auto& cs : ctx.spec.curves) {
      MonotoneCurve curve = MonotoneCurve::identity();
      std::string label = cs.name;
      if (cs.name == "batch-median") curve = batch_median_curve(batch);
      else if (!cs.file.empty()) curve = MonotoneCurve::from_file(cs.file);
      for (size_t j = 0; j < ctx.masks.size(); ++j) {
        if (ctx.mask_eps[j] <= 0) continue;
        auto e = containment_probability(batch, curve, ctx.mask_eps[j]);
        put("containment", label + "@" + fmt_g17(ctx.mask_eps[j]), e.value,
            e.stderr_value, e.count);
      }
    }
  }
  if (batch.model == "lattice" && ctx.conditioned && want("anticoncentration") &&
      !ctx.masks.empty()) {
    double H = quantile_of(concentration_statistic(batch), ctx.spec.h_quantile);
    auto rows = anticoncentration_curve(batch, ctx.masks, ctx.mask_eps, H);
    put("anticoncentration", "H", H, 0, batch.records.size());
    for (const auto& row : rows)
      put("anticoncentration", "eps=" + fmt_g17(row.eps_prime), row.prob.value,
          row.prob.stderr_value, row.prob.count);
  }
  if (want("events")) {
    std::vector<double> eb, em;
    for (const auto& r : batch.records) {
      eb.push_back(r.events_b);
      em.push_back(r.events_m);
    }
    Summary sb = summarize(eb), sm = summarize(em);
    put("events_b", "mean", sb.mean, sb.stderr_mean, sb.count);
    put("events_m", "mean", sm.mean, sm.stderr_mean, sm.count);
  }
  return os.str();
}

std::string verdicts_csv(const RunContext& ctx, const SampleBatch& batch,
                         const std::vector<ReplicaCkpt>& cks) {
  std::ostringstream os;
  os << "check,observed,bound,verdict\n";
  if (!batch.records.empty() && ctx.conditioned) {
    double worst = -kInf;
    for (const auto& r : batch.records) worst = std::max(worst, r.passage);
    double tol = 1e-9 * std::max(1.0, std::abs(ctx.c));
    os << "feasibility_max_passage," << fmt_g17(worst) << ","
       << fmt_g17(ctx.c + tol) << "," << (worst <= ctx.c + tol ? "PASS" : "FAIL")
       << "\n";
  }
  if (ctx.spec.sampler == "coupled") {
    int64_t viol = 0;
    for (const auto& ck : cks) viol += ck.domination_violations;
    os << "coupling_domination_violations," << viol << ",0,"
       << (viol == 0 ? "PASS" : "FAIL") << "\n";
  }
  for (const auto& ck : cks)
    if (ck.status != "ok")
      os << "replica_" << ck.replica << "_status," << ck.status << ",ok,FAIL\n";
  return os.str();
}

void write_record(const fs::path& dir, const RunContext& ctx,
                  const std::vector<ReplicaCkpt>& cks,
                  const std::string& status, const std::string& message,
                  double wall_seconds) {
  fs::create_directories(dir / "checkpoints");
  json echo = json::parse(ctx.spec.canonical_json());
  echo["resolved_c"] = fmt_g17(ctx.c);
  echo["resolved_c_hex"] = hex_of(ctx.c);
  echo["conditioned"] = ctx.conditioned;
  echo["version"] = LPTAIL_VERSION;
  char hb[24];
  std::snprintf(hb, sizeof hb, "%016llx",
                (unsigned long long)ctx.spec.spec_hash());
  echo["spec_hash"] = hb;
  write_file(dir / "spec_echo.json", echo.dump(2) + "\n");
  for (const auto& ck : cks)
    write_file(dir / "checkpoints" /
                   ("replica_" + std::to_string(ck.replica) + ".json"),
               ckpt_to_json(ck, ctx.spec.spec_hash()).dump() + "\n");
  write_file(dir / "status.txt", status + "\n" + message + "\n");
  // wall clock lives outside the deterministic tables
  json runinfo;
  runinfo["wall_seconds"] = wall_seconds;
  write_file(dir / "runinfo.json", runinfo.dump(2) + "\n");
  if (status == "partial") return;

  write_file(dir / "samples.csv", samples_csv(ctx, cks));
  SampleBatch batch = assemble_batch(ctx, cks);
  write_file(dir / "estimates.csv", estimates_csv(ctx, batch));
  write_file(dir / "verdicts.csv", verdicts_csv(ctx, batch, cks));
  if (ctx.spec.model == "poisson")
    write_file(dir / "boxes.csv", boxes_csv(cks));
  if (ctx.spec.save_geodesics && ctx.spec.model == "lattice")
    write_file(dir / "geodesics.csv", geodesics_csv(ctx, cks));
  auto want = [&](const std::string& m) {
    return std::find(ctx.spec.metrics.begin(), ctx.spec.metrics.end(), m) !=
           ctx.spec.metrics.end();
  };
  if (ctx.spec.model == "lattice" && ctx.spec.d == 2 && want("heatmap"))
    write_file(dir / "heatmap.svg", occupancy_svg(batch));
}

void run_replicas(const RunContext& ctx, std::vector<ReplicaCkpt>& cks,
                  int threads, int64_t stop_after) {
  auto worker = [&](ReplicaCkpt& ck) {
    int64_t target = ctx.spec.samples;
    if (stop_after >= 0) target = std::min<int64_t>(target, stop_after);
    if (ck.samples_done >= target || ck.status != "ok") return;
    RunContext sub = ctx;
    sub.spec.samples = target;
    if (ctx.spec.model == "lattice") run_replica_lattice(sub, ck);
    else run_replica_poisson(sub, ck);
  };
  if (threads <= 1 || cks.size() == 1) {
    for (auto& ck : cks) worker(ck);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<size_t> next{0};
  const int nthreads = std::min<int>(threads, static_cast<int>(cks.size()));
  for (int t = 0; t < nthreads; ++t)
    pool.emplace_back([&]() {
      for (;;) {
        size_t k = next.fetch_add(1);
        if (k >= cks.size()) return;
        worker(cks[k]);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace

RunResult run_experiment(const ExperimentSpec& spec_in, const RunOptions& opts) {
  ExperimentSpec spec = spec_in;
  if (opts.seed_override) spec.seed = *opts.seed_override;
  if (opts.out_dir.empty()) throw SpecError("run: output directory required");
  auto t0 = std::chrono::steady_clock::now();

  RunResult result;
  result.record_dir = opts.out_dir;
  LawPtr law = law_from_spec(spec);

  Resolved res;
  try {
    res = resolve_threshold(spec, law);
  } catch (const ThresholdError& e) {
    fs::create_directories(opts.out_dir);
    write_file(fs::path(opts.out_dir) / "status.txt",
               std::string("infeasible-threshold\n") + e.what() + "\n");
    result.status = "infeasible-threshold";
    result.message = e.what();
    return result;
  }
  RunContext ctx = make_context(spec, law, res.c, res.conditioned);
  result.resolved_c = res.c;

  std::vector<ReplicaCkpt> cks(spec.replicas);
  for (int r = 0; r < spec.replicas; ++r) cks[r].replica = r;
  run_replicas(ctx, cks, opts.threads, opts.stop_after_samples);

  std::string status = "ok";
  for (const auto& ck : cks)
    if (ck.status == "exhausted") status = "exhausted";
  if (opts.stop_after_samples >= 0 &&
      opts.stop_after_samples < spec.samples && status == "ok")
    status = "partial";
  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0).count();
  write_record(opts.out_dir, ctx, cks, status,
               status == "ok" ? "" : "see checkpoints", wall);
  result.status = status;
  return result;
}

RunResult resume_experiment(const std::string& record_dir, int threads) {
  auto t0 = std::chrono::steady_clock::now();
  json echo = load_json_file((fs::path(record_dir) / "spec_echo.json").string());
  std::string ver = echo.value("version", "");
  if (ver != LPTAIL_VERSION)
    throw SpecError("record version mismatch: record has " + ver +
                    ", this build is " LPTAIL_VERSION);
  json spec_json = echo;
  spec_json.erase("resolved_c");
  spec_json.erase("resolved_c_hex");
  spec_json.erase("conditioned");
  spec_json.erase("version");
  spec_json.erase("spec_hash");
  ExperimentSpec spec = parse_spec_json(spec_json.dump());
  LawPtr law = law_from_spec(spec);
  double c = double_of_hex(echo["resolved_c_hex"].get<std::string>());
  bool conditioned = echo["conditioned"].get<bool>();
  RunContext ctx = make_context(spec, law, c, conditioned);

  std::vector<ReplicaCkpt> cks(spec.replicas);
  for (int r = 0; r < spec.replicas; ++r) {
    fs::path p = fs::path(record_dir) / "checkpoints" /
                 ("replica_" + std::to_string(r) + ".json");
    if (fs::exists(p)) {
      cks[r] = ckpt_from_json(load_json_file(p.string()), spec.spec_hash());
      if (cks[r].replica != r)
        throw SpecError("checkpoint replica index mismatch");
    } else {
      cks[r].replica = r;
    }
  }
  run_replicas(ctx, cks, threads, -1);
  std::string status = "ok";
  for (const auto& ck : cks)
    if (ck.status == "exhausted") status = "exhausted";
  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0).count();
  write_record(record_dir, ctx, cks, status,
               status == "ok" ? "" : "see checkpoints", wall);
  RunResult result;
  result.record_dir = record_dir;
  result.status = status;
  result.resolved_c = c;
  return result;
}

SampleBatch load_record_batch(const std::string& record_dir) {
  json echo = load_json_file((fs::path(record_dir) / "spec_echo.json").string());
  json spec_json = echo;
  spec_json.erase("resolved_c");
  spec_json.erase("resolved_c_hex");
  spec_json.erase("conditioned");
  spec_json.erase("version");
  spec_json.erase("spec_hash");
  ExperimentSpec spec = parse_spec_json(spec_json.dump());
  LawPtr law = law_from_spec(spec);
  double c = double_of_hex(echo["resolved_c_hex"].get<std::string>());
  RunContext ctx = make_context(spec, law, c, echo["conditioned"].get<bool>());
  std::vector<ReplicaCkpt> cks;
  for (int r = 0; r < spec.replicas; ++r) {
    fs::path p = fs::path(record_dir) / "checkpoints" /
                 ("replica_" + std::to_string(r) + ".json");
    if (fs::exists(p))
      cks.push_back(ckpt_from_json(load_json_file(p.string()), spec.spec_hash()));
  }
  return assemble_batch(ctx, cks);
}

std::string report_text(const std::string& record_dir) {
  std::ostringstream os;
  fs::path dir(record_dir);
  json echo = load_json_file((dir / "spec_echo.json").string());
  os << "record: " << record_dir << "\n";
  os << "model=" << echo["model"].get<std::string>() << " n=" << echo["n"]
     << " sampler=" << echo["sampler"].get<std::string>()
     << " seed=" << echo["seed"] << "\n";
  os << "threshold c=" << echo.value("resolved_c", std::string("?"))
     << (echo.value("conditioned", false) ? " (conditioned)" : " (unconditioned)")
     << "\n";
  std::ifstream st(dir / "status.txt");
  std::string status;
  std::getline(st, status);
  os << "status: " << status << "\n";
  for (const char* name : {"estimates.csv", "verdicts.csv"}) {
    fs::path p = dir / name;
    if (!fs::exists(p)) continue;
    os << "\n[" << name << "]\n";
    std::ifstream in(p);
    os << in.rdbuf();
  }
  return os.str();
}

double bench_sweep_rate(const ExperimentSpec& spec, double seconds_budget) {
  LawPtr law = law_from_spec(spec);
  GridPtr grid = make_grid(spec.n, spec.d);
  RngKey key{spec.seed, 0};
  WeightField f0 = sample_iid_field(grid, *law, key, Stream::bench, 0);
  double c = 0.75 * passage_value(f0) + 1.0;
  GibbsState st = init_state(f0, c, law, key);
  auto t0 = std::chrono::steady_clock::now();
  int64_t sweeps = 0;
  for (;;) {
    gibbs_sweep(st);
    ++sweeps;
    double dt = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0).count();
    if (dt >= seconds_budget) return sweeps / dt;
  }
}

}  // namespace lptail
