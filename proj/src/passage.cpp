#include "lptail/passage.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace lptail {

PassageTables make_tables(GridPtr grid) {
  PassageTables t;
  t.grid = std::move(grid);
  t.fwd.assign(t.grid->vertex_count, 0.0);
  t.bwd.assign(t.grid->vertex_count, 0.0);
  t.fwd_mark = -1;
  t.bwd_mark = t.grid->diag_count;
  return t;
}

double fwd_in_max(const PassageTables& t, int64_t dm) {
  const GridSpec& g = *t.grid;
  int64_t rm = g.rm_of_dm[dm];
  double best = 0.0;
  bool any = false;
  int64_t r = rm;
  for (int j = 0; j < g.d; ++j) {
    int64_t cj = r / g.stride[j];
    r %= g.stride[j];
    if (cj > 0) {
      double v = t.fwd[g.dm_of_rm[rm - g.stride[j]]];
      if (!any || v > best) { best = v; any = true; }
    }
  }
  return any ? best : 0.0;
}

double bwd_out_max(const PassageTables& t, int64_t dm) {
  const GridSpec& g = *t.grid;
  int64_t rm = g.rm_of_dm[dm];
  double best = 0.0;
  bool any = false;
  int64_t r = rm;
  for (int j = 0; j < g.d; ++j) {
    int64_t cj = r / g.stride[j];
    r %= g.stride[j];
    if (cj < g.n) {
      double v = t.bwd[g.dm_of_rm[rm + g.stride[j]]];
      if (!any || v > best) { best = v; any = true; }
    }
  }
  return any ? best : 0.0;
}

void advance_forward(PassageTables& t, const WeightField& f, DiagonalIndex i) {
  const GridSpec& g = *t.grid;
  if (i < 0 || i >= g.diag_count)
    throw std::out_of_range("advance_forward: diagonal out of range");
  if (t.fwd_mark != i - 1)
    throw std::logic_error("advance_forward: watermark not adjacent");
  for (int64_t dm = g.diag_offset[i]; dm < g.diag_offset[i + 1]; ++dm)
    t.fwd[dm] = f.w[dm] + fwd_in_max(t, dm);
  t.fwd_mark = i;
}

void retreat_backward(PassageTables& t, const WeightField& f, DiagonalIndex i) {
  const GridSpec& g = *t.grid;
  if (i < 0 || i >= g.diag_count)
    throw std::out_of_range("retreat_backward: diagonal out of range");
  if (t.bwd_mark != i + 1)
    throw std::logic_error("retreat_backward: watermark not adjacent");
  for (int64_t dm = g.diag_offset[i]; dm < g.diag_offset[i + 1]; ++dm)
    t.bwd[dm] = f.w[dm] + bwd_out_max(t, dm);
  t.bwd_mark = i;
}

void forward_table(PassageTables& t, const WeightField& f) {
  t.fwd_mark = -1;
  for (int i = 0; i < t.grid->diag_count; ++i) advance_forward(t, f, i);
}

void backward_table(PassageTables& t, const WeightField& f) {
  t.bwd_mark = t.grid->diag_count;
  for (int i = t.grid->diag_count - 1; i >= 0; --i) retreat_backward(t, f, i);
}

PassageTables full_tables(const WeightField& f) {
  PassageTables t = make_tables(f.grid);
  forward_table(t, f);
  backward_table(t, f);
  return t;
}

double passage_value(const WeightField& f) {
  PassageTables t = make_tables(f.grid);
  forward_table(t, f);
  return t.fwd[f.grid->corner_dm()];
}

std::vector<std::vector<int>> Geodesic::coords(const GridSpec& grid) const {
  std::vector<std::vector<int>> out;
  out.reserve(dm.size());
  for (int64_t r : dm) out.push_back(grid.coords_of_dm(r));
  return out;
}

double Geodesic::weight(const WeightField& f) const {
  double s = 0.0;
  for (int64_t r : dm) s += f.w[r];
  return s;
}

Geodesic geodesic(const WeightField& f, const PassageTables& t) {
  const GridSpec& g = *f.grid;
  if (!t.fwd_full()) throw std::logic_error("geodesic: forward table invalid");
  Geodesic path;
  path.dm.resize(g.d * g.n + 1);
  int64_t rm = g.rm_of_dm[g.corner_dm()];
  int pos = g.d * g.n;
  path.dm[pos] = g.corner_dm();
  while (pos > 0) {
    // among maximal in-neighbors pick the largest coordinate index to
    // decrement, which orders tied steps lowest-coordinate-first along the
    // path itself
    int best_j = -1;
    double best = 0.0;
    int64_t r = rm;
    std::vector<int64_t> cj(g.d);
    for (int j = 0; j < g.d; ++j) {
      cj[j] = r / g.stride[j];
      r %= g.stride[j];
    }
    for (int j = g.d - 1; j >= 0; --j) {
      if (cj[j] > 0) {
        double v = t.fwd[g.dm_of_rm[rm - g.stride[j]]];
        if (best_j < 0 || v > best) { best = v; best_j = j; }
      }
    }
    rm -= g.stride[best_j];
    path.dm[--pos] = g.dm_of_rm[rm];
  }
  return path;
}

std::string geodesic_to_csv(const Geodesic& g, const GridSpec& grid) {
  std::ostringstream os;
  for (int64_t r : g.dm) {
    auto c = grid.coords_of_dm(r);
    for (int j = 0; j < grid.d; ++j) os << (j ? "," : "") << c[j];
    os << "\n";
  }
  return os.str();
}

RestrictedResult restricted_passage(const WeightField& f, const RegionMask& A,
                                    bool want_path) {
  const GridSpec& g = *f.grid;
  RestrictedResult res;
  if (!A.contains_dm(g.origin_dm()) || !A.contains_dm(g.corner_dm()))
    return res;
  std::vector<double> val(g.vertex_count, kNoPath);
  val[g.origin_dm()] = f.w[g.origin_dm()];
  for (int i = 1; i < g.diag_count; ++i) {
    for (int64_t dm = g.diag_offset[i]; dm < g.diag_offset[i + 1]; ++dm) {
      if (!A.bits[dm]) continue;
      int64_t rm = g.rm_of_dm[dm];
      double best = kNoPath;
      int64_t r = rm;
      for (int j = 0; j < g.d; ++j) {
        int64_t cj = r / g.stride[j];
        r %= g.stride[j];
        if (cj > 0) best = std::max(best, val[g.dm_of_rm[rm - g.stride[j]]]);
      }
      val[dm] = (best == kNoPath) ? kNoPath : best + f.w[dm];
    }
  }
  res.value = val[g.corner_dm()];
  if (res.value == kNoPath) return res;
  if (want_path) {
    Geodesic path;
    path.dm.resize(g.d * g.n + 1);
    int64_t rm = g.rm_of_dm[g.corner_dm()];
    int pos = g.d * g.n;
    path.dm[pos] = g.corner_dm();
    while (pos > 0) {
      int best_j = -1;
      double best = kNoPath;
      int64_t r = rm;
      std::vector<int64_t> cj(g.d);
      for (int j = 0; j < g.d; ++j) {
        cj[j] = r / g.stride[j];
        r %= g.stride[j];
      }
      for (int j = g.d - 1; j >= 0; --j) {
        if (cj[j] > 0) {
          double v = val[g.dm_of_rm[rm - g.stride[j]]];
          if (v > best) { best = v; best_j = j; }
        }
      }
      rm -= g.stride[best_j];
      path.dm[--pos] = g.dm_of_rm[rm];
    }
    res.path = std::move(path);
  }
  return res;
}

double best_path_within(const WeightField& f, const RegionMask& A) {
  const GridSpec& g = *f.grid;
  if (A.count == 0) return 0.0;
  std::vector<double> val(g.vertex_count, kNoPath);
  double best_overall = 0.0;
  for (int i = 0; i < g.diag_count; ++i) {
    for (int64_t dm = g.diag_offset[i]; dm < g.diag_offset[i + 1]; ++dm) {
      if (!A.bits[dm]) continue;
      int64_t rm = g.rm_of_dm[dm];
      double best = 0.0;  // a path may start anywhere inside A
      int64_t r = rm;
      for (int j = 0; j < g.d; ++j) {
        int64_t cj = r / g.stride[j];
        r %= g.stride[j];
        if (cj > 0) {
          double v = val[g.dm_of_rm[rm - g.stride[j]]];
          if (v != kNoPath && v > best) best = v;
        }
      }
      val[dm] = best + f.w[dm];
      best_overall = std::max(best_overall, val[dm]);
    }
  }
  return best_overall;
}

std::vector<double> slack_field(const WeightField& f, const PassageTables& t,
                                double c, DiagonalIndex i) {
  const GridSpec& g = *f.grid;
  if (i < 0 || i >= g.diag_count)
    throw std::out_of_range("slack_field: diagonal out of range");
  if (t.fwd_mark < i - 1)
    throw std::logic_error("slack_field: forward table not valid below i");
  if (t.bwd_mark > i + 1)
    throw std::logic_error("slack_field: backward table not valid above i");
  std::vector<double> out(g.diag_size(i));
  for (int64_t dm = g.diag_offset[i]; dm < g.diag_offset[i + 1]; ++dm)
    out[dm - g.diag_offset[i]] = c - fwd_in_max(t, dm) - bwd_out_max(t, dm);
  return out;
}

}  // namespace lptail
