#include "steep/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <string_view>

namespace steep {
namespace {

void put_double(std::string& out, double v) {
  if (v == kNegInf) {
    out += "-inf";
    return;
  }
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

template <class T>
void put_int(std::string& out, T v) {
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw TraceError("line " + std::to_string(line) + ": " + msg);
}

template <class T>
T get_int(std::string_view f, std::size_t line, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size()) fail(line, std::string("bad ") + what + " '" + std::string(f) + "'");
  return v;
}

double get_double(std::string_view f, std::size_t line, const char* what) {
  if (f == "-inf") return kNegInf;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size()) fail(line, std::string("bad ") + what + " '" + std::string(f) + "'");
  return v;
}

std::vector<std::string_view> split_plain(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

double quantile(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size() && k < b.size(); ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(acc);
}

}  // namespace

std::string trace_header(StateFormat format, std::size_t dim) {
  std::string h = "rep,chain,iter,kind,accepted,log_density";
  if (format == StateFormat::newick) return h + ",state\n";
  for (std::size_t k = 0; k < dim; ++k) h += ",state_" + std::to_string(k);
  return h + "\n";
}

void append_trace_row(std::string& out, const TraceRecord& r, StateFormat format) {
  put_int(out, r.rep);
  out += ',';
  put_int(out, r.chain);
  out += ',';
  put_int(out, r.iter);
  out += ',';
  out += r.kind;
  out += r.accepted ? ",1," : ",0,";
  put_double(out, r.log_density);
  if (format == StateFormat::newick) {
    out += ",\"";
    out += r.tree;
    out += '"';
  } else {
    for (double x : r.coords) {
      out += ',';
      put_double(out, x);
    }
  }
  out += '\n';
}

ParsedTrace read_trace(std::istream& in) {
  ParsedTrace t;
  std::string line;
  std::size_t no = 0;
  if (!std::getline(in, line)) return t;  // empty file: no records
  ++no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = split_plain(line);
  if (head.size() < 7 || head[0] != "rep" || head[5] != "log_density") fail(no, "unrecognized trace header");
  if (head.size() == 7 && head[6] == "state") {
    t.format = StateFormat::newick;
  } else {
    t.format = StateFormat::coords;
    t.dim = head.size() - 6;
    for (std::size_t k = 0; k < t.dim; ++k) {
      if (head[6 + k] != "state_" + std::to_string(k)) fail(no, "unexpected column '" + std::string(head[6 + k]) + "'");
    }
  }
  std::map<std::pair<std::uint64_t, std::size_t>, std::uint64_t> last_iter;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view sv(line);
    TraceRecord r;
    std::vector<std::string_view> f;
    if (t.format == StateFormat::newick) {
      const auto q = sv.find('"');
      if (q == std::string_view::npos || sv.size() < q + 2 || sv.back() != '"' || q == 0 || sv[q - 1] != ',') {
        fail(no, "expected a quoted newick state");
      }
      f = split_plain(sv.substr(0, q - 1));
      r.tree = std::string(sv.substr(q + 1, sv.size() - q - 2));
      if (f.size() != 6) fail(no, "expected 7 fields, got " + std::to_string(f.size() + 1));
    } else {
      f = split_plain(sv);
      if (f.size() != 6 + t.dim) {
        fail(no, "expected " + std::to_string(6 + t.dim) + " fields, got " + std::to_string(f.size()));
      }
      for (std::size_t k = 0; k < t.dim; ++k) r.coords.push_back(get_double(f[6 + k], no, "state value"));
    }
    r.rep = get_int<std::uint64_t>(f[0], no, "rep");
    r.chain = get_int<std::size_t>(f[1], no, "chain");
    r.iter = get_int<std::uint64_t>(f[2], no, "iter");
    r.kind = std::string(f[3]);
    if (r.kind != "local" && r.kind != "long" && r.kind != "init") fail(no, "bad move kind '" + r.kind + "'");
    if (f[4] != "0" && f[4] != "1") fail(no, "accepted must be 0 or 1");
    r.accepted = f[4] == "1";
    r.log_density = get_double(f[5], no, "log_density");
    auto [it, fresh] = last_iter.try_emplace({r.rep, r.chain}, r.iter);
    if (!fresh) {
      if (r.iter <= it->second) fail(no, "iterations must increase within a (rep, chain) stream");
      it->second = r.iter;
    }
    t.records.push_back(std::move(r));
  }
  return t;
}

nlohmann::json describe(std::vector<double> v) {
  nlohmann::json j;
  j["n"] = v.size();
  if (v.empty()) {
    j["mean"] = j["median"] = j["sd"] = j["p05"] = j["p95"] = 0.0;
    return j;
  }
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  j["mean"] = mean;
  j["median"] = quantile(v, 0.5);
  j["sd"] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  j["p05"] = quantile(v, 0.05);
  j["p95"] = quantile(v, 0.95);
  return j;
}

nlohmann::json summarize_records(const std::vector<TraceRecord>& records, StateFormat format,
                                 const SummaryOptions& opt) {
  struct Acc {
    std::uint64_t local_att = 0, local_acc = 0, long_att = 0, long_acc = 0;
  };
  std::map<std::size_t, Acc> acc;
  // Per repetition: post-burn-in hits and total, plus the latest pre-burn-in cold state.
  struct Cold {
    std::uint64_t n = 0, in_a = 0, near_first = 0;
    const TraceRecord* fallback = nullptr;
  };
  std::map<std::uint64_t, Cold> cold;
  std::map<std::string, std::uint64_t> topo;
  std::uint64_t cold_post = 0;
  for (const auto& r : records) {
    if (r.kind == "local") {
      ++acc[r.chain].local_att;
      acc[r.chain].local_acc += r.accepted;
    } else if (r.kind == "long") {
      ++acc[r.chain].long_att;
      acc[r.chain].long_acc += r.accepted;
    } else {
      acc.try_emplace(r.chain);
    }
    if (r.chain != 0) continue;
    auto& c = cold[r.rep];
    if (r.iter <= opt.burn_in) {
      c.fallback = &r;
      continue;
    }
    ++cold_post;
    ++c.n;
    if (format == StateFormat::newick) {
      ++topo[r.tree];
    } else {
      if (opt.region_center && distance(r.coords, *opt.region_center) < opt.region_radius) ++c.in_a;
      if (opt.region_center && opt.other_center &&
          distance(r.coords, *opt.region_center) < distance(r.coords, *opt.other_center)) {
        ++c.near_first;
      }
    }
  }
  nlohmann::json j;
  j["records"] = records.size();
  j["repetitions"] = cold.size();
  j["cold_post_burn_in"] = cold_post;
  j["burn_in"] = opt.burn_in;
  auto& ja = j["acceptance"] = nlohmann::json::array();
  for (const auto& [chain, a] : acc) {
    ja.push_back({{"chain", chain},
                  {"local_attempts", a.local_att},
                  {"local_accepted", a.local_acc},
                  {"local_rate", a.local_att ? static_cast<double>(a.local_acc) / static_cast<double>(a.local_att) : 0.0},
                  {"long_attempts", a.long_att},
                  {"long_accepted", a.long_acc},
                  {"long_rate", a.long_att ? static_cast<double>(a.long_acc) / static_cast<double>(a.long_att) : 0.0}});
  }
  if (format == StateFormat::coords && opt.region_center) {
    std::vector<double> p_hat, near;
    for (const auto& [rep, c] : cold) {
      if (c.n > 0) {
        p_hat.push_back(static_cast<double>(c.in_a) / static_cast<double>(c.n));
        near.push_back(static_cast<double>(c.near_first) / static_cast<double>(c.n));
      } else if (c.fallback) {
        // Nothing after burn-in: degenerate at the last state seen.
        const auto& x = c.fallback->coords;
        p_hat.push_back(distance(x, *opt.region_center) < opt.region_radius ? 1.0 : 0.0);
        if (opt.other_center) {
          near.push_back(distance(x, *opt.region_center) < distance(x, *opt.other_center) ? 1.0 : 0.0);
        }
      }
    }
    j["p_hat_per_rep"] = p_hat;
    j["p_hat"] = describe(p_hat);
    if (opt.other_center) {
      j["mode1_fraction_per_rep"] = near;
      j["mode1_fraction"] = describe(near);
    }
  }
  if (format == StateFormat::newick) {
    std::vector<std::pair<std::string, std::uint64_t>> rows(topo.begin(), topo.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    auto& jt = j["topologies"] = nlohmann::json::array();
    for (const auto& [tree, n] : rows) {
      jt.push_back({{"tree", tree},
                    {"count", n},
                    {"fraction", cold_post ? static_cast<double>(n) / static_cast<double>(cold_post) : 0.0}});
    }
  }
  return j;
}

}  // namespace steep
