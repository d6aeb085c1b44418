#include "dof/io.hpp"

#include <fstream>
#include <sstream>

namespace dof::io {

namespace {

int require_int(const json& j, const char* key, int lo, int hi) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    throw std::invalid_argument(std::string("missing or non-integer field \"") + key +
                                "\"");
  }
  const long long v = j[key].get<long long>();
  if (v < lo || v > hi) {
    throw std::invalid_argument(std::string("field \"") + key + "\" out of range [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(v);
}

}  // namespace

// ===== Instance input ====================================================

Instance parse_instance(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("instance must be a JSON object");
  const int k = require_int(j, "K", 3, 4);
  const int n = require_int(j, "N", 1, 1 << 20);

  if (!j.contains("M") || !j["M"].is_array() ||
      j["M"].size() != static_cast<size_t>(k)) {
    throw std::invalid_argument("field \"M\" must be an array of K antenna counts");
  }
  std::vector<int> m;
  for (const auto& e : j["M"]) {
    if (!e.is_number_integer() || e.get<long long>() < 1 ||
        e.get<long long>() > (1 << 20)) {
      throw std::invalid_argument("antenna counts must be positive integers");
    }
    m.push_back(e.get<int>());
  }

  std::vector<std::vector<int>> raw(static_cast<size_t>(k),
                                    std::vector<int>(static_cast<size_t>(k), 0));
  if (j.contains("d")) {
    const auto& dj = j["d"];
    if (!dj.is_array() || dj.size() != static_cast<size_t>(k)) {
      throw std::invalid_argument("field \"d\" must be a KxK matrix");
    }
    for (int r = 0; r < k; ++r) {
      const auto& row = dj[static_cast<size_t>(r)];
      if (!row.is_array() || row.size() != static_cast<size_t>(k)) {
        throw std::invalid_argument("field \"d\" must be a KxK matrix");
      }
      for (int c = 0; c < k; ++c) {
        const auto& e = row[static_cast<size_t>(c)];
        if (!e.is_number_integer() || e.get<long long>() < 0 ||
            e.get<long long>() > (1 << 20)) {
          throw std::invalid_argument("demand entries must be nonnegative integers");
        }
        if (r == c && e.get<int>() != 0) {
          throw std::invalid_argument("demand matrix diagonal must be zero");
        }
        raw[static_cast<size_t>(r)][static_cast<size_t>(c)] = e.get<int>();
      }
    }
  }

  Instance inst{NetworkConfig(m, n), DoFTuple(k)};
  for (int i = 0; i < k; ++i) {
    for (int c = 0; c < k; ++c) {
      if (i == c) continue;
      inst.d.set(i, c,
                 raw[static_cast<size_t>(inst.cfg.original_label(i))]
                    [static_cast<size_t>(inst.cfg.original_label(c))]);
    }
  }
  return inst;
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
  return parse_instance(j);
}

// ===== Report serialization ==============================================

json meta_json(double rank_tol) {
  json j;
  j["version"] = kVersion;
  j["rankTolerance"] = rank_tol;
  j["alignTolerance"] = ssa::kAlignTol;
  return j;
}

json config_json(const NetworkConfig& cfg) {
  json j;
  j["users"] = cfg.users();
  json m = json::array();
  json perm = json::array();
  for (int i = 0; i < cfg.users(); ++i) {
    m.push_back(cfg.antennas(i));
    perm.push_back(cfg.original_label(i));
  }
  j["antennas"] = std::move(m);
  j["relay"] = cfg.relay();
  j["labelPermutation"] = std::move(perm);
  return j;
}

json tuple_json(const DoFTuple& d) {
  json rows = json::array();
  for (int i = 0; i < d.users(); ++i) {
    json row = json::array();
    for (int c = 0; c < d.users(); ++c) row.push_back(i == c ? 0 : d(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const bounds::BoundReport& report) {
  json j;
  j["feasible"] = report.feasible;
  j["totalDof"] = report.total_dof;
  j["totalDofCap"] = report.total_dof_cap;
  json vs = json::array();
  for (const auto& v : report.violations) {
    json vj;
    vj["id"] = v.id;
    vj["lhs"] = v.lhs;
    vj["rhs"] = v.rhs;
    json assign = json::array();
    for (int a : v.assign) {
      if (a >= 0) assign.push_back(a);
    }
    vj["assignment"] = std::move(assign);
    vs.push_back(std::move(vj));
  }
  j["violations"] = std::move(vs);
  return j;
}

json to_json(const detour::DetourPlan& plan) {
  json j;
  j["scheme"] = detour::to_string(plan.scheme);
  j["lambda"] = plan.lambda;
  j["beta"] = plan.beta;
  j["gamma"] = plan.gamma;
  json rs = json::array();
  for (const auto& r : plan.reroutes) {
    json rj;
    rj["from"] = r.from;
    rj["to"] = r.to;
    rj["via"] = r.via;
    rj["amount"] = r.amount;
    rs.push_back(std::move(rj));
  }
  j["reroutes"] = std::move(rs);
  j["modified"] = tuple_json(plan.modified);
  json entries = json::array();
  for (const auto& e : plan.routing.entries) {
    json ej;
    ej["source"] = e.source;
    ej["destination"] = e.destination;
    ej["viaPath"] = e.via_path;
    ej["streams"] = e.streams;
    entries.push_back(std::move(ej));
  }
  j["routing"] = std::move(entries);
  j["rationale"] = plan.rationale;
  return j;
}

json to_json(const ssa::DecodabilityCertificate& cert) {
  json j;
  json ps = json::array();
  for (const auto& v : cert.per_stream) {
    json vj;
    vj["source"] = v.source;
    vj["destination"] = v.destination;
    vj["decodable"] = v.decodable;
    ps.push_back(std::move(vj));
  }
  j["perStream"] = std::move(ps);
  j["allTrue"] = cert.all_true();
  j["alignmentResidual"] = cert.alignment_residual;
  j["minSingularRatio"] = cert.min_singular_ratio;
  if (cert.dof_slope_estimate.has_value()) {
    j["dofSlopeEstimate"] = *cert.dof_slope_estimate;
  } else {
    j["dofSlopeEstimate"] = nullptr;
  }
  return j;
}

json to_json(const ssa::SlopeEstimate& est) {
  json j;
  j["slope"] = est.slope;
  j["streams"] = est.streams;
  j["trials"] = est.trials;
  j["certifiedTrials"] = est.certified_trials;
  json curve = json::array();
  for (size_t i = 0; i < est.power.size(); ++i) {
    json pt;
    pt["power"] = est.power[i];
    pt["sumRate"] = est.sum_rate[i];
    pt["inWindow"] = static_cast<bool>(est.window[i]);
    curve.push_back(std::move(pt));
  }
  j["curve"] = std::move(curve);
  return j;
}

}  // namespace dof::io
