#include "roledyn/roles.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

#include "roledyn/errors.hpp"
#include "roledyn/nnls.hpp"
#include "roledyn/parallel.hpp"
#include "roledyn/text.hpp"

namespace roledyn {

using nlohmann::json;

std::string_view to_string(MdlErrorModel m) { return m == MdlErrorModel::SquaredError ? "squared" : "kl"; }

MdlErrorModel parse_mdl_error_model(std::string_view name) {
  if (name == "squared") return MdlErrorModel::SquaredError;
  if (name == "kl") return MdlErrorModel::KlDivergence;
  throw ArgumentError("unknown MDL error model '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Quantisation and description length

Eigen::MatrixXd lloyd_quantize(const Eigen::MatrixXd& values, std::size_t levels, std::size_t max_iters) {
  if (levels < 1) throw ArgumentError("quantisation needs at least one level");
  const auto total = static_cast<std::size_t>(values.size());
  if (total == 0) return values;
  std::vector<double> sorted(values.data(), values.data() + total);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> centers(sorted);
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());

  if (centers.size() > levels) {
    const double lo = sorted.front(), hi = sorted.back();
    centers.resize(levels);
    for (std::size_t k = 0; k < levels; ++k)
      centers[k] = lo + (static_cast<double>(k) + 0.5) * (hi - lo) / static_cast<double>(levels);

    std::vector<double> prefix(total + 1, 0.0);
    for (std::size_t i = 0; i < total; ++i) prefix[i + 1] = prefix[i] + sorted[i];
    for (std::size_t it = 0; it < max_iters; ++it) {
      bool changed = false;
      std::size_t begin = 0;
      for (std::size_t k = 0; k < levels; ++k) {
        std::size_t end = total;
        if (k + 1 < levels) {
          const double boundary = 0.5 * (centers[k] + centers[k + 1]);
          end = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), boundary) - sorted.begin());
          end = std::max(end, begin);
        }
        if (end > begin) {
          const double mean = (prefix[end] - prefix[begin]) / static_cast<double>(end - begin);
          if (mean != centers[k]) changed = true;
          centers[k] = mean;
        }
        begin = end;
      }
      if (!changed) break;
    }
  }

  Eigen::MatrixXd out(values.rows(), values.cols());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    auto it = std::lower_bound(centers.begin(), centers.end(), v);
    double best = it == centers.end() ? centers.back() : *it;
    if (it != centers.begin() && (it == centers.end() || v - *(it - 1) <= *it - v)) best = *(it - 1);
    out.data()[i] = best;
  }
  return out;
}

MdlScore mdl_score(const Eigen::MatrixXd& V, const Eigen::MatrixXd& G, const Eigen::MatrixXd& F,
                   const MdlOptions& options) {
  const std::size_t levels = std::size_t{1} << options.bits;
  const Eigen::MatrixXd Gq = lloyd_quantize(G, levels, options.lloyd_iters);
  const Eigen::MatrixXd Fq = lloyd_quantize(F, levels, options.lloyd_iters);
  const double n = static_cast<double>(V.rows()), f = static_cast<double>(V.cols());
  const double r = static_cast<double>(G.cols());

  MdlScore s;
  s.rank = static_cast<std::size_t>(G.cols());
  s.model_bits = static_cast<double>(options.bits) * (n * r + r * f);
  s.objective = nmf_objective(V, G, F);

  const double vmax = V.size() > 0 ? V.maxCoeff() : 0.0;
  const double delta = (vmax > 0 ? vmax : 1.0) * std::ldexp(1.0, -static_cast<int>(options.precision_bits));
  const Eigen::MatrixXd recon = Gq * Fq;
  if (options.error_model == MdlErrorModel::SquaredError) {
    // Gaussian residual code at fixed precision delta, with ML variance:
    // N/2 · log2(1 + MSE/δ²) bits, which is ~0 for an exact fit.
    const double N = n * f;
    const double mse = (V - recon).squaredNorm() / N;
    s.error_bits = 0.5 * N * std::log2(1.0 + mse / (delta * delta));
  } else {
    double nats = 0;
    for (Eigen::Index i = 0; i < V.size(); ++i) {
      const double v = V.data()[i];
      const double w = std::max(recon.data()[i], delta);
      nats += (v > 0 ? v * std::log(v / w) - v + w : w);
    }
    s.error_bits = nats / std::log(2.0);
  }
  return s;
}

RoleModel mdl_select_rank(const Eigen::MatrixXd& V, std::size_t r_min, std::size_t r_max, const MdlOptions& options) {
  const auto limit = static_cast<std::size_t>(std::min(V.rows(), V.cols()));
  if (r_min < 1 || r_min > r_max || r_max >= limit)
    throw ArgumentError("rank range [" + std::to_string(r_min) + ", " + std::to_string(r_max) +
                        "] must satisfy 1 <= r_min <= r_max < min(rows, cols) = " + std::to_string(limit));
  if (options.restarts < 1) throw ArgumentError("need at least one NMF restart");
  if (options.bits < 1 || options.bits > 16) throw ArgumentError("MDL bits per value must lie in [1, 16]");
  if ((V.array() < 0).any() || !V.allFinite()) throw ArgumentError("MDL input must be finite and non-negative");

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(V.cols());
  if (options.scale_columns)
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      const double m = V.col(j).maxCoeff();
      if (m > 0) scale(j) = m;
    }
  const Eigen::MatrixXd Vs = V * scale.cwiseInverse().asDiagonal();

  const std::size_t ranks = r_max - r_min + 1;
  std::vector<NmfResult> fits(ranks * options.restarts);
  parallel_for(fits.size(), options.workers, [&](std::size_t job) {
    const std::size_t r = r_min + job / options.restarts;
    NmfOptions o = options.nmf;
    o.seed = derive_seed(options.nmf.seed, r, job % options.restarts);
    fits[job] = nmf(Vs, r, o);
  });

  RoleModel model;
  std::vector<const NmfResult*> best_fit(ranks, nullptr);
  for (std::size_t i = 0; i < ranks; ++i) {
    for (std::size_t k = 0; k < options.restarts; ++k) {
      const NmfResult& fit = fits[i * options.restarts + k];
      if (!best_fit[i] || fit.final_objective() < best_fit[i]->final_objective()) best_fit[i] = &fit;
    }
  }
  model.mdl_trace.resize(ranks);
  parallel_for(ranks, options.workers,
               [&](std::size_t i) { model.mdl_trace[i] = mdl_score(Vs, best_fit[i]->G, best_fit[i]->F, options); });

  std::size_t chosen = 0;
  for (std::size_t i = 1; i < ranks; ++i)
    if (model.mdl_trace[i].total() < model.mdl_trace[chosen].total()) chosen = i;
  model.basis = best_fit[chosen]->F * scale.asDiagonal();
  model.column_scale = scale;
  return model;
}

// ---------------------------------------------------------------------------
// Memberships

MembershipMatrix MembershipMatrix::normalized_rows() const {
  MembershipMatrix out = *this;
  for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
    const double s = out.values.row(i).sum();
    if (s > 0) out.values.row(i) /= s;
  }
  out.normalized = true;
  return out;
}

Eigen::MatrixXd estimate_memberships(const Eigen::MatrixXd& V, const RoleModel& model) {
  if (static_cast<std::size_t>(V.cols()) != model.feature_count())
    throw SchemaError("membership estimation: V has " + std::to_string(V.cols()) + " columns, model expects " +
                      std::to_string(model.feature_count()));
  if ((V.array() < 0).any() || !V.allFinite()) throw ArgumentError("membership estimation needs V >= 0");
  Eigen::VectorXd scale = model.column_scale.size() == V.cols() ? model.column_scale
                                                                   : Eigen::VectorXd::Ones(V.cols());
  const Eigen::VectorXd inv = scale.cwiseInverse();
  const Eigen::MatrixXd Fs = model.basis * inv.asDiagonal();
  const Eigen::MatrixXd gram = Fs * Fs.transpose();

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(V.rows(), model.basis.rows());
  for (Eigen::Index i = 0; i < V.rows(); ++i) {
    if (V.row(i).isZero(0)) continue;
    const Eigen::VectorXd v = V.row(i).transpose().cwiseProduct(inv);
    G.row(i) = nnls_gram(gram, Fs * v).transpose();
  }
  return G;
}

MembershipMatrix estimate_memberships(const FeatureMatrix& V, const RoleModel& model) {
  std::map<FeatureDefinition, std::size_t> position;
  for (std::size_t j = 0; j < model.feature_defs.size(); ++j) position.emplace(model.feature_defs[j], j);
  if (model.feature_defs.size() != model.feature_count())
    throw SchemaError("role model lists " + std::to_string(model.feature_defs.size()) + " definitions for " +
                      std::to_string(model.feature_count()) + " basis columns");

  Eigen::MatrixXd aligned = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(V.rows()),
                                                  static_cast<Eigen::Index>(model.feature_count()));
  for (std::size_t j = 0; j < V.cols(); ++j) {
    auto it = position.find(V.defs[j]);
    if (it == position.end())
      throw SchemaError("timestep " + std::to_string(V.timestep) + ": feature '" + V.defs[j].name() +
                        "' is not part of the role model");
    aligned.col(static_cast<Eigen::Index>(it->second)) = V.values.col(static_cast<Eigen::Index>(j));
  }
  MembershipMatrix out;
  out.timestep = V.timestep;
  out.nodes = V.nodes;
  out.values = estimate_memberships(aligned, model);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string role_model_to_json(const RoleModel& model) {
  json j;
  j["rank"] = model.rank();
  j["features"] = json::parse(feature_definitions_to_json(model.feature_defs));
  j["basis"] = matrix_to_json(model.basis);
  j["column_scale"] = std::vector<double>(model.column_scale.data(), model.column_scale.data() + model.column_scale.size());
  json trace = json::array();
  for (const auto& s : model.mdl_trace)
    trace.push_back({{"rank", s.rank},
                     {"model_bits", s.model_bits},
                     {"error_bits", s.error_bits},
                     {"total_bits", s.total()},
                     {"objective", s.objective}});
  j["mdl_trace"] = trace;
  return j.dump(2);
}

RoleModel role_model_from_json(std::string_view text_in) {
  RoleModel model;
  try {
    json j = json::parse(text_in);
    model.feature_defs = feature_definitions_from_json(j.at("features").dump());
    const auto& basis = j.at("basis");
    const auto r = static_cast<Eigen::Index>(basis.size());
    const auto f = static_cast<Eigen::Index>(model.feature_defs.size());
    model.basis.resize(r, f);
    for (Eigen::Index i = 0; i < r; ++i) {
      if (static_cast<Eigen::Index>(basis[i].size()) != f) throw SchemaError("role model basis row has wrong width");
      for (Eigen::Index k = 0; k < f; ++k) model.basis(i, k) = basis[i][k].get<double>();
    }
    auto scale = j.at("column_scale").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(scale.size()) != f) throw SchemaError("role model column_scale has wrong length");
    model.column_scale = Eigen::Map<Eigen::VectorXd>(scale.data(), f);
    for (const auto& s : j.value("mdl_trace", json::array()))
      model.mdl_trace.push_back({s.at("rank").get<std::size_t>(), s.at("model_bits").get<double>(),
                                 s.at("error_bits").get<double>(), s.at("objective").get<double>()});
    if (j.at("rank").get<Eigen::Index>() != r) throw SchemaError("role model rank disagrees with basis");
  } catch (const json::exception& e) {
    throw SchemaError(std::string("role model JSON: ") + e.what());
  }
  return model;
}

void write_membership_csv(std::ostream& out, std::span<const MembershipMatrix> memberships,
                          const NodeDictionary& nodes) {
  std::size_t r = 0;
  for (const auto& m : memberships) r = std::max(r, m.rank());
  out << "node,t";
  for (std::size_t k = 0; k < r; ++k) out << ",role_" << k;
  out << '\n';
  for (const auto& m : memberships) {
    if (m.rows() > 0 && m.rank() != r) throw SchemaError("membership matrices disagree on rank");
    for (std::size_t i = 0; i < m.rows(); ++i) {
      out << text::csv_field(nodes.label(m.nodes[i])) << ',' << m.timestep;
      for (std::size_t k = 0; k < r; ++k)
        out << ',' << text::format_double(m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      out << '\n';
    }
  }
}

std::vector<MembershipMatrix> read_membership_csv(std::istream& in, const NodeDictionary& nodes, std::size_t t_max,
                                                  bool normalized) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "membership CSV is empty");
  auto header = text::parse_csv_record(line);
  if (header.size() < 2 || header[0] != "node" || header[1] != "t") throw ParseError(1, "membership CSV header");
  const std::size_t r = header.size() - 2;
  std::vector<std::vector<std::pair<NodeId, std::vector<double>>>> rows(t_max);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto rec = text::parse_csv_record(line);
    if (rec.size() != header.size()) throw ParseError(lineno, "membership CSV row has wrong arity");
    auto id = nodes.find(rec[0]);
    if (!id) throw LookupError("membership CSV names unknown node '" + rec[0] + "'");
    auto t = text::parse_int<std::size_t>(rec[1]);
    if (!t || *t < 1 || *t > t_max) throw ParseError(lineno, "timestep out of range");
    std::vector<double> vals;
    for (std::size_t k = 0; k < r; ++k) {
      auto v = text::parse_double(rec[k + 2]);
      if (!v) throw ParseError(lineno, "bad membership value");
      vals.push_back(*v);
    }
    rows[*t - 1].emplace_back(*id, std::move(vals));
  }
  std::vector<MembershipMatrix> out(t_max);
  for (std::size_t t = 0; t < t_max; ++t) {
    auto& src = rows[t];
    std::sort(src.begin(), src.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& m = out[t];
    m.timestep = t + 1;
    m.normalized = normalized;
    m.values.resize(static_cast<Eigen::Index>(src.size()), static_cast<Eigen::Index>(r));
    for (std::size_t i = 0; i < src.size(); ++i) {
      m.nodes.push_back(src[i].first);
      for (std::size_t k = 0; k < r; ++k)
        m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = src[i].second[k];
    }
  }
  return out;
}

}  // namespace roledyn
