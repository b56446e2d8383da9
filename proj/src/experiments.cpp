#include "experiments.hpp"

#include <cmath>
#include <sstream>

namespace sml {

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::InvalidArgument, "config must be a JSON object");
    ExperimentConfig cfg;
    if (!j.contains("model")) fail(ErrorKind::InvalidArgument, "config needs a \"model\"");
    cfg.model = j.at("model");
    if (j.contains("neighborhood")) cfg.neighborhood = j.at("neighborhood");
    if (j.contains("command")) cfg.command = j.at("command");
    cfg.seed = j.value("seed", std::uint64_t{42});
    cfg.samples = j.value("samples", 10000L);
    cfg.tol = j.value("tol", 1e-8);
    cfg.eps = j.value("eps", 1e-3);
    cfg.cert_samples = j.value("cert_samples", 256L);
    cfg.format = j.value("format", std::string("csv"));
    if (!(cfg.tol > 0)) fail(ErrorKind::InvalidArgument, "tol must be positive");
    if (!(cfg.eps > 0) || !(cfg.eps < 1)) fail(ErrorKind::InvalidArgument, "eps must be in (0,1)");
    if (cfg.samples < 1 || cfg.cert_samples < 1)
        fail(ErrorKind::InvalidArgument, "sample counts must be positive");
    if (cfg.format != "csv" && cfg.format != "json")
        fail(ErrorKind::InvalidArgument, "format must be csv or json");
    // validate eagerly so config errors surface before any computation
    Manifold::from_json(cfg.model);
    NeighborhoodSpec::from_json(cfg.neighborhood);
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(ErrorKind::InvalidArgument, "malformed config JSON");
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    return {{"model", model},
            {"neighborhood", neighborhood},
            {"command", command},
            {"seed", seed},
            {"samples", samples},
            {"tol", tol},
            {"eps", eps},
            {"cert_samples", cert_samples},
            {"format", format}};
}

Curve curve_from_json(const Manifold& model, const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    const int n = model.dim();
    auto vec_of = [n](const nlohmann::json& arr) {
        const auto v = arr.get<std::vector<double>>();
        if (static_cast<int>(v.size()) != n)
            fail(ErrorKind::InvalidArgument, "coordinate array has the wrong dimension");
        Vec out(n);
        for (int i = 0; i < n; ++i) out[i] = v[i];
        return out;
    };
    if (type == "geodesic") {
        const Vec start = vec_of(j.at("start"));
        const Vec dir = vec_of(j.at("direction"));
        const double length = j.at("length").get<double>();
        if (!(length > 0)) fail(ErrorKind::InvalidArgument, "curve length must be positive");
        return model.geodesic_curve(start, dir, length);
    }
    if (type == "latitude") {
        if (model.kind() != ManifoldKind::RoundSphere || n != 2)
            fail(ErrorKind::InvalidArgument, "latitude curves need a round 2-sphere model");
        const double colat = j.at("colatitude").get<double>();
        if (!(colat > 0) || !(colat < M_PI))
            fail(ErrorKind::InvalidArgument, "colatitude must be in (0, pi)");
        const double rchart = model.injectivity_radius().value / M_PI * colat;  // R * colat
        return Curve{[rchart](double u) {
                         Vec q(2);
                         q << rchart * std::cos(2 * M_PI * u), rchart * std::sin(2 * M_PI * u);
                         return q;
                     },
                     [rchart](double u) {
                         Vec v(2);
                         v << -2 * M_PI * rchart * std::sin(2 * M_PI * u),
                             2 * M_PI * rchart * std::cos(2 * M_PI * u);
                         return v;
                     },
                     0, 1};
    }
    if (type == "chart-line") {
        const Vec from = vec_of(j.at("from")), to = vec_of(j.at("to"));
        return Curve{[from, to](double u) { return Vec(from + u * (to - from)); },
                     [from, to](double) { return Vec(to - from); }, 0, 1};
    }
    fail(ErrorKind::InvalidArgument, "unknown curve type '" + type + "'");
}

namespace {

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join_coords(const Vec& q) {
    std::string out;
    for (int i = 0; i < q.size(); ++i) {
        if (i) out += ';';
        out += fmt_double(q[i]);
    }
    return out;
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct EngineBundle {
    std::shared_ptr<const Manifold> model;
    NeighborhoodSpec spec;
    std::unique_ptr<DistanceEngine> engine;
};

EngineBundle make_engine(const ExperimentConfig& cfg) {
    EngineBundle b;
    auto model = std::make_shared<Manifold>(Manifold::from_json(cfg.model));
    if (cfg.command.contains("graph_size"))
        model->set_graph_size_hint(cfg.command.at("graph_size").get<int>());
    b.model = model;
    b.spec = NeighborhoodSpec::from_json(cfg.neighborhood);
    b.engine = std::make_unique<DistanceEngine>(b.model, b.spec, cfg.eps, cfg.cert_samples,
                                                cfg.tol);
    return b;
}

std::vector<std::pair<Vec, Vec>> pairs_from_config(const Manifold& model,
                                                   const nlohmann::json& cmd,
                                                   std::uint64_t seed) {
    std::vector<std::pair<Vec, Vec>> pairs;
    const int n = model.dim();
    if (cmd.contains("pairs")) {
        for (const auto& pr : cmd.at("pairs")) {
            const auto a = pr.at(0).get<std::vector<double>>();
            const auto b = pr.at(1).get<std::vector<double>>();
            if (static_cast<int>(a.size()) != n || static_cast<int>(b.size()) != n)
                fail(ErrorKind::InvalidArgument, "pair coordinates have the wrong dimension");
            Vec va(n), vb(n);
            for (int i = 0; i < n; ++i) {
                va[i] = a[i];
                vb[i] = b[i];
            }
            pairs.push_back({va, vb});
        }
    }
    if (cmd.contains("random_pairs")) {
        const long count = cmd.at("random_pairs").get<long>();
        for (long i = 0; i < count; ++i)
            pairs.push_back({model.sample_point(seed + 2 * i), model.sample_point(seed + 2 * i + 1)});
    }
    if (pairs.empty())
        fail(ErrorKind::InvalidArgument, "command needs \"pairs\" or \"random_pairs\"");
    return pairs;
}

RunResult run_certify(const ExperimentConfig& cfg) {
    const nlohmann::json& cmd = cfg.command;
    const std::string construction = cmd.value("construction", std::string("bidisc"));
    auto model = std::make_shared<const Manifold>(Manifold::from_json(cfg.model));

    SymplecticMapSpec map;
    if (construction == "bidisc") {
        map = bidisc_embedding(cmd.at("a").get<double>(), cmd.at("b").get<double>(),
                               cmd.value("n", 2), cfg.eps);
    } else if (construction == "fiber-frame" || construction == "local-ball") {
        const auto q0v = cmd.at("q0").get<std::vector<double>>();
        Vec q0(q0v.size());
        for (size_t i = 0; i < q0v.size(); ++i) q0[i] = q0v[i];
        const double d = cmd.at("d").get<double>();
        const double rho_p = cmd.at("rho_p").get<double>();
        const double target_r = cmd.value("target_r", 1.0);
        map = construction == "fiber-frame"
                  ? fiber_frame_embedding(model, q0, d, rho_p, target_r, cfg.eps)
                  : local_ball_embedding(model, q0, d, rho_p, target_r, cfg.eps);
    } else {
        fail(ErrorKind::InvalidArgument, "unknown construction '" + construction + "'");
    }

    std::vector<CheckKind> kinds;
    if (cmd.contains("checks")) {
        for (const auto& name : cmd.at("checks")) {
            const std::string s = name.get<std::string>();
            if (s == "symplectic")
                kinds.push_back(CheckKind::Symplectic);
            else if (s == "liouville")
                kinds.push_back(CheckKind::Liouville);
            else if (s == "containment")
                kinds.push_back(CheckKind::Containment);
            else if (s == "relative")
                kinds.push_back(CheckKind::Relative);
            else
                fail(ErrorKind::InvalidArgument, "unknown check '" + s + "'");
        }
    } else {
        kinds = {CheckKind::Symplectic, CheckKind::Liouville, CheckKind::Containment,
                 CheckKind::Relative};
    }

    CertifyOptions opt;
    opt.samples = cfg.samples;
    opt.tol = cfg.tol;
    EmbeddingCertificate cert = certify(map, kinds, opt);
    CertificateStore store;
    store.add(cert);
    nlohmann::json out = store.find("cert-000001")->to_json();
    if (construction == "bidisc") {
        out["gromov_lower"] = map.domain_capacity;
        out["domain_capacity"] = map.domain_capacity;
    }
    return {cert.pass ? 0 : 2, dump_json(out)};
}

RunResult run_rho(const ExperimentConfig& cfg) {
    EngineBundle b = make_engine(cfg);
    const auto pairs = pairs_from_config(*b.model, cfg.command, cfg.seed);
    std::ostringstream csv;
    nlohmann::json rows = nlohmann::json::array();
    csv << "pair,q0,q1,d_g,lower,upper,lower_provenance,upper_provenance\n";
    bool any_diag = false;
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& [a, bq] = pairs[i];
        const RhoBound rb = b.engine->rho_bracket(a, bq);
        const double dg = b.model->distance(a, bq).value;
        any_diag = any_diag || !rb.diagnostic.empty();
        if (cfg.format == "csv") {
            csv << i << ',' << csv_quote(join_coords(a)) << ',' << csv_quote(join_coords(bq))
                << ',' << fmt_double(dg) << ',' << fmt_double(rb.lower) << ','
                << fmt_double(rb.upper) << ',' << csv_quote(rb.lower_provenance) << ','
                << csv_quote(rb.upper_provenance) << '\n';
        } else {
            rows.push_back({{"pair", i},
                            {"d_g", dg},
                            {"lower", rb.lower},
                            {"upper", rb.upper},
                            {"lower_provenance", rb.lower_provenance},
                            {"upper_provenance", rb.upper_provenance},
                            {"certificates", rb.certificate_ids},
                            {"diagnostic", rb.diagnostic}});
        }
    }
    return {any_diag ? 2 : 0, cfg.format == "csv" ? csv.str() : dump_json(rows)};
}

RunResult run_length(const ExperimentConfig& cfg) {
    EngineBundle b = make_engine(cfg);
    const Curve curve = curve_from_json(*b.model, cfg.command.at("curve"));
    std::vector<double> times;
    if (cfg.command.contains("times")) {
        times = cfg.command.at("times").get<std::vector<double>>();
    } else {
        const int k = cfg.command.value("intervals", 10);
        if (k < 1) fail(ErrorKind::InvalidArgument, "intervals must be >= 1");
        for (int i = 0; i <= k; ++i)
            times.push_back(curve.t0 + (curve.t1 - curve.t0) * i / k);
    }
    const auto [lower, upper] = b.engine->length_rho(curve, times);
    if (cfg.format == "json")
        return {0, dump_json({{"lower", lower}, {"upper", upper},
                              {"intervals", times.size() - 1}})};
    std::ostringstream csv;
    csv << "intervals,lower,upper\n"
        << times.size() - 1 << ',' << fmt_double(lower) << ',' << fmt_double(upper) << '\n';
    return {0, csv.str()};
}

RunResult run_converge(const ExperimentConfig& cfg) {
    EngineBundle b = make_engine(cfg);
    const Curve curve = curve_from_json(*b.model, cfg.command.at("curve"));
    const int k_min = cfg.command.value("k_min", 2);
    const int k_max = cfg.command.value("k_max", 10);
    const ConvergenceTable table = b.engine->converge_length(curve, k_min, k_max);
    if (cfg.format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : table.rows)
            rows.push_back({{"k", r.k},
                            {"mesh", r.mesh},
                            {"sum_dg", r.sum_dg},
                            {"lower", r.lower},
                            {"upper", r.upper},
                            {"squeeze_factor", r.squeeze_factor},
                            {"riem_length", r.riem_length},
                            {"admissible", r.admissible}});
        return {0, dump_json(rows)};
    }
    std::ostringstream csv;
    csv << "k,mesh,sum_dg,lower,upper,squeeze_factor,riem_length\n";
    for (const auto& r : table.rows)
        csv << r.k << ',' << fmt_double(r.mesh) << ',' << fmt_double(r.sum_dg) << ','
            << fmt_double(r.lower) << ',' << fmt_double(r.upper) << ','
            << fmt_double(r.squeeze_factor) << ',' << fmt_double(r.riem_length) << '\n';
    return {0, csv.str()};
}

RunResult run_dw(const ExperimentConfig& cfg) {
    EngineBundle b = make_engine(cfg);
    const auto pairs = pairs_from_config(*b.model, cfg.command, cfg.seed);
    const int graph_size = cfg.command.value("dw_graph_size", 10000);
    const int neighbors = cfg.command.value("neighbors", 16);
    std::ostringstream csv;
    nlohmann::json rows = nlohmann::json::array();
    csv << "pair,q0,q1,d_g,dw_lower,dw_upper,nodes,neighbors\n";
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& [a, bq] = pairs[i];
        const DwBracket dw = b.engine->chain_metric_dw(a, bq, graph_size, neighbors);
        const double dg = b.model->distance(a, bq).value;
        if (cfg.format == "csv") {
            csv << i << ',' << csv_quote(join_coords(a)) << ',' << csv_quote(join_coords(bq))
                << ',' << fmt_double(dg) << ',' << fmt_double(dw.bound.lower) << ','
                << fmt_double(dw.bound.upper) << ',' << dw.nodes << ',' << dw.neighbors << '\n';
        } else {
            rows.push_back({{"pair", i},
                            {"d_g", dg},
                            {"dw_lower", dw.bound.lower},
                            {"dw_upper", dw.bound.upper},
                            {"nodes", dw.nodes},
                            {"neighbors", dw.neighbors}});
        }
    }
    return {0, cfg.format == "csv" ? csv.str() : dump_json(rows)};
}

RunResult run_capacities(const ExperimentConfig& cfg) {
    const nlohmann::json& cmd = cfg.command;
    CertificateStore store;
    nlohmann::json out;
    if (cmd.contains("sphere_example")) {
        const int n = cmd.at("sphere_example").get<int>();
        out = sphere_packing_example(n).to_json();
        return {0, dump_json(out)};
    }
    const nlohmann::json region = cmd.value("region", nlohmann::json{{"kind", "bi-disc"},
                                                                     {"a", 1.0},
                                                                     {"b", 1.0},
                                                                     {"n", 2}});
    const std::string kind = region.at("kind").get<std::string>();
    if (kind == "bi-disc") {
        CapacityReport rep =
            bidisc_capacity_report(region.at("a").get<double>(), region.at("b").get<double>(),
                                   region.value("n", 2), cfg.eps, store, cfg.samples);
        if (cfg.format == "csv") {
            std::ostringstream csv;
            csv << "region,gromov_lower,cyl_upper,volume\n";
            csv << csv_quote("bi-disc(" + fmt_double(region.at("a").get<double>()) + "," +
                             fmt_double(region.at("b").get<double>()) + ")")
                << ',' << fmt_double(rep.gromov_lower) << ',' << fmt_double(rep.cyl_upper)
                << ',' << fmt_double(rep.volume) << '\n';
            return {0, csv.str()};
        }
        out = rep.to_json();
        out["volume_width_bound"] = gromov_width_volume_bound(rep.region);
        return {0, dump_json(out)};
    }
    if (kind == "ball") {
        RegionDescriptor r =
            RegionDescriptor::ball(region.at("dim").get<int>(), region.at("radius").get<double>());
        out = {{"region", r.to_json()},
               {"volume", euclidean_volume(r)},
               {"volume_width_bound", gromov_width_volume_bound(r)}};
        return {0, dump_json(out)};
    }
    if (kind == "disc-bundle") {
        auto model = std::make_shared<const Manifold>(Manifold::from_json(cfg.model));
        RegionDescriptor r = RegionDescriptor::disc_bundle(
            model, region.value("radius", 1.0), Vec::Zero(model->dim()));
        out = {{"region", r.to_json()}, {"volume", euclidean_volume(r)}};
        return {0, dump_json(out)};
    }
    fail(ErrorKind::InvalidArgument, "unsupported capacity region '" + kind + "'");
}

RunResult run_audit(const ExperimentConfig& cfg) {
    const nlohmann::json& cmd = cfg.command;
    std::vector<nlohmann::json> model_docs;
    if (cmd.contains("models"))
        for (const auto& m : cmd.at("models")) model_docs.push_back(m);
    else
        model_docs.push_back(cfg.model);
    const long per_model = cmd.value("pairs_per_model", 1000L);

    nlohmann::json out = nlohmann::json::array();
    bool all_ok = true;
    for (const auto& doc : model_docs) {
        auto model = std::make_shared<Manifold>(Manifold::from_json(doc));
        if (cmd.contains("graph_size"))
            model->set_graph_size_hint(cmd.at("graph_size").get<int>());
        NeighborhoodSpec spec = NeighborhoodSpec::from_json(cfg.neighborhood);
        DistanceEngine engine(model, spec, cfg.eps, cfg.cert_samples, cfg.tol);
        long lower_failures = 0;
        for (long i = 0; i < per_model; ++i) {
            const Vec a = model->sample_point(cfg.seed + 2 * i);
            const Vec b = model->sample_point(cfg.seed + 2 * i + 1);
            const RhoBound rb = engine.rho_bracket(a, b);
            if (!rb.diagnostic.empty()) ++lower_failures;
        }
        const PackingAuditReport rep = packing_audit(engine.packing_records());
        all_ok = all_ok && rep.ok && lower_failures == 0;
        nlohmann::json entry = rep.to_json();
        entry["model"] = doc;
        entry["lower_failures"] = lower_failures;
        entry["certificates"] = static_cast<long>(engine.store().size());
        out.push_back(entry);
    }
    return {all_ok ? 0 : 2, dump_json(out)};
}

}  // namespace

RunResult run_command(const std::string& command, const ExperimentConfig& cfg) {
    if (command == "certify") return run_certify(cfg);
    if (command == "rho") return run_rho(cfg);
    if (command == "length") return run_length(cfg);
    if (command == "converge") return run_converge(cfg);
    if (command == "dw") return run_dw(cfg);
    if (command == "capacities") return run_capacities(cfg);
    if (command == "audit") return run_audit(cfg);
    fail(ErrorKind::InvalidArgument, "unknown command '" + command + "'");
}

}  // namespace sml
