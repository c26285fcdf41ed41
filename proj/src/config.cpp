#include "catderiv/config.hpp"

#include "catderiv/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace catderiv {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : keys) ok = ok || k == a;
        if (!ok) throw ConfigError(join(path, k), "unknown key");
    }
}

const json& require(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw ConfigError(join(path, key), "missing");
    return j.at(key);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
    return v;
}

double req_number(const json& j, const std::string& path, const char* key) {
    return number(require(j, path, key), join(path, key));
}

double opt_number(const json& j, const std::string& path, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return number(j.at(key), join(path, key));
}

long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<long>();
}

long opt_integer(const json& j, const std::string& path, const char* key, long fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return integer(j.at(key), join(path, key));
}

std::vector<double> number_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

std::string kind_of(const json& j, const std::string& path) {
    const json& k = require(j, path, "kind");
    if (!k.is_string()) throw ConfigError(join(path, "kind"), "expected a string");
    return k.get<std::string>();
}

SeverityLaw parse_severity(const json& j, const std::string& path) {
    const std::string kind = kind_of(j, path);
    if (kind == "gamma") {
        allow_keys(j, path, {"kind", "shape", "scale"});
        return GammaSeverity{req_number(j, path, "shape"), req_number(j, path, "scale")};
    }
    if (kind == "tabulated") {
        allow_keys(j, path, {"kind", "dz", "values"});
        return TabulatedSeverity{req_number(j, path, "dz"), number_array(require(j, path, "values"), join(path, "values"))};
    }
    throw ConfigError(join(path, "kind"), "expected \"gamma\" or \"tabulated\"");
}

CatCountLaw parse_cat_count(const json& j, const std::string& path) {
    const std::string kind = kind_of(j, path);
    if (kind == "shifted_poisson") {
        allow_keys(j, path, {"kind", "shift", "rate"});
        return ShiftedPoisson{static_cast<int>(integer(require(j, path, "shift"), join(path, "shift"))),
                              req_number(j, path, "rate")};
    }
    if (kind == "tabulated") {
        allow_keys(j, path, {"kind", "probabilities", "truncation_mass"});
        return TabulatedPmf{number_array(require(j, path, "probabilities"), join(path, "probabilities")),
                            opt_number(j, path, "truncation_mass", 1e-12)};
    }
    throw ConfigError(join(path, "kind"), "expected \"shifted_poisson\" or \"tabulated\"");
}

ClaimsModel parse_model(const json& j) {
    const std::string p = "model";
    allow_keys(j, p, {"lambda1", "lambda2", "severity", "cat_count", "eta", "horizon"});
    ClaimsModel m;
    m.lambda1 = req_number(j, p, "lambda1");
    m.lambda2 = req_number(j, p, "lambda2");
    m.severity = parse_severity(require(j, p, "severity"), "model.severity");
    if (j.contains("cat_count")) m.cat_count = parse_cat_count(j.at("cat_count"), "model.cat_count");
    m.eta = req_number(j, p, "eta");
    m.horizon = req_number(j, p, "horizon");
    check_model_fields(m);
    return m;
}

MarketModel parse_market(const json& j, const ClaimsModel& model) {
    const std::string p = "market";
    allow_keys(j, p, {"clients", "max_loading", "demand"});
    MarketModel mk;
    mk.clients = integer(require(j, p, "clients"), "market.clients");
    mk.max_loading = req_number(j, p, "max_loading");
    if (j.contains("demand")) {
        const json& d = j.at("demand");
        const std::string kind = kind_of(d, "market.demand");
        if (kind == "linear") {
            allow_keys(d, "market.demand", {"kind"});
        } else if (kind == "tabulated") {
            allow_keys(d, "market.demand", {"kind", "theta", "demand"});
            mk.demand = TabulatedDemand{number_array(require(d, "market.demand", "theta"), "market.demand.theta"),
                                        number_array(require(d, "market.demand", "demand"), "market.demand.demand")};
        } else {
            throw ConfigError("market.demand.kind", "expected \"linear\" or \"tabulated\"");
        }
    }
    if (mk.clients <= 0) throw ConfigError("market.clients", "must be positive");
    mk.fair_premium = fair_premium(model, mk.clients);
    check_market_fields(mk);
    return mk;
}

PayoffSpec parse_payoff(const json& j) {
    const std::string p = "payoff";
    const std::string kind = kind_of(j, p);
    PayoffSpec out;
    if (kind == "spread") {
        allow_keys(j, p, {"kind", "strike", "cap"});
        out = SpreadOption{req_number(j, p, "strike"), req_number(j, p, "cap")};
    } else if (kind == "zero") {
        allow_keys(j, p, {"kind"});
        out = ZeroPayoff{};
    } else if (kind == "tabulated") {
        allow_keys(j, p, {"kind", "c", "value"});
        out = TabulatedPayoff{number_array(require(j, p, "c"), "payoff.c"), number_array(require(j, p, "value"), "payoff.value")};
    } else {
        throw ConfigError("payoff.kind", "expected \"spread\", \"zero\" or \"tabulated\"");
    }
    check_payoff(out);
    return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, bool require_usable) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    allow_keys(root, "", {"description", "model", "market", "payoff", "grids", "risk", "output"});

    ExperimentConfig c;
    if (root.contains("description")) {
        if (!root.at("description").is_string()) throw ConfigError("description", "expected a string");
        c.description = root.at("description").get<std::string>();
    }
    c.model = parse_model(require(root, "", "model"));
    c.market = parse_market(require(root, "", "market"), c.model);
    c.payoff = root.contains("payoff") ? parse_payoff(root.at("payoff")) : PayoffSpec{ZeroPayoff{}};

    const json grids = root.contains("grids") ? root.at("grids") : json::object();
    allow_keys(grids, "grids", {"z_max", "n_points", "c_max", "n_c", "n_t", "n_xi"});
    const ValidationReport rep = validate_assumptions(c.model);
    if (!rep.usable && !require_usable) {
        c.fine.z_max = 0.0;
        return c;
    }
    if (!rep.usable) {
        std::string msg = "model violates the standing assumptions";
        for (const auto& m : rep.messages) msg += "; " + m;
        throw ConfigError("model", msg);
    }
    c.fine.n_points = static_cast<std::size_t>(opt_integer(grids, "grids", "n_points", 16384));
    c.fine.z_max = opt_number(grids, "grids", "z_max", 0.0);
    if (!(c.fine.z_max > 0.0)) c.fine.z_max = chernoff_z_max(c.model);
    try {
        check_grid_spec(c.fine);
    } catch (const GridError& e) {
        throw ConfigError("grids.n_points", e.what());
    }
    c.grid.horizon = c.model.horizon;
    c.grid.n_c = static_cast<int>(opt_integer(grids, "grids", "n_c", 1024));
    c.grid.n_xi = static_cast<int>(opt_integer(grids, "grids", "n_xi", 100));
    c.grid.n_t = static_cast<int>(opt_integer(grids, "grids", "n_t", default_time_steps(c.model)));
    c.grid.c_max = opt_number(grids, "grids", "c_max", payoff_flat_from(c.payoff) + c.fine.z_max);
    if (c.grid.n_c < 2) throw ConfigError("grids.n_c", "must be >= 2");
    if (c.grid.n_t < 1) throw ConfigError("grids.n_t", "must be >= 1");
    if (c.grid.n_xi < 5) throw ConfigError("grids.n_xi", "must be >= 5");
    if (!(c.grid.c_max > 0.0)) throw ConfigError("grids.c_max", "must be > 0");
    if (c.grid.c_max < (payoff_flat_from(c.payoff) + c.fine.z_max) * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "must be at least the flat-payoff start plus z_max = " << payoff_flat_from(c.payoff) + c.fine.z_max;
        throw ConfigError("grids.c_max", os.str());
    }

    const json risk = root.contains("risk") ? root.at("risk") : json::object();
    allow_keys(risk, "risk", {"sigma_b", "u_max", "n_u", "n_rho", "n_paths", "seed", "initial_wealth", "initial_claims"});
    c.risk.sigma_b = opt_number(risk, "risk", "sigma_b", c.model.eta);
    c.risk.u_max = opt_number(risk, "risk", "u_max", 0.0);
    c.risk.n_u = static_cast<int>(opt_integer(risk, "risk", "n_u", 256));
    c.risk.n_rho = static_cast<int>(opt_integer(risk, "risk", "n_rho", 1001));
    c.risk.n_paths = opt_integer(risk, "risk", "n_paths", 100000);
    if (risk.contains("seed")) {
        const json& s = risk.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            throw ConfigError("risk.seed", "expected a nonnegative integer");
        c.risk.seed = s.get<std::uint64_t>();
    }
    c.risk.initial_wealth = opt_number(risk, "risk", "initial_wealth", 0.0);
    c.risk.initial_claims = opt_number(risk, "risk", "initial_claims", 0.0);
    if (!(c.risk.sigma_b > 0.0) || !(c.risk.sigma_b < severity_mgf_boundary(c.model.severity)))
        throw ConfigError("risk.sigma_b", "must lie strictly between 0 and the severity MGF boundary");
    if (c.risk.u_max < 0.0) throw ConfigError("risk.u_max", "must be >= 0 (0 selects it adaptively)");
    if (c.risk.n_u < 2) throw ConfigError("risk.n_u", "must be >= 2");
    if (c.risk.n_rho < 2) throw ConfigError("risk.n_rho", "must be >= 2");
    if (c.risk.n_paths < 1) throw ConfigError("risk.n_paths", "must be >= 1");
    if (c.risk.initial_claims < 0.0) throw ConfigError("risk.initial_claims", "must be >= 0");

    if (root.contains("output")) {
        const json& o = root.at("output");
        allow_keys(o, "output", {"directory"});
        if (o.contains("directory")) {
            if (!o.at("directory").is_string()) throw ConfigError("output.directory", "expected a string");
            c.output_directory = o.at("directory").get<std::string>();
        }
    }
    return c;
}

ExperimentConfig load_config(const std::string& path, bool require_usable) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), require_usable);
}

}  // namespace catderiv
