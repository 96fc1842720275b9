#include "vugsim/scenario.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace vugsim {

using nlohmann::json;

namespace {

const char* const kContinuumKeys[kContinua] = {"matrix", "fracture", "vug"};

/// A JSON value together with its dotted path, for error messages.
class Node {
public:
    Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const json& value() const { return value_; }

    void expect_object(std::initializer_list<const char*> allowed) const
    {
        if (!value_.is_object()) {
            fail("expected an object");
        }
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& [k, v] : value_.items()) {
            if (keys.count(k) == 0) {
                throw ValidationError(child_path(k) + ": unknown field");
            }
        }
    }

    bool has(const std::string& key) const { return value_.contains(key); }
    Node child(const std::string& key) const { return Node(value_.at(key), child_path(key)); }
    Node element(std::size_t i) const { return Node(value_.at(i), path_ + "[" + std::to_string(i) + "]"); }

    double number(const std::string& key, double fallback) const
    {
        return has(key) ? child(key).as_number() : fallback;
    }
    Index integer(const std::string& key, Index fallback) const
    {
        return has(key) ? child(key).as_integer() : fallback;
    }
    std::string text(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? child(key).as_text() : fallback;
    }

    double as_number() const
    {
        if (!value_.is_number()) {
            fail("expected a number");
        }
        const double v = value_.get<double>();
        if (!std::isfinite(v)) {
            fail("must be finite");
        }
        return v;
    }
    Index as_integer() const
    {
        if (!value_.is_number_integer()) {
            fail("expected an integer");
        }
        return value_.get<Index>();
    }
    std::string as_text() const
    {
        if (!value_.is_string()) {
            fail("expected a string");
        }
        return value_.get<std::string>();
    }
    void expect_array() const
    {
        if (!value_.is_array()) {
            fail("expected an array");
        }
    }
    Point as_point() const
    {
        if (!value_.is_array() || value_.size() != 2) {
            fail("expected [x, y]");
        }
        return {element(0).as_number(), element(1).as_number()};
    }

    [[noreturn]] void fail(const std::string& what) const { throw ValidationError(path_ + ": " + what); }

private:
    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& value_;
    std::string path_;
};

Continuum parse_continuum(const Node& n)
{
    const std::string name = n.as_text();
    for (int c = 0; c < kContinua; ++c) {
        if (name == kContinuumKeys[c]) {
            return static_cast<Continuum>(c);
        }
    }
    n.fail("unknown continuum '" + name + "' (expected matrix, fracture or vug)");
}

PermeabilitySpec parse_permeability(const Node& n, const std::string& base_dir, const PermeabilitySpec& fallback)
{
    PermeabilitySpec spec = fallback;
    if (n.value().is_number()) {
        spec = PermeabilitySpec{};
        spec.value = n.as_number();
        return spec;
    }
    n.expect_object({"type", "value", "seed", "contrast", "minimum", "path"});
    const std::string type = n.text("type", "constant");
    spec = PermeabilitySpec{};
    if (type == "constant") {
        spec.kind = PermeabilitySpec::Kind::Constant;
        spec.value = n.number("value", fallback.value);
    } else if (type == "synthetic") {
        spec.kind = PermeabilitySpec::Kind::Synthetic;
        const Index seed = n.integer("seed", 0);
        if (seed < 0) {
            n.child("seed").fail("must be non-negative");
        }
        spec.seed = static_cast<std::uint64_t>(seed);
        spec.contrast = n.number("contrast", 1e4);
        spec.minimum = n.number("minimum", fallback.value);
    } else if (type == "csv") {
        spec.kind = PermeabilitySpec::Kind::Csv;
        if (!n.has("path")) {
            n.fail("csv permeability needs a path");
        }
        const std::filesystem::path p(n.child("path").as_text());
        spec.path = p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).lexically_normal().string();
    } else {
        n.child("type").fail("unknown permeability type '" + type + "' (expected constant, synthetic or csv)");
    }
    return spec;
}

json permeability_json(const PermeabilitySpec& p)
{
    switch (p.kind) {
    case PermeabilitySpec::Kind::Constant: return {{"type", "constant"}, {"value", p.value}};
    case PermeabilitySpec::Kind::Synthetic:
        return {{"type", "synthetic"}, {"seed", p.seed}, {"contrast", p.contrast}, {"minimum", p.minimum}};
    case PermeabilitySpec::Kind::Csv: return {{"type", "csv"}, {"path", p.path}};
    }
    return {};
}

}  // namespace

const char* side_name(unsigned side)
{
    switch (side) {
    case kLeft: return "left";
    case kRight: return "right";
    case kBottom: return "bottom";
    case kTop: return "top";
    default: return "unknown";
    }
}

ScenarioConfig::ScenarioConfig()
{
    const double porosity[kContinua] = {0.2, 0.01, 0.1};
    const double permeability[kContinua] = {1e-14, 1e-12, 1e-13};
    for (int c = 0; c < kContinua; ++c) {
        continua[static_cast<std::size_t>(c)].porosity = porosity[c];
        continua[static_cast<std::size_t>(c)].permeability.value = permeability[c];
    }
}

void ScenarioConfig::validate() const
{
    require(domain.width() > 0.0 && domain.height() > 0.0, "domain.size: extent must be positive");
    require(nx >= 1 && ny >= 1, "mesh: nx and ny must be at least 1");
    require(mx >= 1 && my >= 1, "coarse: mx and my must be at least 1");
    require(nx % mx == 0, "coarse.mx: coarse grid not nested (mx=" + std::to_string(mx) +
                              " does not divide nx=" + std::to_string(nx) + ")");
    require(ny % my == 0, "coarse.my: coarse grid not nested (my=" + std::to_string(my) +
                              " does not divide ny=" + std::to_string(ny) + ")");
    fluid.validate();
    for (int c = 0; c < kContinua; ++c) {
        const std::string where = std::string("continua.") + kContinuumKeys[c];
        const auto& spec = continua[static_cast<std::size_t>(c)];
        require(spec.porosity > 0.0 && spec.porosity <= 1.0, where + ".porosity must lie in (0, 1]");
        const auto& p = spec.permeability;
        switch (p.kind) {
        case PermeabilitySpec::Kind::Constant:
            require(p.value > 0.0, where + ".permeability must be positive");
            break;
        case PermeabilitySpec::Kind::Synthetic:
            require(p.minimum > 0.0, where + ".permeability.minimum must be positive");
            require(p.contrast >= 1.0, where + ".permeability.contrast must be at least 1");
            break;
        case PermeabilitySpec::Kind::Csv:
            require(!p.path.empty(), where + ".permeability.path must not be empty");
            break;
        }
    }
    network.validate();
    require(shape_factor >= 0.0, "exchange.shape_factor must be positive or \"auto\"");
    for (std::size_t w = 0; w < wells.size(); ++w) {
        require(domain.contains(wells[w].location, 1e-9 * std::max(domain.width(), domain.height())),
                "wells[" + std::to_string(w) + "]: location outside the domain");
    }
    time.validate();
    require(basis_count >= 1, "basis.count must be at least 1");
    require(basis_threshold >= 0.0, "basis.threshold must be non-negative");
}

std::string ScenarioConfig::canonical_json() const
{
    json j;
    j["domain"] = {{"origin", {domain.lo.x, domain.lo.y}}, {"size", {domain.width(), domain.height()}}};
    j["mesh"] = {{"nx", nx}, {"ny", ny}};
    j["coarse"] = {{"mx", mx}, {"my", my}};
    j["fluid"] = {{"compressibility", fluid.compressibility},
                  {"viscosity", fluid.viscosity},
                  {"fvf_reference", fluid.fvf_reference},
                  {"reference_pressure", fluid.reference_pressure}};
    for (int c = 0; c < kContinua; ++c) {
        const auto& spec = continua[static_cast<std::size_t>(c)];
        j["continua"][kContinuumKeys[c]] = {{"porosity", spec.porosity},
                                            {"permeability", permeability_json(spec.permeability)}};
    }
    j["fractures"] = json::array();
    for (const auto& f : network.fractures) {
        json pts = json::array();
        for (const auto& p : f.polyline) {
            pts.push_back({p.x, p.y});
        }
        j["fractures"].push_back(
            {{"points", pts}, {"aperture", f.aperture}, {"permeability", f.permeability}, {"porosity", f.porosity}});
    }
    j["exchange"]["shape_factor"] = shape_factor > 0.0 ? json(shape_factor) : json("auto");
    for (std::size_t s = 0; s < kSides.size(); ++s) {
        const auto& b = boundary[s];
        j["boundary"][side_name(kSides[s])] = b.kind == BoundarySpec::Kind::Dirichlet
                                                  ? json{{"type", "dirichlet"}, {"value", b.value}}
                                                  : json{{"type", "neumann"}, {"flux", b.value}};
    }
    j["wells"] = json::array();
    for (const auto& w : wells) {
        j["wells"].push_back({{"location", {w.location.x, w.location.y}},
                              {"rate", w.rate},
                              {"continuum", kContinuumKeys[static_cast<int>(w.continuum)]}});
    }
    j["initial"] = {{"pressure", initial_pressure}};
    j["time"] = {{"dt", time.dt},
                 {"final_time", time.final_time},
                 {"scheme", scheme_name(time.scheme)},
                 {"tolerance", time.tolerance},
                 {"max_iterations", time.max_iterations}};
    j["basis"] = {{"count", basis_count}};
    if (basis_threshold > 0.0) {
        j["basis"]["threshold"] = basis_threshold;
    }
    j["output"] = {{"dir", output_dir}};
    return j.dump();
}

std::string ScenarioConfig::hash() const
{
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char ch : canonical_json()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

ScenarioConfig parse_config(const std::string& json_text, const std::string& base_dir)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    const Node root(doc, "");
    if (!doc.is_object()) {
        throw ValidationError("config: top level must be an object");
    }
    root.expect_object({"domain", "mesh", "coarse", "fluid", "continua", "fractures", "exchange", "boundary", "wells",
                        "initial", "time", "basis", "output", "description"});
    ScenarioConfig cfg;

    if (root.has("domain")) {
        const Node n = root.child("domain");
        n.expect_object({"origin", "size"});
        const Point origin = n.has("origin") ? n.child("origin").as_point() : cfg.domain.lo;
        const Point size = n.has("size") ? n.child("size").as_point() : Point{cfg.domain.width(), cfg.domain.height()};
        if (!(size.x > 0.0 && size.y > 0.0)) {
            n.child("size").fail("extent must be positive");
        }
        cfg.domain = Box{origin, {origin.x + size.x, origin.y + size.y}};
    }
    if (root.has("mesh")) {
        const Node n = root.child("mesh");
        n.expect_object({"nx", "ny"});
        cfg.nx = n.integer("nx", cfg.nx);
        cfg.ny = n.integer("ny", cfg.ny);
    }
    if (root.has("coarse")) {
        const Node n = root.child("coarse");
        n.expect_object({"mx", "my"});
        cfg.mx = n.integer("mx", cfg.mx);
        cfg.my = n.integer("my", cfg.my);
    }
    if (root.has("fluid")) {
        const Node n = root.child("fluid");
        n.expect_object({"compressibility", "viscosity", "fvf_reference", "reference_pressure"});
        cfg.fluid.compressibility = n.number("compressibility", cfg.fluid.compressibility);
        cfg.fluid.viscosity = n.number("viscosity", cfg.fluid.viscosity);
        cfg.fluid.fvf_reference = n.number("fvf_reference", cfg.fluid.fvf_reference);
        cfg.fluid.reference_pressure = n.number("reference_pressure", cfg.fluid.reference_pressure);
    }
    if (root.has("continua")) {
        const Node n = root.child("continua");
        n.expect_object({"matrix", "fracture", "vug"});
        for (int c = 0; c < kContinua; ++c) {
            if (!n.has(kContinuumKeys[c])) {
                continue;
            }
            const Node cn = n.child(kContinuumKeys[c]);
            cn.expect_object({"porosity", "permeability"});
            auto& spec = cfg.continua[static_cast<std::size_t>(c)];
            spec.porosity = cn.number("porosity", spec.porosity);
            if (spec.porosity <= 0.0 || spec.porosity > 1.0) {
                cn.child("porosity").fail("must lie in (0, 1]");
            }
            if (cn.has("permeability")) {
                spec.permeability = parse_permeability(cn.child("permeability"), base_dir, spec.permeability);
            }
        }
    }
    if (root.has("fractures")) {
        const Node n = root.child("fractures");
        n.expect_array();
        for (std::size_t f = 0; f < n.value().size(); ++f) {
            const Node fn = n.element(f);
            fn.expect_object({"points", "aperture", "permeability", "porosity"});
            Fracture fr;
            if (!fn.has("points")) {
                fn.fail("missing points");
            }
            const Node pts = fn.child("points");
            pts.expect_array();
            for (std::size_t k = 0; k < pts.value().size(); ++k) {
                fr.polyline.push_back(pts.element(k).as_point());
            }
            fr.aperture = fn.number("aperture", fr.aperture);
            fr.permeability = fn.number("permeability", fr.permeability);
            fr.porosity = fn.number("porosity", fr.porosity);
            cfg.network.fractures.push_back(std::move(fr));
        }
    }
    if (root.has("exchange")) {
        const Node n = root.child("exchange");
        n.expect_object({"shape_factor"});
        if (n.has("shape_factor")) {
            const Node sf = n.child("shape_factor");
            if (sf.value().is_string()) {
                if (sf.as_text() != "auto") {
                    sf.fail("expected a positive number or \"auto\"");
                }
                cfg.shape_factor = 0.0;
            } else {
                cfg.shape_factor = sf.as_number();
                if (cfg.shape_factor <= 0.0) {
                    sf.fail("must be positive");
                }
            }
        }
    }
    if (root.has("boundary")) {
        const Node n = root.child("boundary");
        n.expect_object({"left", "right", "bottom", "top"});
        for (std::size_t s = 0; s < kSides.size(); ++s) {
            const char* name = side_name(kSides[s]);
            if (!n.has(name)) {
                continue;
            }
            const Node bn = n.child(name);
            bn.expect_object({"type", "value", "flux"});
            const std::string type = bn.text("type", "neumann");
            auto& b = cfg.boundary[s];
            if (type == "dirichlet") {
                if (!bn.has("value")) {
                    bn.fail("dirichlet boundary needs a value");
                }
                b = {BoundarySpec::Kind::Dirichlet, bn.child("value").as_number()};
            } else if (type == "neumann") {
                b = {BoundarySpec::Kind::Neumann, bn.number("flux", 0.0)};
            } else {
                bn.child("type").fail("unknown boundary type '" + type + "' (expected dirichlet or neumann)");
            }
        }
    }
    if (root.has("wells")) {
        const Node n = root.child("wells");
        n.expect_array();
        for (std::size_t w = 0; w < n.value().size(); ++w) {
            const Node wn = n.element(w);
            wn.expect_object({"location", "rate", "continuum"});
            PointWell well;
            if (!wn.has("location")) {
                wn.fail("missing location");
            }
            well.location = wn.child("location").as_point();
            well.rate = wn.number("rate", 0.0);
            if (wn.has("continuum")) {
                well.continuum = parse_continuum(wn.child("continuum"));
            }
            cfg.wells.push_back(well);
        }
    }
    if (root.has("initial")) {
        const Node n = root.child("initial");
        n.expect_object({"pressure"});
        cfg.initial_pressure = n.number("pressure", cfg.initial_pressure);
    }
    if (root.has("time")) {
        const Node n = root.child("time");
        n.expect_object({"dt", "final_time", "scheme", "tolerance", "max_iterations"});
        cfg.time.dt = n.number("dt", cfg.time.dt);
        cfg.time.final_time = n.number("final_time", cfg.time.final_time);
        if (n.has("scheme")) {
            try {
                cfg.time.scheme = parse_scheme(n.child("scheme").as_text());
            } catch (const ValidationError& e) {
                n.child("scheme").fail(e.what());
            }
        }
        cfg.time.tolerance = n.number("tolerance", cfg.time.tolerance);
        cfg.time.max_iterations = n.integer("max_iterations", cfg.time.max_iterations);
    }
    if (root.has("basis")) {
        const Node n = root.child("basis");
        n.expect_object({"count", "threshold"});
        cfg.basis_count = n.integer("count", cfg.basis_count);
        cfg.basis_threshold = n.number("threshold", cfg.basis_threshold);
    }
    if (root.has("output")) {
        const Node n = root.child("output");
        n.expect_object({"dir"});
        cfg.output_dir = n.text("dir", cfg.output_dir);
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot read config file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(buf.str(), dir.empty() ? "." : dir.string());
}

}  // namespace vugsim
