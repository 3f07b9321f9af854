#include "survtraj/datasets.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "survtraj/errors.hpp"

namespace survtraj {

using json = nlohmann::json;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& cell, size_t row, const std::string& col) {
    try {
        size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw DataError("row " + std::to_string(row) + ", column '" + col + "': cannot parse '" + cell +
                        "' as a number");
    }
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

int DataSchema::encoded_width() const {
    int w = 0;
    for (const auto& f : features) {
        w += f.kind == FeatureKind::continuous ? 1 : static_cast<int>(f.categories.size());
    }
    return w;
}

std::vector<std::string> DataSchema::encoded_names() const {
    std::vector<std::string> names;
    for (const auto& f : features) {
        if (f.kind == FeatureKind::continuous) {
            names.push_back(f.name);
        } else {
            for (const auto& c : f.categories) names.push_back(f.name + "=" + c);
        }
    }
    return names;
}

std::vector<int> DataSchema::continuous_mask() const {
    std::vector<int> mask;
    for (const auto& f : features) {
        if (f.kind == FeatureKind::continuous) {
            mask.push_back(1);
        } else {
            mask.insert(mask.end(), f.categories.size(), 0);
        }
    }
    return mask;
}

std::string schema_to_json_string(const DataSchema& schema) {
    json j;
    j["features"] = json::array();
    for (const auto& f : schema.features) {
        json jf;
        jf["name"] = f.name;
        jf["kind"] = f.kind == FeatureKind::continuous ? "continuous" : "categorical";
        if (f.kind == FeatureKind::categorical) jf["categories"] = f.categories;
        j["features"].push_back(jf);
    }
    j["time"] = schema.time_name;
    j["event"] = schema.event_name;
    return j.dump(2);
}

DataSchema schema_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("schema: invalid JSON: ") + e.what());
    }
    DataSchema s;
    if (!j.contains("features") || !j["features"].is_array()) {
        throw DataError("schema: missing 'features' array");
    }
    for (const auto& jf : j["features"]) {
        FeatureSpec f;
        f.name = jf.at("name").get<std::string>();
        const std::string kind = jf.value("kind", "continuous");
        if (kind == "continuous") {
            f.kind = FeatureKind::continuous;
        } else if (kind == "categorical") {
            f.kind = FeatureKind::categorical;
            if (!jf.contains("categories")) {
                throw DataError("schema: categorical feature '" + f.name + "' needs categories");
            }
            for (const auto& c : jf["categories"]) f.categories.push_back(c.get<std::string>());
            if (f.categories.empty()) {
                throw DataError("schema: categorical feature '" + f.name + "' has no categories");
            }
        } else {
            throw DataError("schema: unknown kind '" + kind + "' for feature '" + f.name + "'");
        }
        s.features.push_back(std::move(f));
    }
    s.time_name = j.value("time", "time");
    s.event_name = j.value("event", "event");
    return s;
}

DataSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("schema: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return schema_from_json_string(ss.str());
}

void save_schema(const DataSchema& schema, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("schema: cannot write " + path);
    out << schema_to_json_string(schema) << "\n";
}

DataSchema infer_schema_from_csv(const std::string& path, const std::string& time_name,
                                 const std::string& event_name) {
    std::ifstream in(path);
    if (!in) throw DataError("csv: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("csv: " + path + " is empty (header required)");
    DataSchema s;
    s.time_name = time_name;
    s.event_name = event_name;
    bool saw_time = false, saw_event = false;
    for (const auto& raw : split_line(header)) {
        const std::string name = trim(raw);
        if (name == time_name) {
            saw_time = true;
        } else if (name == event_name) {
            saw_event = true;
        } else {
            s.features.push_back({name, FeatureKind::continuous, {}});
        }
    }
    if (!saw_time || !saw_event) {
        throw DataError("csv: " + path + " lacks '" + time_name + "'/'" + event_name + "' columns");
    }
    return s;
}

SurvivalDataset load_csv(const std::string& path, const DataSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("csv: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("csv: " + path + " is empty (header required)");
    auto cols = split_line(header);
    for (auto& c : cols) c = trim(c);

    auto find_col = [&](const std::string& name) {
        const auto it = std::find(cols.begin(), cols.end(), name);
        if (it == cols.end()) throw DataError("csv: missing column '" + name + "' in " + path);
        return static_cast<size_t>(std::distance(cols.begin(), it));
    };

    std::vector<size_t> feat_col(schema.features.size());
    for (size_t i = 0; i < schema.features.size(); ++i) feat_col[i] = find_col(schema.features[i].name);
    const size_t time_col = find_col(schema.time_name);
    const size_t event_col = find_col(schema.event_name);

    SurvivalDataset ds;
    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != cols.size()) {
            throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(cols.size()) +
                            " cells, got " + std::to_string(cells.size()));
        }
        SurvivalRecord rec;
        for (size_t i = 0; i < schema.features.size(); ++i) {
            const auto& f = schema.features[i];
            const std::string cell = trim(cells[feat_col[i]]);
            if (f.kind == FeatureKind::continuous) {
                rec.x.push_back(parse_double(cell, row, f.name));
            } else {
                const auto it = std::find(f.categories.begin(), f.categories.end(), cell);
                if (it == f.categories.end()) {
                    throw DataError("row " + std::to_string(row) + ", column '" + f.name +
                                    "': unknown category '" + cell + "'");
                }
                for (size_t c = 0; c < f.categories.size(); ++c) {
                    rec.x.push_back(c == static_cast<size_t>(std::distance(f.categories.begin(), it))
                                        ? 1.0
                                        : 0.0);
                }
            }
        }
        rec.time = parse_double(trim(cells[time_col]), row, schema.time_name);
        if (rec.time < 0.0) {
            throw DataError("row " + std::to_string(row) + ", column '" + schema.time_name +
                            "': negative time");
        }
        const std::string ev = trim(cells[event_col]);
        if (ev == "0") {
            rec.event = 0;
        } else if (ev == "1") {
            rec.event = 1;
        } else {
            throw DataError("row " + std::to_string(row) + ", column '" + schema.event_name +
                            "': event must be 0 or 1, got '" + ev + "'");
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

void save_csv(const SurvivalDataset& ds, const DataSchema& schema, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("csv: cannot write " + path);
    for (const auto& f : schema.features) out << f.name << ",";
    out << schema.time_name << "," << schema.event_name << "\n";
    for (const auto& rec : ds.records) {
        size_t k = 0;
        for (const auto& f : schema.features) {
            if (f.kind == FeatureKind::continuous) {
                out << fmt_double(rec.x[k]) << ",";
                k += 1;
            } else {
                // argmax over the one-hot block recovers the label
                size_t best = 0;
                for (size_t c = 1; c < f.categories.size(); ++c) {
                    if (rec.x[k + c] > rec.x[k + best]) best = c;
                }
                out << f.categories[best] << ",";
                k += f.categories.size();
            }
        }
        out << fmt_double(rec.time) << "," << rec.event << "\n";
    }
}

void fit_standardization(DataSchema& schema, const SurvivalDataset& train) {
    if (train.empty()) throw ContractError("fit_standardization: empty training set");
    const int w = schema.encoded_width();
    for (const auto& rec : train.records) {
        if (static_cast<int>(rec.x.size()) != w) {
            throw ContractError("fit_standardization: record width " + std::to_string(rec.x.size()) +
                                " != schema width " + std::to_string(w));
        }
    }
    const auto mask = schema.continuous_mask();
    schema.mean.assign(static_cast<size_t>(w), 0.0);
    schema.stddev.assign(static_cast<size_t>(w), 1.0);
    const double n = static_cast<double>(train.size());
    for (int c = 0; c < w; ++c) {
        if (!mask[static_cast<size_t>(c)]) continue;
        double s = 0.0;
        for (const auto& rec : train.records) s += rec.x[static_cast<size_t>(c)];
        const double mu = s / n;
        double ss = 0.0;
        for (const auto& rec : train.records) {
            const double d = rec.x[static_cast<size_t>(c)] - mu;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / n);
        if (!(sd > 0.0)) {
            throw DataError("fit_standardization: column '" + schema.encoded_names()[static_cast<size_t>(c)] +
                            "' is constant");
        }
        schema.mean[static_cast<size_t>(c)] = mu;
        schema.stddev[static_cast<size_t>(c)] = sd;
    }
    schema.fitted = true;
}

std::vector<double> standardize_row(const std::vector<double>& x, const DataSchema& schema) {
    if (!schema.fitted) throw ContractError("standardize_row: schema not fitted");
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - schema.mean[i]) / schema.stddev[i];
    return out;
}

std::vector<double> destandardize_row(const std::vector<double>& x, const DataSchema& schema) {
    if (!schema.fitted) throw ContractError("destandardize_row: schema not fitted");
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * schema.stddev[i] + schema.mean[i];
    return out;
}

SurvivalDataset standardize(const SurvivalDataset& ds, const DataSchema& schema) {
    SurvivalDataset out;
    out.records.reserve(ds.size());
    for (const auto& rec : ds.records) {
        out.records.push_back({standardize_row(rec.x, schema), rec.time, rec.event});
    }
    return out;
}

namespace {

void apply_censoring(SurvivalDataset& ds, double censor_rate, Rng& rng) {
    for (auto& rec : ds.records) {
        if (rng.uniform() < censor_rate) {
            rec.event = 0;
            rec.time *= rng.uniform(0.5, 1.0);
        }
    }
}

}  // namespace

SurvivalDataset synth_linear(int n_per_cluster, double noise, Rng& rng, double censor_rate) {
    if (n_per_cluster < 1) throw ContractError("synth_linear: n must be >= 1");
    // Two segments between cloud-center pairs, parallel and well separated.
    const double cx[2][2] = {{0.0, 4.0}, {8.0, 12.0}};
    const double cy[2][2] = {{0.0, 4.0}, {0.0, 4.0}};
    const double t_lo[2] = {1.0, 10.0};
    const double t_hi[2] = {10.0, 20.0};
    SurvivalDataset ds;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < n_per_cluster; ++i) {
            const double u = rng.uniform();
            SurvivalRecord rec;
            rec.x = {cx[c][0] + u * (cx[c][1] - cx[c][0]) + noise * rng.normal(),
                     cy[c][0] + u * (cy[c][1] - cy[c][0]) + noise * rng.normal()};
            rec.time = t_lo[c] + u * (t_hi[c] - t_lo[c]);
            rec.event = 1;
            ds.records.push_back(std::move(rec));
        }
    }
    apply_censoring(ds, censor_rate, rng);
    return ds;
}

SurvivalDataset synth_two_parabolas(int n_per_cluster, double noise, Rng& rng, double censor_rate) {
    if (n_per_cluster < 1) throw ContractError("synth_two_parabolas: n must be >= 1");
    // Opposed arcs, event time affine in x1 with a shared range.
    const double a[2] = {0.5, -0.5};
    const double b[2] = {-1.0, 1.0};
    SurvivalDataset ds;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < n_per_cluster; ++i) {
            const double x1 = rng.uniform(-2.0, 2.0);
            SurvivalRecord rec;
            rec.x = {x1 + noise * rng.normal(), a[c] * x1 * x1 + b[c] + noise * rng.normal()};
            rec.time = 5.0 + 2.5 * (x1 + 2.0);
            rec.event = 1;
            ds.records.push_back(std::move(rec));
        }
    }
    apply_censoring(ds, censor_rate, rng);
    return ds;
}

SurvivalDataset synth_two_circles(int n_per_cluster, double noise, Rng& rng, double censor_rate) {
    if (n_per_cluster < 1) throw ContractError("synth_two_circles: n must be >= 1");
    // Overlapping sectors of close radii; base times far apart, small jitter.
    const double radius[2] = {1.0, 1.15};
    const double base_time[2] = {10.0, 100.0};
    const double angle_lo = 0.0, angle_hi = 1.5 * M_PI;
    SurvivalDataset ds;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < n_per_cluster; ++i) {
            const double angle = rng.uniform(angle_lo, angle_hi);
            SurvivalRecord rec;
            rec.x = {radius[c] * std::cos(angle) + noise * rng.normal(),
                     radius[c] * std::sin(angle) + noise * rng.normal()};
            rec.time = base_time[c] * (1.0 + 0.02 * rng.normal());
            if (rec.time < 0.0) rec.time = 0.0;
            rec.event = 1;
            ds.records.push_back(std::move(rec));
        }
    }
    apply_censoring(ds, censor_rate, rng);
    return ds;
}

DataSchema synth_schema() {
    DataSchema s;
    s.features = {{"x1", FeatureKind::continuous, {}}, {"x2", FeatureKind::continuous, {}}};
    s.time_name = "time";
    s.event_name = "event";
    return s;
}

}  // namespace survtraj
