#include "izsfd/dataset.hpp"

#include "izsfd/binio.hpp"
#include "izsfd/error.hpp"
#include "izsfd/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <string_view>

namespace izsfd {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::size_t Dataset::count(Split s) const { return static_cast<std::size_t>(std::count(split.begin(), split.end(), s)); }

std::vector<std::size_t> Dataset::rows(Split s, const std::set<CategoryId>& categories) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (split[i] == s && categories.count(labels[i])) out.push_back(i);
    return out;
}

void Dataset::validate() const {
    if (static_cast<std::size_t>(x.rows()) != labels.size()) throw InvalidInput("feature and label counts differ");
    if (split.size() != labels.size()) throw InvalidInput("split tags and label counts differ");
    require_finite(x, "dataset features");
    for (auto s : split)
        if (s != Split::train && s != Split::test) throw InvalidInput("unknown split tag");
    for (auto y : labels)
        if (!attributes.contains(y))
            throw InvalidInput("label " + std::to_string(y) + " has no attribute description");
}

// ---- canonical format -------------------------------------------------------

namespace {

constexpr const char* kFormat = "izsfd-dataset";
constexpr int kVersion = 1;

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    return in;
}

void write_matrix(const fs::path& p, const Matrix& m) {
    auto out = open_out(p);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) binio::put_f64(out, m(i, j));
    if (!out) throw IoError("write failed: " + p.string());
}

Matrix read_matrix(const fs::path& p, Eigen::Index rows, Eigen::Index cols) {
    auto in = open_in(p);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = binio::get_f64(in);
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in " + p.string());
    return m;
}

}  // namespace

void save_dataset(const Dataset& data, const fs::path& dir) {
    data.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    json manifest;
    manifest["format"] = kFormat;
    manifest["version"] = kVersion;
    manifest["rows"] = data.size();
    manifest["dim"] = data.dim();
    manifest["cardinalities"] = data.attributes.schema().cardinalities();
    manifest["categories"] = data.attributes.ids();
    manifest["counts"] = {{"train", data.count(Split::train)}, {"test", data.count(Split::test)}};
    manifest["files"] = {{"features", "features.f64"},
                         {"labels", "labels.i64"},
                         {"split", "split.u8"},
                         {"attributes", "attributes.f64"}};
    {
        auto out = open_out(dir / "manifest.json");
        out << manifest.dump(2) << '\n';
    }
    write_matrix(dir / "features.f64", data.x);
    write_matrix(dir / "attributes.f64", data.attributes.matrix());
    {
        auto out = open_out(dir / "labels.i64");
        for (auto y : data.labels) binio::put_i64(out, y);
    }
    {
        auto out = open_out(dir / "split.u8");
        for (auto s : data.split) out.put(static_cast<char>(s));
    }
}

Dataset load_dataset(const fs::path& dir) {
    json manifest;
    try {
        auto in = open_in(dir / "manifest.json");
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed dataset manifest in " + dir.string() + ": " + e.what());
    }
    try {
        if (manifest.at("format") != kFormat) throw IoError(dir.string() + " is not a dataset directory");
        if (manifest.at("version") != kVersion) throw IoError("unsupported dataset version");
        const auto n = manifest.at("rows").get<Eigen::Index>();
        const auto d = manifest.at("dim").get<Eigen::Index>();
        const AttributeSchema schema(manifest.at("cardinalities").get<std::vector<Eigen::Index>>());
        const auto ids = manifest.at("categories").get<std::vector<CategoryId>>();
        const auto& files = manifest.at("files");

        Dataset data;
        data.x = read_matrix(dir / files.at("features").get<std::string>(), n, d);
        const Matrix a = read_matrix(dir / files.at("attributes").get<std::string>(),
                                     static_cast<Eigen::Index>(ids.size()), schema.coded_width());
        data.attributes = FaultAttributeMatrix(schema, ids, a);
        {
            auto in = open_in(dir / files.at("labels").get<std::string>());
            for (Eigen::Index i = 0; i < n; ++i) data.labels.push_back(static_cast<CategoryId>(binio::get_i64(in)));
        }
        {
            auto in = open_in(dir / files.at("split").get<std::string>());
            for (Eigen::Index i = 0; i < n; ++i) {
                const int c = in.get();
                if (c == std::char_traits<char>::eof()) throw IoError("split file is short");
                data.split.push_back(static_cast<Split>(c));
            }
        }
        data.validate();
        return data;
    } catch (const json::exception& e) {
        throw IoError("malformed dataset manifest in " + dir.string() + ": " + e.what());
    }
}

void assign_split(Dataset& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw InvalidInput("test fraction must lie in [0, 1)");
    std::map<CategoryId, std::vector<std::size_t>> by_cat;
    for (std::size_t i = 0; i < data.labels.size(); ++i) by_cat[data.labels[i]].push_back(i);
    data.split.assign(data.labels.size(), Split::train);
    for (auto& [id, idx] : by_cat) {
        Rng rng = Rng::stream(seed, "assign-split", {static_cast<std::uint64_t>(id)});
        rng.shuffle(idx);
        auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
        n_test = std::min(n_test, idx.size() - 1);
        for (std::size_t i = 0; i < n_test; ++i) data.split[idx[i]] = Split::test;
    }
}

// ---- synthetic ----------------------------------------------------------------

void SyntheticSpec::validate() const {
    if (cardinalities.empty()) throw SpecError("at least one attribute is required");
    for (auto c : cardinalities)
        if (c < 2) throw SpecError("attribute cardinalities must be at least 2");
    if (categories < 1) throw SpecError("at least one category is required");
    if (dim < 1) throw SpecError("feature dimension must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw SpecError("sigma must be positive");
    if (!(direction_scale > 0.0) || !std::isfinite(direction_scale))
        throw SpecError("direction_scale must be positive");
    if (train_per_category < 1) throw SpecError("each category needs training rows");
    double combos = 1.0;
    for (auto c : cardinalities) combos *= static_cast<double>(c);
    if (static_cast<double>(categories) > combos)
        throw SpecError("more categories than distinct attribute tuples");
}

SyntheticTruth synthetic_truth(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticTruth t;
    t.schema = AttributeSchema(spec.cardinalities);
    const auto beta = spec.cardinalities.size();

    Rng rows_rng = Rng::stream(spec.seed, "synthetic-attributes");
    std::set<std::vector<int>> used;
    while (t.raw.size() < spec.categories) {
        std::vector<int> raw(beta);
        for (std::size_t g = 0; g < beta; ++g)
            raw[g] = static_cast<int>(rows_rng.below(static_cast<std::uint64_t>(spec.cardinalities[g])));
        if (used.insert(raw).second) t.raw.push_back(std::move(raw));
    }

    Rng dir_rng = Rng::stream(spec.seed, "synthetic-directions");
    const double s = spec.direction_scale / std::sqrt(static_cast<double>(spec.dim));
    t.directions = Matrix(t.schema.coded_width(), spec.dim);
    for (Eigen::Index i = 0; i < t.directions.rows(); ++i)
        for (Eigen::Index j = 0; j < spec.dim; ++j) t.directions(i, j) = s * dir_rng.normal();

    t.means = Matrix::Zero(static_cast<Eigen::Index>(spec.categories), spec.dim);
    for (std::size_t c = 0; c < spec.categories; ++c)
        for (std::size_t g = 0; g < beta; ++g)
            t.means.row(static_cast<Eigen::Index>(c)) += t.directions.row(t.schema.offset(g) + t.raw[c][g]);
    return t;
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
    const SyntheticTruth t = synthetic_truth(spec);
    const std::size_t per = spec.train_per_category + spec.test_per_category;
    const auto n = static_cast<Eigen::Index>(spec.categories * per);

    Dataset data;
    data.x = Matrix(n, spec.dim);
    Matrix a(static_cast<Eigen::Index>(spec.categories), t.schema.coded_width());
    std::vector<CategoryId> ids;
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < spec.categories; ++c) {
        const auto id = static_cast<CategoryId>(c);
        ids.push_back(id);
        a.row(static_cast<Eigen::Index>(c)) = encode_attributes(t.raw[c], t.schema);
        Rng rng = Rng::stream(spec.seed, "synthetic-samples", {c});
        for (std::size_t i = 0; i < per; ++i, ++r) {
            for (Eigen::Index j = 0; j < spec.dim; ++j)
                data.x(r, j) = t.means(static_cast<Eigen::Index>(c), j) + spec.sigma * rng.normal();
            data.labels.push_back(id);
            data.split.push_back(i < spec.train_per_category ? Split::train : Split::test);
        }
    }
    try {
        data.attributes = FaultAttributeMatrix(t.schema, ids, a);
    } catch (const InvalidAttribute& e) {
        throw SpecError(std::string("duplicate attribute rows: ") + e.what());
    }
    return data;
}

// ---- text parsing helpers ----------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, long long& out) {
    s = trim(s);
    if (s.empty()) return false;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

std::string where(const fs::path& p, std::size_t line) { return p.filename().string() + ":" + std::to_string(line); }

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IngestionError("cannot open " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

}  // namespace

// ---- hydraulic ---------------------------------------------------------------

Dataset load_hydraulic(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IngestionError("not a directory: " + dir.string());
    const fs::path profile = dir / "profile.txt";
    if (!fs::exists(profile)) throw IngestionError("missing profile.txt in " + dir.string());

    std::vector<fs::path> sensors;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".txt") continue;
        const auto stem = e.path().stem().string();
        if (stem == "profile" || stem == "description" || stem == "documentation") continue;
        sensors.push_back(e.path());
    }
    if (sensors.empty()) throw IngestionError("no sensor files in " + dir.string());
    std::sort(sensors.begin(), sensors.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    // Condition values in the order they map to attribute value indices.
    static const std::array<std::vector<double>, 4> kValues{{
        {3, 20, 100},        // cooler
        {100, 90, 80, 73},   // valve
        {0, 1, 2},           // internal pump leakage
        {130, 115, 100, 90}  // accumulator
    }};

    const auto profile_lines = read_lines(profile);
    const std::size_t n = profile_lines.size();
    if (n == 0) throw IngestionError("profile.txt is empty");
    std::vector<std::array<int, 4>> tuples(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto fields = split_fields(profile_lines[i], '\t');
        if (fields.size() < 4) throw IngestionError(where(profile, i + 1) + ": expected at least 4 columns");
        for (std::size_t g = 0; g < 4; ++g) {
            double v;
            if (!parse_double(fields[g], v)) throw IngestionError(where(profile, i + 1) + ": not a number");
            const auto& vals = kValues[g];
            const auto it = std::find(vals.begin(), vals.end(), v);
            if (it == vals.end())
                throw IngestionError(where(profile, i + 1) + ": unexpected condition value " + std::string(fields[g]));
            tuples[i][g] = static_cast<int>(it - vals.begin());
        }
    }

    Eigen::Index width = 0;
    std::vector<Eigen::Index> widths;
    std::vector<std::vector<std::string>> sensor_lines;
    for (const auto& s : sensors) {
        auto lines = read_lines(s);
        if (lines.size() != n)
            throw IngestionError(s.filename().string() + ": " + std::to_string(lines.size()) + " cycles, profile has " +
                                 std::to_string(n));
        const auto w = static_cast<Eigen::Index>(split_fields(lines.front(), '\t').size());
        widths.push_back(w);
        width += w;
        sensor_lines.push_back(std::move(lines));
    }

    Dataset data;
    data.x = Matrix(static_cast<Eigen::Index>(n), width);
    Eigen::Index col = 0;
    for (std::size_t s = 0; s < sensors.size(); ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto fields = split_fields(sensor_lines[s][i], '\t');
            if (static_cast<Eigen::Index>(fields.size()) != widths[s])
                throw IngestionError(where(sensors[s], i + 1) + ": ragged row (" + std::to_string(fields.size()) +
                                     " values, expected " + std::to_string(widths[s]) + ")");
            for (std::size_t j = 0; j < fields.size(); ++j) {
                double v;
                if (!parse_double(fields[j], v))
                    throw IngestionError(where(sensors[s], i + 1) + ": bad value in column " + std::to_string(j + 1));
                data.x(static_cast<Eigen::Index>(i), col + static_cast<Eigen::Index>(j)) = v;
            }
        }
        col += widths[s];
    }

    const AttributeSchema schema({3, 4, 3, 4});
    auto radix = [](const std::array<int, 4>& t) { return ((t[0] * 4 + t[1]) * 3 + t[2]) * 4 + t[3]; };
    std::map<int, std::array<int, 4>> observed;
    for (const auto& t : tuples) observed.emplace(radix(t), t);
    std::map<int, CategoryId> id_of;
    std::vector<CategoryId> ids;
    Matrix a(static_cast<Eigen::Index>(observed.size()), schema.coded_width());
    for (const auto& [key, t] : observed) {
        const auto id = static_cast<CategoryId>(ids.size());
        id_of[key] = id;
        a.row(id) = encode_attributes(t, schema);
        ids.push_back(id);
    }
    data.attributes = FaultAttributeMatrix(schema, ids, a);
    for (const auto& t : tuples) data.labels.push_back(id_of.at(radix(t)));
    data.split.assign(n, Split::train);
    data.validate();
    return data;
}

// ---- Tennessee Eastman -----------------------------------------------------------

Dataset load_tep(const fs::path& data_csv, const fs::path& attribute_csv) {
    const auto attr_lines = read_lines(attribute_csv);
    std::vector<CategoryId> ids;
    std::vector<std::vector<int>> raw;
    std::size_t k = 0;
    for (std::size_t i = 0; i < attr_lines.size(); ++i) {
        if (trim(attr_lines[i]).empty()) continue;
        const auto fields = split_fields(attr_lines[i], ',');
        long long id;
        if (!parse_int(fields[0], id)) {
            if (ids.empty() && raw.empty()) continue;  // header
            throw IngestionError(where(attribute_csv, i + 1) + ": bad fault id");
        }
        if (fields.size() < 2) throw IngestionError(where(attribute_csv, i + 1) + ": no attribute columns");
        if (k == 0) k = fields.size() - 1;
        if (fields.size() - 1 != k) throw IngestionError(where(attribute_csv, i + 1) + ": ragged attribute row");
        std::vector<int> row;
        for (std::size_t j = 1; j < fields.size(); ++j) {
            long long v;
            if (!parse_int(fields[j], v) || (v != 0 && v != 1))
                throw IngestionError(where(attribute_csv, i + 1) + ": attribute entries must be 0 or 1");
            row.push_back(static_cast<int>(v));
        }
        ids.push_back(static_cast<CategoryId>(id));
        raw.push_back(std::move(row));
    }
    if (ids.empty()) throw IngestionError("attribute matrix file is empty: " + attribute_csv.string());

    const AttributeSchema schema(std::vector<Eigen::Index>(k, 2));
    Matrix a(static_cast<Eigen::Index>(ids.size()), schema.coded_width());
    for (std::size_t i = 0; i < ids.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = encode_attributes(raw[i], schema);

    Dataset data;
    try {
        data.attributes = FaultAttributeMatrix(schema, ids, a);
    } catch (const Error& e) {
        throw IngestionError(std::string("invalid attribute matrix: ") + e.what());
    }

    const auto lines = read_lines(data_csv);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto fields = split_fields(lines[i], ',');
        long long fault;
        if (!parse_int(fields[0], fault)) {
            if (rows.empty() && data.labels.empty()) continue;  // header
            throw IngestionError(where(data_csv, i + 1) + ": bad fault id");
        }
        if (static_cast<Eigen::Index>(fields.size()) != kTepWidth + 2)
            throw IngestionError(where(data_csv, i + 1) + ": expected " + std::to_string(kTepWidth) +
                                 " variables, found " + std::to_string(static_cast<long>(fields.size()) - 2));
        if (!data.attributes.contains(static_cast<CategoryId>(fault)))
            throw IngestionError(where(data_csv, i + 1) + ": unknown fault id " + std::to_string(fault));
        const auto tag = trim(fields[1]);
        Split s;
        if (tag == "train" || tag == "0")
            s = Split::train;
        else if (tag == "test" || tag == "1")
            s = Split::test;
        else
            throw IngestionError(where(data_csv, i + 1) + ": split must be train or test");
        std::vector<double> row(static_cast<std::size_t>(kTepWidth));
        for (Eigen::Index j = 0; j < kTepWidth; ++j)
            if (!parse_double(fields[static_cast<std::size_t>(j) + 2], row[static_cast<std::size_t>(j)]))
                throw IngestionError(where(data_csv, i + 1) + ": bad value in variable " + std::to_string(j + 1));
        rows.push_back(std::move(row));
        data.labels.push_back(static_cast<CategoryId>(fault));
        data.split.push_back(s);
    }
    if (rows.empty()) throw IngestionError("no data rows in " + data_csv.string());
    data.x = Matrix(static_cast<Eigen::Index>(rows.size()), kTepWidth);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (Eigen::Index j = 0; j < kTepWidth; ++j)
            data.x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    data.validate();
    return data;
}

}  // namespace izsfd
